"""Monte Carlo first-passage probabilities of Levy processes over moving boundaries."""

APPLICATION_NAME: str = "levy-passage"
PACKAGE_NAME: str = "levy_passage"
THREADS_ENV_VAR: str = "LEVY_PASSAGE_THREADS"
