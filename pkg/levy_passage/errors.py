"""Exception hierarchy and the stable CLI exit codes they map to."""

# Copyright (c) 2025 Nicholas M. Synovic

EXIT_OK: int = 0
EXIT_NO_COMMAND: int = 1
EXIT_INVALID_CONFIG: int = 2
EXIT_SIMULATION_ERROR: int = 3
EXIT_ZERO_SURVIVAL: int = 4


class PassageError(RuntimeError):
    """Base class for failures surfaced by the command-line runner."""

    exit_code: int = EXIT_SIMULATION_ERROR


class ConfigError(PassageError):
    """An experiment, suite or constants file failed validation."""

    exit_code: int = EXIT_INVALID_CONFIG


class SimulationError(PassageError):
    """A sampler or estimator could not produce a result."""

    exit_code: int = EXIT_SIMULATION_ERROR


class ZeroSurvivalError(PassageError):
    """A survival estimate is zero and no importance sampling was requested."""

    exit_code: int = EXIT_ZERO_SURVIVAL


class DomainError(ValueError):
    """An argument lies outside the domain of a formula."""


class InvalidTripletError(DomainError):
    """A triplet with a non-empty validation report was used for evaluation."""


class MomentError(DomainError):
    """The jump measure has no finite first moment."""


class NoJumpsOfRequiredSignError(DomainError):
    """The jump measure carries no mass of the sign a tilt needs."""


class IterateEscapedError(DomainError):
    """An iterate of H left the unit interval."""

    def __init__(self, level: int, value: float) -> None:
        """
        Record where the iteration left (0, 1].

        Args:
            level: Iteration level at which the value escaped.
            value: The escaped value.

        """
        self.level: int = level
        self.value: float = value
        msg = f"iterate escaped (0, 1] at level {level} with value {value!r}"
        super().__init__(msg)
