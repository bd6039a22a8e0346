from logging import Logger
from pathlib import Path

from sqlalchemy import (
    Column,
    Engine,
    Float,
    ForeignKey,
    Integer,
    MetaData,
    String,
    Table,
    create_engine,
    delete,
)

from levy_passage.logger import PassageLogger

RUNS_TABLE: str = "_runs"
POINTS_TABLE: str = "_survival_points"


class Catalog:
    def __init__(self, passage_logger: PassageLogger, db_path: Path) -> None:
        self._path: Path = db_path.absolute()

        self.engine: Engine = create_engine(url=f"sqlite:///{self._path}")
        self.logger: Logger = passage_logger.get_logger()
        self.metadata: MetaData = MetaData()

        self._create_tables()

    def _create_tables(self) -> None:
        self.runs: Table = Table(
            RUNS_TABLE,
            self.metadata,
            Column("config_hash", String, primary_key=True),
            Column("name", String),
            Column("method", String),
            Column("seed", Integer),
            Column("n_paths", Integer),
            Column("created", Integer),
            Column("code_version", String),
            Column("delta_hat", Float, nullable=True),
            Column("delta_stderr", Float, nullable=True),
            Column("censored", Integer),
            Column("config_json", String),
        )

        self.points: Table = Table(
            POINTS_TABLE,
            self.metadata,
            Column("id", Integer, primary_key=True, autoincrement=True),
            Column("config_hash", String, ForeignKey(f"{RUNS_TABLE}.config_hash")),
            Column("T", Float),
            Column("p", Float),
            Column("ci_low", Float),
            Column("ci_high", Float),
            Column("n", Integer),
        )

        self.metadata.create_all(bind=self.engine, checkfirst=True)

    def forget(self, config_hash: str) -> None:
        """Delete every row of a run so that it can be written again."""
        with self.engine.begin() as connection:
            connection.execute(
                delete(self.points).where(self.points.c.config_hash == config_hash)
            )
            connection.execute(
                delete(self.runs).where(self.runs.c.config_hash == config_hash)
            )
        self.logger.debug("Cleared catalog rows of %s", config_hash)
