from __future__ import annotations

import json
from logging import Logger

from pandas import DataFrame
from progress.bar import Bar

from levy_passage.db import POINTS_TABLE, RUNS_TABLE, Catalog
from levy_passage.experiment import (
    CURVE_SUFFIX,
    FIT_SUFFIX,
    MANIFEST_SUFFIX,
    RunResult,
)
from levy_passage.interfaces import LoadInterface
from levy_passage.logger import PassageLogger
from levy_passage.passage_mc import curve_to_csv
from levy_passage.utils import PassageUtils


class ExperimentLoad(LoadInterface):
    """Write a run's curve, fit and manifest, then record it in the catalog."""

    def __init__(self, passage_logger: PassageLogger, catalog: Catalog | None) -> None:
        self.catalog: Catalog | None = catalog
        self.logger: Logger = passage_logger.get_logger()

    def write_curve(self, run: RunResult) -> None:
        run.output_dir.mkdir(parents=True, exist_ok=True)
        curve_to_csv(run.curve, run.path(CURVE_SUFFIX))
        if run.fit is not None:
            PassageUtils.save_json(run.fit.model_dump(mode="json"), run.path(FIT_SUFFIX))
        self.logger.info("Wrote curve of %s to `%s`", run.config_hash, run.output_dir)

    def _tables(self, run: RunResult) -> dict[str, DataFrame]:
        manifest = run.manifest
        runs = DataFrame(
            [
                {
                    "config_hash": run.config_hash,
                    "name": manifest.config.get("name", "") if manifest else "",
                    "method": manifest.method if manifest else "",
                    "seed": manifest.seed if manifest else None,
                    "n_paths": run.curve.n_paths,
                    "created": manifest.created if manifest else None,
                    "code_version": manifest.code_version if manifest else "",
                    "delta_hat": run.fit.delta_hat if run.fit else None,
                    "delta_stderr": run.fit.stderr if run.fit else None,
                    "censored": manifest.censored if manifest else 0,
                    "config_json": json.dumps(
                        manifest.config if manifest else {}, sort_keys=True
                    ),
                }
            ]
        )
        points = DataFrame(
            {
                "config_hash": run.config_hash,
                "T": run.curve.horizons,
                "p": run.curve.estimates,
                "ci_low": run.curve.ci_low,
                "ci_high": run.curve.ci_high,
                "n": run.curve.n_paths,
            }
        )
        return {RUNS_TABLE: runs, POINTS_TABLE: points}

    def load_data(self, run: RunResult) -> bool:
        if run.manifest is not None:
            PassageUtils.save_json(
                run.manifest.model_dump(mode="json"), run.path(MANIFEST_SUFFIX)
            )
        if self.catalog is None:
            return True

        self.catalog.forget(run.config_hash)
        tables: dict[str, DataFrame] = self._tables(run)
        self.logger.info("Writing run %s to `%s`", run.config_hash, self.catalog._path)  # noqa: SLF001
        with Bar(
            f"Writing run to `{self.catalog._path}`... ",  # noqa: SLF001
            max=len(tables),
        ) as bar:
            table: str
            for table, content in tables.items():
                content.to_sql(
                    name=table,
                    con=self.catalog.engine,
                    if_exists="append",
                    index=False,
                )
                self.logger.info("Wrote data to `%s`", table)
                bar.next()

        return True
