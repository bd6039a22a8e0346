from __future__ import annotations

from abc import ABC, abstractmethod
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from levy_passage.experiment import RunResult
    from levy_passage.passage_mc import SurvivalEstimate


class PathTask(ABC):
    width: int = 2

    @abstractmethod
    def evaluate(self, stream_index: int) -> tuple[float, ...]: ...


class EstimatorInterface(ABC):
    @abstractmethod
    def estimate(
        self,
        horizon: float,
        n_paths: int,
        seed: int,
        stream_offset: int = 0,
    ) -> SurvivalEstimate: ...


class LoadInterface(ABC):
    @abstractmethod
    def load_data(self, run: RunResult) -> bool: ...
