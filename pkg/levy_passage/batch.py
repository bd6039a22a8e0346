"""
Chunked evaluation of per-path tasks over a range of stream indices.

Chunks are contiguous index ranges and their results are concatenated in
index order, so the output never depends on the worker count.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from itertools import repeat

import numpy as np

from levy_passage.interfaces import PathTask

LOGGER: logging.Logger = logging.getLogger(__name__)

CHUNKS_PER_WORKER: int = 4
MIN_PATHS_PER_CHUNK: int = 256


def _evaluate_chunk(task: PathTask, first: int, stop: int) -> np.ndarray:
    rows = np.empty((stop - first, task.width), dtype=np.float64)
    for offset, index in enumerate(range(first, stop)):
        rows[offset] = task.evaluate(index)
    return rows


def evaluate_streams(
    task: PathTask,
    first: int,
    count: int,
    threads: int = 1,
) -> np.ndarray:
    """
    Evaluate ``task`` on stream indices ``first, ..., first + count - 1``.

    Args:
        task: Picklable per-path task.
        first: First stream index.
        count: Number of paths.
        threads: Worker processes; 1 evaluates inline.

    Returns:
        Array of shape ``(count, task.width)`` in stream order.

    """
    chunks: int = min(threads * CHUNKS_PER_WORKER, max(count // MIN_PATHS_PER_CHUNK, 1))
    if threads <= 1 or chunks <= 1:
        return _evaluate_chunk(task, first, first + count)

    bounds = np.linspace(first, first + count, chunks + 1).astype(np.int64)
    LOGGER.debug("Evaluating %d paths in %d chunks on %d workers", count, chunks, threads)
    with ProcessPoolExecutor(max_workers=threads) as pool:
        parts = list(
            pool.map(
                _evaluate_chunk,
                repeat(task),
                bounds[:-1].tolist(),
                bounds[1:].tolist(),
            )
        )
    return np.concatenate(parts, axis=0)
