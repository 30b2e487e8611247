"""Per-trial random streams and an order-preserving trial pool.

Trial ``t`` of stream ``s`` under master seed ``seed`` always draws from the
same Philox generator, whatever process runs it and in whatever order, so
results do not depend on the worker count.
"""

from __future__ import annotations

import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence

import numpy as np

WORKERS_ENV = "QNET_WORKERS"


def stream_id(name: str | int) -> int:
    if isinstance(name, int):
        return name
    return zlib.crc32(name.encode())


def trial_rng(seed: int, stream: str | int, trial: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(stream_id(stream), int(trial)))
    return np.random.Generator(np.random.Philox(ss))


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _run_chunk(fn, lo, hi):
    return [fn(t) for t in range(lo, hi)]


def map_trials(fn: Callable[[int], object], trials: int, workers: int | None = None,
               chunk: int | None = None) -> list:
    """[fn(0), ..., fn(trials - 1)] computed by a process pool.

    ``fn`` must be picklable (a module-level function or functools.partial).
    The output order is the trial order regardless of ``workers``.
    """
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or trials < 2:
        return [fn(t) for t in range(trials)]
    chunk = chunk or max(1, trials // (4 * workers))
    bounds = [(lo, min(trials, lo + chunk)) for lo in range(0, trials, chunk)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(_run_chunk, [fn] * len(bounds), *zip(*bounds))
        return [r for part in parts for r in part]


def binomial_stderr(hits: float, trials: int) -> float:
    if trials <= 0:
        return float("nan")
    p = hits / trials
    return float(np.sqrt(max(p * (1.0 - p), 0.0) / trials))


def combine_stderr(values: Sequence[float]) -> float:
    return float(np.sqrt(sum(v * v for v in values)))
