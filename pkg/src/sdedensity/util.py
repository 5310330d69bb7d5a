"""Small shared helpers: MC estimates, deterministic chunked execution, formatting."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class MCEstimate:
    """A Monte-Carlo mean with its standard error and sample count."""

    value: float
    std_error: float
    n_samples: int

    def within(self, target: float, k: float = 3.0) -> bool:
        return abs(self.value - target) <= k * self.std_error


def mean_se(samples: np.ndarray) -> MCEstimate:
    """Sample mean and standard error of a 1-d array."""
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    m = float(np.mean(samples))
    if n < 2:
        return MCEstimate(m, float("inf"), n)
    se = float(np.std(samples, ddof=1) / np.sqrt(n))
    return MCEstimate(m, se, n)


def map_ordered(fn: Callable, args: Sequence, threads: int = 1) -> list:
    """Apply `fn` over `args`, returning results in argument order.

    With threads > 1 the work is farmed to a thread pool, but results are
    always collected in submission order, so any reduction performed over
    the returned list is independent of scheduling.
    """
    if threads <= 1 or len(args) <= 1:
        return [fn(a) for a in args]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, args))


def kahan_merge(partials: Iterable[np.ndarray]) -> np.ndarray:
    """Sum an ordered sequence of equally-shaped arrays with compensated addition.

    The merge order is the iteration order, so the result is bitwise
    reproducible for a fixed partition of the work.
    """
    total = None
    comp = None
    for part in partials:
        part = np.asarray(part)
        if total is None:
            total = part.astype(part.dtype, copy=True)
            comp = np.zeros_like(total)
            continue
        y = part - comp
        t = total + y
        comp = (t - total) - y
        total = t
    if total is None:
        raise ValueError("no partials to merge")
    return total


def fmt_float(x: float) -> str:
    """Round-trip-stable decimal rendering of a float (for CSV output)."""
    return format(float(x), ".17g")


def path_chunks(n: int, size: int) -> list[tuple[int, int]]:
    """Fixed [start, stop) chunk boundaries; independent of worker count."""
    return [(s, min(s + size, n)) for s in range(0, n, size)]
