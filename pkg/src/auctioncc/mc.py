"""Deterministic chunked Monte Carlo driver.

Work is split into fixed-size chunks; chunk i always draws from the RNG
stream keyed by (seed, *key, i) and results are reduced in chunk order, so
every estimate is a pure function of (config, seed) regardless of how many
worker threads execute the chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .distributions import DistSpec, Seed

# target number of scalar draws per chunk; the chunk size is a function of
# the instance only, never of the thread count
_TARGET_DRAWS = 1 << 21


def chunk_size_for(n: int, m: int) -> int:
    return max(1, _TARGET_DRAWS // (n * m))


def chunk_plan(total: int, chunk: int) -> list[tuple[int, int]]:
    """(chunk index, chunk length) pairs covering ``total`` profiles."""
    plan = []
    idx = 0
    done = 0
    while done < total:
        size = min(chunk, total - done)
        plan.append((idx, size))
        done += size
        idx += 1
    return plan


def draw_profiles(
    spec: DistSpec, n: int, m: int, size: int, seed: Seed, key: tuple[int, ...]
) -> tuple[np.ndarray, np.random.Generator]:
    """Sample a (size, n, m) batch of profiles; returns the generator too so
    callers can draw tie-break uniforms from the same stream, in a fixed
    order, on both kernel backends."""
    gen = seed.generator(*key)
    u = gen.random((size, n, m))
    values = 1.0 / (1.0 - u)
    if spec.is_truncated:
        np.minimum(values, spec.truncation, out=values)
    return values, gen


def map_chunks(
    worker: Callable[[int, int], tuple],
    total: int,
    chunk: int,
    threads: int = 1,
) -> list[tuple]:
    """Run ``worker(chunk_index, size)`` over the chunk plan; results are
    returned in chunk-index order independent of scheduling."""
    plan = chunk_plan(total, chunk)
    if threads <= 1 or len(plan) <= 1:
        return [worker(idx, size) for idx, size in plan]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda t: worker(*t), plan))


@dataclass
class RunningMoments:
    """Streaming mean / standard error over per-profile statistics."""

    count: int = 0
    total: float = 0.0
    total_sq: float = 0.0

    def add(self, x: np.ndarray) -> None:
        self.count += x.size
        self.total += float(x.sum())
        self.total_sq += float(np.square(x).sum())

    def add_reduced(self, count: int, total: float, total_sq: float) -> None:
        self.count += count
        self.total += total
        self.total_sq += total_sq

    @property
    def mean(self) -> float:
        return self.total / self.count

    @property
    def variance(self) -> float:
        if self.count < 2:
            return 0.0
        mu = self.mean
        return max(0.0, (self.total_sq - self.count * mu * mu) / (self.count - 1))

    @property
    def stderr(self) -> float:
        if self.count == 0:
            return math.inf
        return math.sqrt(self.variance / self.count)


@dataclass
class BlockMeans:
    """Median-of-means accumulator for possibly heavy-tailed statistics.

    Chunk i feeds block i mod blocks, so the block assignment is independent
    of thread scheduling.  The reported stderr is the asymptotic standard
    error of the median of the block means (1.2533 * sd / sqrt(blocks)).
    """

    blocks: int = 32
    sums: np.ndarray = field(default=None)  # type: ignore[assignment]
    counts: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        self.sums = np.zeros(self.blocks)
        self.counts = np.zeros(self.blocks, dtype=np.int64)

    def add(self, chunk_index: int, x: np.ndarray) -> None:
        b = chunk_index % self.blocks
        self.sums[b] += float(x.sum())
        self.counts[b] += x.size

    def add_reduced(self, chunk_index: int, total: float, count: int) -> None:
        b = chunk_index % self.blocks
        self.sums[b] += total
        self.counts[b] += count

    def result(self) -> tuple[float, float]:
        mask = self.counts > 0
        means = self.sums[mask] / self.counts[mask]
        if means.size == 0:
            return math.nan, math.inf
        med = float(np.median(means))
        if means.size < 2:
            return med, math.inf
        se = 1.2533 * float(np.std(means, ddof=1)) / math.sqrt(means.size)
        return med, se
