"""Equal-Revenue value distributions: sampling, CDF/quantile, virtual values,
and the favorite/non-favorite marginals of a bundle of m i.i.d. values.

The untruncated distribution has CDF 1 - 1/x on [1, inf).  The truncated
variant caps values at T >= 1 and carries an atom of mass 1/T at T.  Sampling
is inverse-CDF with a clamp, so truncated draws equal to T are bit-equal to T
and downstream code may branch on ``v == T`` exactly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Kind",
    "DistSpec",
    "Seed",
    "sample",
    "cdf",
    "pdf_density",
    "atom_mass",
    "quantile",
    "virtual_value",
    "favorite_marginal",
    "nonfavorite_marginal",
    "conditional_mean_below",
    "conditional_variance_below",
    "max_quantile_sample",
]


class Kind(enum.Enum):
    EQUAL_REVENUE = "equal_revenue"
    TRUNCATED_EQUAL_REVENUE = "truncated_equal_revenue"


@dataclass(frozen=True)
class DistSpec:
    """Descriptor for an Equal-Revenue value distribution.

    ``truncation`` is present iff ``kind`` is the truncated variant.
    """

    kind: Kind
    truncation: float | None = None

    def __post_init__(self) -> None:
        if self.kind is Kind.TRUNCATED_EQUAL_REVENUE:
            if self.truncation is None:
                raise ValueError("truncated spec requires a truncation point")
            if not (self.truncation >= 1.0):
                raise ValueError(f"truncation must be >= 1, got {self.truncation}")
        elif self.truncation is not None:
            raise ValueError("untruncated spec must not carry a truncation point")

    @classmethod
    def equal_revenue(cls) -> "DistSpec":
        return cls(Kind.EQUAL_REVENUE)

    @classmethod
    def truncated(cls, T: float) -> "DistSpec":
        return cls(Kind.TRUNCATED_EQUAL_REVENUE, float(T))

    @property
    def is_truncated(self) -> bool:
        return self.kind is Kind.TRUNCATED_EQUAL_REVENUE


@dataclass(frozen=True)
class Seed:
    """Reproducible RNG root.  (root, stream, extra key) -> independent
    generator; identical keys always yield identical draws."""

    root: int
    stream: int = 0

    def generator(self, *key: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.root, spawn_key=(self.stream, *key))
        return np.random.default_rng(ss)

    def with_stream(self, stream: int) -> "Seed":
        return Seed(self.root, stream)


def sample(spec: DistSpec, seed: Seed, count: int, *key: int) -> np.ndarray:
    """Draw ``count`` i.i.d. values via inverse-CDF; truncated draws clamp to T."""
    if count < 0:
        raise ValueError("count must be >= 0")
    u = seed.generator(*key).random(count)
    v = 1.0 / (1.0 - u)
    if spec.is_truncated:
        np.minimum(v, spec.truncation, out=v)
    return v


def sample_values(
    spec: DistSpec, seed: Seed, shape: tuple[int, ...], *key: int
) -> np.ndarray:
    """Array-shaped variant of :func:`sample` (one uniform per entry)."""
    u = seed.generator(*key).random(shape)
    v = 1.0 / (1.0 - u)
    if spec.is_truncated:
        np.minimum(v, spec.truncation, out=v)
    return v


def cdf(spec: DistSpec, x: float) -> float:
    if x < 1.0:
        return 0.0
    if spec.is_truncated and x >= spec.truncation:
        return 1.0
    return 1.0 - 1.0 / x


def pdf_density(spec: DistSpec, x: float) -> float:
    """Density of the continuous part (excludes the atom at T)."""
    if x < 1.0:
        return 0.0
    if spec.is_truncated and x >= spec.truncation:
        return 0.0
    return 1.0 / (x * x)


def atom_mass(spec: DistSpec, x: float) -> float:
    if spec.is_truncated and x == spec.truncation:
        return 1.0 / spec.truncation
    return 0.0


def quantile(spec: DistSpec, q: float) -> float:
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"quantile level must lie in [0, 1], got {q}")
    if q == 1.0:
        return spec.truncation if spec.is_truncated else math.inf
    v = 1.0 / (1.0 - q)
    if spec.is_truncated:
        return min(v, spec.truncation)
    return v


def virtual_value(spec: DistSpec, x: float) -> float:
    """Ironed virtual value: 0 on the continuous part, T at the atom."""
    if x < 1.0:
        raise ValueError(f"value below support: {x}")
    if spec.is_truncated:
        if x > spec.truncation:
            raise ValueError(f"value above truncation: {x}")
        return spec.truncation if x == spec.truncation else 0.0
    return 0.0


def _pow1m(inv: float, k: float) -> float:
    """(1 - inv)^k via exp(k*log1p(-inv)); avoids cancellation for small inv."""
    if inv >= 1.0:
        return 0.0 if k > 0 else 1.0
    return math.exp(k * math.log1p(-inv))


def favorite_marginal(m: int, x: float) -> tuple[float, float]:
    """(CDF, pdf) of the max of m i.i.d. untruncated ER values."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if x < 1.0:
        return 0.0, 0.0
    c = _pow1m(1.0 / x, m)
    p = m * _pow1m(1.0 / x, m - 1) / (x * x)
    return c, p


def nonfavorite_marginal(m: int, x: float) -> tuple[float, float]:
    """(CDF, pdf) of a uniformly chosen non-maximal coordinate among m i.i.d.
    untruncated ER values.  Undefined for m = 1."""
    if m < 2:
        raise ValueError("non-favorite marginal requires m >= 2")
    if x < 1.0:
        return 0.0, 0.0
    w = 1.0 - 1.0 / x
    norm = 1.0 - 1.0 / m
    c = (w - w**m / m) / norm
    p = (1.0 - w ** (m - 1)) / (x * x) / norm
    return c, p


def conditional_mean_below(v: float) -> float:
    """E[X | X <= v] for untruncated ER; tends to 1 as v -> 1+."""
    if v <= 1.0:
        raise ValueError("conditioning point must exceed 1")
    return math.log(v) / (1.0 - 1.0 / v)


def conditional_variance_below(v: float) -> float:
    if v <= 1.0:
        raise ValueError("conditioning point must exceed 1")
    mean = conditional_mean_below(v)
    return v - mean * mean


def max_quantile_sample(
    n_plus_c: int, seed: Seed, count: int = 1, *key: int
) -> np.ndarray:
    """Max of n+c independent uniform quantiles; CDF q^(n+c).  Sampled
    directly as U^(1/(n+c))."""
    if n_plus_c < 1:
        raise ValueError("n_plus_c must be >= 1")
    u = seed.generator(*key).random(count)
    return u ** (1.0 / n_plus_c)
