"""Damped iteration solver for the implicit interim rates (a, b, q_1..q_{m-1})
of the two-tier menu auction.

The option-size probabilities q_ell are tiny (O(b/(a*n))), so the natural
contraction candidate is: start at q = 0 (i.e. (a0, b0)), estimate q from the
current rates by band-restricted Monte Carlo, damp the update, and re-apply
the closed-form rates map.  Convergence here is an empirical finding, not a
theorem; the solver reports its residual and the distance from (a0, b0)
rather than asserting uniqueness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import mc
from .closed_form import (
    AuctionParams,
    InterimRates,
    bound_suite,
    rates_map,
)
from .distributions import DistSpec, Seed
from .kernels import nsn_batch

__all__ = [
    "FixedPointSolution",
    "estimate_q_ell",
    "solve",
    "validate",
    "feasibility_stats",
]

SCHEMA_VERSION = 1


@dataclass
class FixedPointSolution:
    rates: InterimRates
    iterations: int
    residual: float
    q_stderr: tuple[float, ...]
    seed: Seed
    converged: bool
    trace: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "a": self.rates.a,
            "b": self.rates.b,
            "q": list(self.rates.q),
            "p_high": self.rates.p_high,
            "p_low": self.rates.p_low,
            "iterations": self.iterations,
            "residual": self.residual,
            "q_stderr": list(self.q_stderr),
            "seed_root": self.seed.root,
            "seed_stream": self.seed.stream,
            "converged": self.converged,
            "trace": list(self.trace),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FixedPointSolution":
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(
                f"unsupported solution schema: {doc.get('schema_version')}"
            )
        rates = InterimRates(
            a=doc["a"],
            b=doc["b"],
            q=tuple(doc["q"]),
            p_high=doc["p_high"],
            p_low=doc["p_low"],
        )
        return cls(
            rates=rates,
            iterations=doc["iterations"],
            residual=doc["residual"],
            q_stderr=tuple(doc["q_stderr"]),
            seed=Seed(doc["seed_root"], doc["seed_stream"]),
            converged=doc["converged"],
            trace=tuple(doc.get("trace", ())),
        )


def _band_sample(
    low: float, T: float, gen: np.random.Generator, shape: tuple[int, ...]
) -> np.ndarray:
    """Inverse-CDF sampling of the base distribution restricted to [low, T)."""
    u = gen.random(shape)
    return 1.0 / (1.0 / low - u * (1.0 / low - 1.0 / T))


def estimate_q_ell(
    ell: int,
    rates: InterimRates,
    params: AuctionParams,
    samples: int,
    seed: Seed,
    key: tuple[int, ...] = (),
) -> tuple[float, float]:
    """Monte Carlo estimate of q_ell: the probability that a type has its
    favorite plus exactly ell other items in the band [mn/T, T), the rest
    below, and clears the no-T participation inequality.

    The region mass and the 1/(ell+1) favorite-position symmetry factor are
    applied analytically; only the conditional inequality probability is
    sampled (band-restricted inverse CDF), so the estimate is unbiased.
    """
    n, m, T = params.n, params.m, params.T
    low = params.low_price
    if not 1 <= ell <= m - 1:
        raise ValueError(f"ell must be in [1, {m - 1}], got {ell}")
    if low >= T:
        raise ValueError("empty band: mn/T >= T")
    band_mass = T / (m * n) - 1.0 / T
    below_mass = 1.0 - T / (m * n)
    region = band_mass ** (ell + 1) * below_mass ** (m - ell - 1) / (ell + 1)
    gen = seed.generator(*key)
    a, b = rates.a, rates.b
    threshold = a * T + ell * b * low
    hits = 0
    remaining = samples
    chunk = max(1, (1 << 21) // (ell + 1))
    while remaining > 0:
        size = min(chunk, remaining)
        v = _band_sample(low, T, gen, (size, ell + 1))
        vmax = v.max(axis=1)
        total = v.sum(axis=1)
        hits += int((a * vmax + b * (total - vmax) >= threshold).sum())
        remaining -= size
    p_hat = hits / samples
    q = region * p_hat
    stderr = region * math.sqrt(max(p_hat * (1.0 - p_hat), 1.0 / samples) / samples)
    return q, stderr


def _rel_change(new: InterimRates, old: InterimRates) -> float:
    da = abs(new.a - old.a) / old.a if old.a > 0 else abs(new.a - old.a)
    db = abs(new.b - old.b) / old.b if old.b > 0 else abs(new.b - old.b)
    return max(da, db)


def solve(
    params: AuctionParams,
    tol: float = 1e-9,
    max_iter: int = 50,
    damping: float = 0.5,
    samples: int = 10**6,
    seed: Seed = Seed(0),
) -> FixedPointSolution:
    """Solve the implicit rate system by damped iteration from q = 0.

    Each iteration draws fresh q estimates from a stream keyed by the
    iteration index (the iteration map is deterministic given the seed).
    Termination: relative change of (a, b) at most tol plus three propagated
    Monte Carlo standard errors.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    n, m, T = params.n, params.m, params.T
    if T < math.sqrt(m * n):
        raise ValueError("requires T >= sqrt(mn)")
    q = tuple(0.0 for _ in range(m - 1))
    rates = rates_map(q, n, m, T)
    if m == 1:
        return FixedPointSolution(
            rates=rates,
            iterations=1,
            residual=0.0,
            q_stderr=(),
            seed=seed,
            converged=True,
            trace=(0.0,),
        )
    trace: list[float] = []
    q_se = tuple(0.0 for _ in range(m - 1))
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        estimates = [
            estimate_q_ell(ell, rates, params, samples, seed, (it, ell))
            for ell in range(1, m)
        ]
        q_est = tuple(e[0] for e in estimates)
        q_se = tuple(e[1] for e in estimates)
        q = tuple(
            qo + damping * (qe - qo) for qo, qe in zip(q, q_est)
        )
        new_rates = rates_map(q, n, m, T)
        residual = _rel_change(new_rates, rates)
        # propagate the q noise through the map to get the residual floor
        q_hi = tuple(min(1.0, qi + si) for qi, si in zip(q, q_se))
        sigma = _rel_change(rates_map(q_hi, n, m, T), new_rates)
        trace.append(residual)
        rates = new_rates
        if residual <= tol + 3.0 * sigma:
            converged = True
            break
    return FixedPointSolution(
        rates=rates,
        iterations=it,
        residual=trace[-1],
        q_stderr=q_se,
        seed=seed,
        converged=converged,
        trace=tuple(trace),
    )


def feasibility_stats(
    rates: InterimRates,
    params: AuctionParams,
    profiles: int,
    seed: Seed,
    threads: int = 1,
    key: tuple[int, ...] = (),
) -> dict:
    """Simulate the menu auction ex post and compare realized interim win
    rates against (a, b) with ratio-estimator z-scores.

    Per item with k high and l low claimants, a served tier hands each
    claimant conditional win probability 1/count, so the tier contributes
    exactly 1 to the win tally; the realized rate is (#served items)/(#claims)
    and its variance comes from the delta method on that ratio.
    """
    n, m, T = params.n, params.m, params.T
    spec = DistSpec.truncated(T)
    chunk = mc.chunk_size_for(n, m)
    totals = np.zeros(8)

    def worker(idx: int, size: int) -> tuple:
        values, _ = mc.draw_profiles(spec, n, m, size, seed, (*key, idx))
        _, stats = nsn_batch(values, rates.a, rates.b, T, params.low_price)
        return (stats,)

    for (stats,) in mc.map_chunks(worker, profiles, chunk, threads):
        totals += stats

    items, sk, sk2, served_h, sl, sl2, served_l, slu = totals

    def ratio_z(num: float, den: float, den2: float, cross: float, rate: float):
        if den == 0:
            return math.nan, math.inf, math.nan
        est = num / den
        # Var(1(served) - rate*claims) per item, summed; numerator indicator
        # is 0/1 so its square is itself
        var_d = num + rate * rate * den2 - 2.0 * rate * cross
        se = math.sqrt(max(var_d, 0.0)) / den
        z = (est - rate) / se if se > 0 else math.inf
        return est, se, z

    # for the high tier the cross moment sum(1(k>=1)*k) equals sum(k)
    a_hat, a_se, a_z = ratio_z(served_h, sk, sk2, sk, rates.a)
    b_hat, b_se, b_z = ratio_z(served_l, sl, sl2, slu, rates.b)
    return {
        "profiles": int(profiles),
        "items": int(items),
        "a": rates.a,
        "a_hat": a_hat,
        "a_se": a_se,
        "a_z": a_z,
        "b": rates.b,
        "b_hat": b_hat,
        "b_se": b_se,
        "b_z": b_z,
        "passed": bool(abs(a_z) <= 3.0 and (math.isnan(b_z) or abs(b_z) <= 3.0)),
    }


def validate(
    solution: FixedPointSolution,
    params: AuctionParams,
    profiles: int = 10**6,
    seed: Seed = Seed(1),
    threads: int = 1,
) -> dict:
    """Full consistency report for a solved rate vector: rate inequalities,
    the bound suite, and ex-post feasibility."""
    n, m, T = params.n, params.m, params.T
    if T < math.sqrt(m * n):
        raise ValueError("requires T >= sqrt(mn)")
    rates = solution.rates
    bounds = bound_suite(rates, n, m, T)
    feas = feasibility_stats(rates, params, profiles, seed, threads)
    x = n / T
    ratio_bound = x * math.exp(-x) / (-math.expm1(-x))
    checks = {
        "converged": bool(solution.converged),
        "a_geq_b": bool(rates.a >= rates.b),
        "ratio_bound": bool(rates.a > 0 and rates.b / rates.a <= ratio_bound),
        "bound_suite": bool(bounds["all_passed"]),
        "feasibility": bool(feas["passed"]),
    }
    return {
        "checks": checks,
        "passed": all(checks.values()),
        "bounds": bounds,
        "feasibility": feas,
        "residual": solution.residual,
    }
