"""Incentive and feasibility verdicts.

Certifies the two-tier menu's incentive compatibility empirically (assigned
option vs exhaustive enumeration), exhibits the profitable deviations that
break the naive and rebate auctions, checks the favorite-aware auction's
restricted truthfulness, and re-exposes the ex-post feasibility check.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, asdict

import numpy as np

from .closed_form import AuctionParams, InterimRates, a0, b0
from .distributions import DistSpec, Seed
from .fixed_point import feasibility_stats
from .mechanisms import kfa_prices

__all__ = [
    "DeviationWitness",
    "menu_bic_check",
    "find_naive_deviation",
    "find_lna_deviation",
    "kf_bic_check",
    "feasibility_check",
]


@dataclass(frozen=True)
class DeviationWitness:
    true_type: tuple[float, ...]
    misreport: tuple[float, ...]
    truthful_utility: float
    deviating_utility: float
    gain: float

    def to_dict(self) -> dict:
        return asdict(self)


def _assigned_options(
    types: np.ndarray, rates: InterimRates, params: AuctionParams
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized preferred-option rule over a (N, m) type batch.

    Returns (h_mask, l_mask, price, participate); mirrors
    ``mechanisms.nsn_preferred_option``.
    """
    a, b = rates.a, rates.b
    T, low = params.T, params.low_price
    N, m = types.shape
    is_t = types == T
    has_t = is_t.any(axis=1)
    jstar = types.argmax(axis=1)
    onehot = np.zeros_like(is_t)
    onehot[np.arange(N), jstar] = True
    h_mask = is_t | onehot
    l_mask = (types >= low) & ~h_mask
    vmax = types[np.arange(N), jstar]
    low_value = (types * l_mask).sum(axis=1)
    size_l = l_mask.sum(axis=1)
    participate = has_t | (a * vmax + b * low_value >= a * T + size_l * b * low)
    h_mask &= participate[:, None]
    l_mask &= participate[:, None]
    size_h = h_mask.sum(axis=1)
    size_l = l_mask.sum(axis=1)
    price = np.where(
        participate,
        b * size_l * low + a * size_h * T - b * (T - low) * (size_h - 1),
        0.0,
    )
    return h_mask, l_mask, price, participate


def _enumerate_options(m: int) -> tuple[np.ndarray, np.ndarray]:
    """All (H, L) item-set pairs as boolean mask rows: each item is in H, in
    L, or out; options with empty H are invalid (only the null option may
    have one).  3^m - 2^m rows."""
    h_rows = []
    l_rows = []
    for states in itertools.product((0, 1, 2), repeat=m):
        h = [s == 1 for s in states]
        if not any(h):
            continue
        h_rows.append(h)
        l_rows.append([s == 2 for s in states])
    return np.array(h_rows, dtype=bool), np.array(l_rows, dtype=bool)


def menu_bic_check(
    rates: InterimRates,
    params: AuctionParams,
    type_samples: int = 10**5,
    seed: Seed = Seed(2),
    tol_scale: float = 1e-9,
) -> dict:
    """Check that every sampled type's assigned option maximizes its utility
    over the whole menu.

    For m <= 6 the menu is enumerated exhaustively (3^m - 2^m options plus
    null); beyond that, the comparison set is the distinct options assigned
    to the sample.  Violations beyond tolerance 1e-9*T are counted, never
    thrown.
    """
    n, m, T = params.n, params.m, params.T
    a, b = rates.a, rates.b
    tol = tol_scale * T
    spec = DistSpec.truncated(T)
    gen = seed.generator()
    u = gen.random((type_samples, m))
    types = np.minimum(1.0 / (1.0 - u), T)

    h_mask, l_mask, price, participate = _assigned_options(types, rates, params)
    assigned_u = (
        a * (types * h_mask).sum(axis=1)
        + b * (types * l_mask).sum(axis=1)
        - price
    )

    if m <= 6:
        h_opts, l_opts = _enumerate_options(m)
    else:
        combined = np.concatenate([h_mask, l_mask], axis=1)
        distinct = np.unique(combined[participate], axis=0)
        h_opts, l_opts = distinct[:, :m], distinct[:, m:]
    size_h = h_opts.sum(axis=1)
    size_l = l_opts.sum(axis=1)
    opt_price = (
        b * size_l * params.low_price
        + a * size_h * T
        - b * (T - params.low_price) * (size_h - 1)
    )
    # utility matrix: N x K, plus the implicit null option at utility 0
    util = (
        types @ (a * h_opts + b * l_opts).T.astype(np.float64) - opt_price[None, :]
    )
    best = np.maximum(util.max(axis=1), 0.0)

    gap = best - assigned_u
    violations = int((gap > tol).sum())
    negative_participants = int((assigned_u < -tol)[participate].sum())
    return {
        "type_samples": int(type_samples),
        "options_enumerated": int(len(h_opts)),
        "violations": violations,
        "negative_utility_participants": negative_participants,
        "max_gap": float(gap.max()),
        "tolerance": tol,
        "passed": violations == 0 and negative_participants == 0,
    }


def find_naive_deviation(params: AuctionParams) -> DeviationWitness:
    """The all-T type's profitable deviation in the naive auction: lowering
    one coordinate to mn/T trades a zero-utility T-win for a discounted win."""
    n, m, T = params.n, params.m, params.T
    if m < 2:
        raise ValueError("needs at least two items")
    low = params.low_price
    b0_val = b0(n, m, T)
    true_type = tuple(T for _ in range(m))
    misreport = tuple(T for _ in range(m - 1)) + (low,)
    truthful = 0.0  # every win pays T for value T
    # the lowered item wins at the fallback rate and pays mn/T for value T
    deviating = b0_val * (T - low)
    return DeviationWitness(
        true_type=true_type,
        misreport=misreport,
        truthful_utility=truthful,
        deviating_utility=deviating,
        gain=deviating - truthful,
    )


def find_lna_deviation(
    params: AuctionParams,
    a0_val: float | None = None,
    b0_val: float | None = None,
) -> DeviationWitness:
    """A profitable deviation in the rebate auction: a type with one value
    extremely close to T and another in the band [mn/T, T) gains by rounding
    the near-T value up to T.

    Searches a geometric epsilon grid from T*1e-15 up to T/2 and returns the
    largest profitable epsilon; raises only if none is profitable (which
    would contradict the construction).
    """
    n, m, T = params.n, params.m, params.T
    if m < 2:
        raise ValueError("needs at least two items")
    low = params.low_price
    if a0_val is None:
        a0_val = a0(n, T)
    if b0_val is None:
        b0_val = b0(n, m, T)
    v_other = 0.5 * (low + T)  # mid-band value on the second item
    base_gain = b0_val * (v_other - low)

    def gain(eps: float) -> float:
        # truthful: no T value, wins nothing, utility 0.
        # misreport v_1 = T: wins item 1 at rate a0 paying T (loses a0*eps),
        # becomes fallback-eligible on item 2 at rate b0 paying mn/T.
        return base_gain - a0_val * eps

    eps_grid = np.geomspace(T * 1e-15, T / 2.0, 200)
    profitable = [e for e in eps_grid if gain(e) > 0.0]
    if not profitable:
        raise ValueError("no profitable epsilon found down to 1e-15*T")
    eps = max(profitable)
    true_type = (T - eps, v_other) + tuple(1.0 for _ in range(m - 2))
    misreport = (T, v_other) + tuple(1.0 for _ in range(m - 2))
    g = gain(eps)
    return DeviationWitness(
        true_type=true_type,
        misreport=misreport,
        truthful_utility=0.0,
        deviating_utility=g,
        gain=g,
    )


def lna_deviation_gain(params: AuctionParams, eps: float) -> float:
    """Exact interim deviation gain for the near-T type at a given epsilon
    (negative for epsilon far from the boundary)."""
    n, m, T = params.n, params.m, params.T
    low = params.low_price
    v_other = 0.5 * (low + T)
    return b0(n, m, T) * (v_other - low) - a0(n, T) * eps


def _kfa_win_probs(
    n: int, m: int, samples: int, seed: Seed, key: tuple[int, ...] = ()
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Monte Carlo interim win environment of one bidder in the favorite-
    aware auction: per item, (P[win high claim], P[no high on item],
    P[win low claim]).  By symmetry these are item-independent; per-item
    values are still returned for use with common random numbers."""
    log_h, low_price = kfa_prices(n, m)
    gen = seed.generator(*key)
    p_high_win = np.zeros(m)
    p_no_high = np.zeros(m)
    p_low_win = np.zeros(m)
    if n == 1:
        return np.ones(m), np.ones(m), np.ones(m)
    chunk = max(1, (1 << 21) // ((n - 1) * m))
    done = 0
    while done < samples:
        size = min(chunk, samples - done)
        u = gen.random((size, n - 1, m))
        vals = 1.0 / (1.0 - u)
        fav = vals.argmax(axis=2)
        onehot = np.zeros(vals.shape, dtype=bool)
        np.put_along_axis(onehot, fav[:, :, None], True, axis=2)
        high_claim = onehot & (np.log(vals) >= log_h)
        low_claim = ~onehot & (vals >= low_price)
        k = high_claim.sum(axis=1)  # (size, m)
        l = low_claim.sum(axis=1)
        p_high_win += (1.0 / (1.0 + k)).sum(axis=0)
        p_no_high += (k == 0).sum(axis=0)
        p_low_win += ((k == 0) / (1.0 + l)).sum(axis=0)
        done += size
    return p_high_win / samples, p_no_high / samples, p_low_win / samples


def kf_bic_check(
    n: int,
    m: int,
    type_samples: int = 200,
    opponent_samples: int = 20000,
    seed: Seed = Seed(3),
) -> dict:
    """Check truthfulness of the favorite-aware auction within same-favorite
    misreports, and search favorite-switching misreports for profitable
    deviations (reported, not asserted).

    A same-favorite misreport only toggles the posted-price purchase
    indicators, so with common-random-number win probabilities the best
    misreport utility is computed exactly per type by independent per-item
    optimization.
    """
    log_h, low_price = kfa_prices(n, m)
    high_price = math.exp(log_h) if log_h < 709.0 else math.inf
    p_high_win, _, p_low_win = _kfa_win_probs(n, m, opponent_samples, seed, (0,))
    se_scale = 1.0 / math.sqrt(opponent_samples)

    gen = seed.generator(1)
    u = gen.random((type_samples, m))
    types = 1.0 / (1.0 - u)
    # keep only distinct-valued types (ties have probability 0 anyway)
    keep = np.array([len(np.unique(t)) == m for t in types]) if m > 1 else np.ones(
        type_samples, dtype=bool
    )
    types = types[keep]

    max_same_fav_gain = 0.0
    switch_findings: list[dict] = []
    for t in types:
        fav = int(np.argmax(t))
        # truthful utility: buy favorite at H iff v_fav >= H, others at L iff
        # v >= L; each purchase indicator is independently optimal, so the
        # best same-favorite misreport can only match the truthful utility
        truthful = 0.0
        best = 0.0
        for j in range(m):
            if j == fav:
                margin = (t[j] - high_price) * p_high_win[j] if math.isfinite(
                    high_price
                ) else -math.inf
                claimed = math.log(t[j]) >= log_h
            else:
                margin = (t[j] - low_price) * p_low_win[j]
                claimed = t[j] >= low_price
            if claimed:
                truthful += margin
            best += max(margin, 0.0)
        gain = best - truthful
        max_same_fav_gain = max(max_same_fav_gain, gain)

        # favorite-switching search: swap the reported favorite with each
        # other item and evaluate utility with true values
        order = np.argsort(t)[::-1]
        for j2 in order[1:]:
            j2 = int(j2)
            r = t.copy()
            r[fav], r[j2] = t[j2], t[fav]
            util = 0.0
            for j in range(m):
                if j == j2:
                    if math.isfinite(high_price) and math.log(r[j]) >= log_h:
                        util += (t[j] - high_price) * p_high_win[j]
                else:
                    if r[j] >= low_price:
                        util += (t[j] - low_price) * p_low_win[j]
            if util > truthful:
                switch_findings.append(
                    {
                        "true_type": [float(x) for x in t],
                        "misreport": [float(x) for x in r],
                        "truthful_utility": float(truthful),
                        "deviating_utility": float(util),
                        "gain": float(util - truthful),
                    }
                )

    return {
        "types_checked": int(len(types)),
        "max_same_favorite_gain": float(max_same_fav_gain),
        "same_favorite_sigma": float(se_scale * low_price),
        "same_favorite_passed": bool(
            max_same_fav_gain <= 3.0 * se_scale * low_price
        ),
        "favorite_switch_findings": switch_findings[:20],
        "favorite_switch_count": len(switch_findings),
    }


def feasibility_check(
    rates: InterimRates,
    params: AuctionParams,
    profiles: int = 10**6,
    seed: Seed = Seed(4),
    threads: int = 1,
) -> dict:
    """Ex-post feasibility of a rate vector: realized high/low interim win
    rates must match (a, b) within 3 standard errors."""
    return feasibility_stats(rates, params, profiles, seed, threads)
