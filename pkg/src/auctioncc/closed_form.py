"""Closed-form revenue expressions, interim rates, and inequality bounds for
n additive bidders with i.i.d. values from the truncated Equal-Revenue
distribution on m items.

Numerical hygiene: every power of (1 - p) is evaluated as exp(k*log1p(-p)),
and near-cancelling brackets such as 1 - (1-1/T)^m - (m/T)(1-1/T)^{m-1}
(which is O(m^2/T^2)) are rewritten through expm1/log1p so no leading-order
cancellation happens in floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "AuctionParams",
    "InterimRates",
    "binom",
    "srev",
    "srev_increment_bound",
    "naive_gain",
    "a0",
    "b0",
    "expected_subsidies",
    "lna_gain",
    "subsidy_bracket",
    "rates_map",
    "nsn_revenue_per_bidder",
    "bound_suite",
    "grand_bundle_forms",
    "second_highest_favorite_cdf",
    "kfa_forms",
]


def _pow1m(p: float, k: float) -> float:
    """(1 - p)^k without forming 1 - p."""
    if p >= 1.0:
        return 0.0 if k > 0 else 1.0
    return math.exp(k * math.log1p(-p))


def _one_minus_pow1m(p: float, k: float) -> float:
    """1 - (1 - p)^k, accurate when p*k is small."""
    if p >= 1.0:
        return 1.0 if k > 0 else 0.0
    return -math.expm1(k * math.log1p(-p))


def binom(n: int, k: int) -> float:
    """Binomial coefficient: exact integer arithmetic up to n <= 60,
    log-gamma beyond (q_ell sums need exact small-m combinatorics)."""
    if k < 0 or k > n:
        return 0.0
    if n <= 60:
        return float(math.comb(n, k))
    return math.exp(
        math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
    )


@dataclass(frozen=True)
class AuctionParams:
    """Instance size (n bidders, m items) and truncation point T.

    ``lam`` records the scale multiplier when T was derived as lam*sqrt(nm).
    ``t_below_n`` flags the regime T < n that the scaling analysis assumes.
    """

    n: int
    m: int
    T: float
    lam: float | None = None

    def __post_init__(self) -> None:
        if self.n < 1 or self.m < 1:
            raise ValueError("need n >= 1 and m >= 1")
        if not (self.T >= 1.0):
            raise ValueError(f"truncation must be >= 1, got {self.T}")

    @classmethod
    def from_lambda(cls, n: int, m: int, lam: float) -> "AuctionParams":
        if lam <= 1.0:
            raise ValueError("scale multiplier must exceed 1")
        return cls(n, m, lam * math.sqrt(n * m), lam)

    @property
    def low_price(self) -> float:
        return self.m * self.n / self.T

    @property
    def t_below_n(self) -> bool:
        return self.T < self.n

    @property
    def lam_effective(self) -> float:
        return self.T / math.sqrt(self.n * self.m)


@dataclass(frozen=True)
class InterimRates:
    """Interim win probabilities of the two-tier menu: a for high slots,
    b for low slots, plus the per-size option probabilities q[ell-1]."""

    a: float
    b: float
    q: tuple[float, ...] = ()
    p_high: float = 0.0
    p_low: float = 0.0

    def __post_init__(self) -> None:
        for name, val in (("a", self.a), ("b", self.b)):
            if not (0.0 <= val <= 1.0):
                raise ValueError(f"rate {name}={val} outside [0, 1]")


def srev(n_prime: int, m: int, T: float) -> float:
    """Expected revenue of selling each of m items separately at the optimal
    posted/reserve price T to n_prime bidders: m*T*(1 - (1-1/T)^n')."""
    if n_prime < 1:
        raise ValueError("need at least one bidder")
    if T < 1.0:
        raise ValueError("truncation must be >= 1")
    return m * T * _one_minus_pow1m(1.0 / T, n_prime)


def srev_increment_bound(n: int, x: int, m: int, T: float) -> tuple[float, float]:
    """(exact, bound) for the revenue gained by adding x bidders to a
    separate-sale auction: exact = m*T*(1-1/T)^n*(1-(1-1/T)^x), bound =
    m*x*(1-1/T)^n.  Always exact <= bound."""
    if x < 0:
        raise ValueError("added bidder count must be >= 0")
    if T < 1.0:
        raise ValueError("truncation must be >= 1")
    survive = _pow1m(1.0 / T, n)
    exact = m * T * survive * _one_minus_pow1m(1.0 / T, x)
    bound = m * x * survive
    return exact, bound


def naive_gain(n: int, m: int, T: float) -> float:
    """Exact gain of the two-price auction (price T, fallback price mn/T for
    bidders holding a T elsewhere) over separate sale at reserve T.

    Per item: the fallback price sells iff nobody hits T on the item and at
    least one bidder both values it in [mn/T, T) and holds a T elsewhere.
    """
    low = m * n / T
    if low > T:
        raise ValueError("fallback price exceeds truncation; no low band")
    if m == 1:
        return 0.0
    rho = ((T / (m * n) - 1.0 / T) / (1.0 - 1.0 / T)) * _one_minus_pow1m(
        1.0 / T, m - 1
    )
    return m * low * _pow1m(1.0 / T, n) * _one_minus_pow1m(rho, n)


def a0(n: int, T: float) -> float:
    """Interim probability a T-bidder wins the item (uniform among T-bidders):
    (T/n)(1 - (1-1/T)^n)."""
    return (T / n) * _one_minus_pow1m(1.0 / T, n)


def _b_from_probs(p_high: float, p_low: float, n: int, exponent: int) -> float:
    """The low-slot interim rate: P[no high among `exponent` others] times
    E[1/(1 + #low others)] with low probability conditioned on not-high."""
    if p_low <= 0.0:
        return 0.0
    if p_high >= 1.0:
        raise ValueError("degenerate: high probability >= 1")
    p_cond = p_low / (1.0 - p_high)
    no_high = _pow1m(p_high, exponent)
    return no_high * _one_minus_pow1m(p_cond, n) / (n * p_cond)


def b0(n: int, m: int, T: float) -> float:
    """Low-slot rate with all q_ell = 0: P[high] = 1/T and
    P[low] = (1-(1-1/T)^{m-1})(T/(mn) - 1/T)."""
    p_low = _one_minus_pow1m(1.0 / T, m - 1) * (T / (m * n) - 1.0 / T)
    return _b_from_probs(1.0 / T, p_low, n, n - 1)


def subsidy_bracket(m: int, T: float) -> float:
    """1 - (1-1/T)^m - (m/T)(1-1/T)^{m-1}, evaluated without cancellation.

    Rewritten as -expm1((m-1)log1p(-1/T) + log1p((m-1)/T)); the bracket is
    O(m^2/T^2) while each term is O(1).
    """
    if m == 1:
        return 0.0
    s = (m - 1) * math.log1p(-1.0 / T) + math.log1p((m - 1) / T)
    return -math.expm1(s)


def expected_subsidies(m: int, T: float) -> float:
    """Expected number of subsidized item-wins per bidder in the rebate
    auction: m/T - 1 + (1-1/T)^m."""
    return m / T + math.expm1(m * math.log1p(-1.0 / T))


def lna_gain(n: int, m: int, T: float, b_val: float) -> float:
    """Exact revenue gap between the rebate auction (truthful play) and
    separate sale: b*m*n^2*(T/(mn) - 1/T)*bracket."""
    if not (0.0 <= b_val <= 1.0):
        raise ValueError("rate must lie in [0, 1]")
    return b_val * m * n * n * (T / (m * n) - 1.0 / T) * subsidy_bracket(m, T)


def rates_map(
    q: tuple[float, ...] | list[float], n: int, m: int, T: float
) -> InterimRates:
    """One application of the implicit system defining (a, b) from the
    option-size probabilities q_1..q_{m-1}."""
    q = tuple(float(x) for x in q)
    if len(q) != m - 1:
        raise ValueError(f"expected {m - 1} q entries, got {len(q)}")
    if any(not (0.0 <= x <= 1.0) for x in q):
        raise ValueError("q entries must lie in [0, 1]")
    q_high = sum(binom(m - 1, ell) * q[ell - 1] for ell in range(1, m))
    q_low = (m - 1) * sum(binom(m - 2, ell - 1) * q[ell - 1] for ell in range(1, m))
    p_high = 1.0 / T + q_high
    if p_high >= 1.0:
        raise ValueError("degenerate: high probability >= 1")
    p_low = _one_minus_pow1m(1.0 / T, m - 1) * (T / (m * n) - 1.0 / T) + q_low
    a = _one_minus_pow1m(p_high, n) / (n * p_high)
    b = _b_from_probs(p_high, p_low, n, n - 1)
    return InterimRates(a=a, b=b, q=q, p_high=p_high, p_low=p_low)


def nsn_revenue_per_bidder(rates: InterimRates, n: int, m: int, T: float) -> float:
    """Expected menu payment of a single bidder in the two-tier menu auction;
    total revenue is n times this."""
    a, b, q = rates.a, rates.b, rates.q
    if len(q) != m - 1:
        raise ValueError(f"expected {m - 1} q entries, got {len(q)}")
    base = a * m
    low_term = b * m * n * (T / (m * n) - 1.0 / T) * subsidy_bracket(m, T)
    option_term = m * sum(
        binom(m - 1, ell) * (a * T + ell * b * m * n / T) * q[ell - 1]
        for ell in range(1, m)
    )
    return base + low_term + option_term


def bound_suite(rates: InterimRates, n: int, m: int, T: float) -> dict:
    """Evaluate every stated inequality on a set of interim rates and report
    pass/fail per bound.  Always returns a report; never raises on failure."""
    a, b, q = rates.a, rates.b, rates.q
    lam = T / math.sqrt(m * n)
    low = m * n / T
    checks: list[dict] = []

    def add(name: str, lhs: float, rhs: float) -> None:
        checks.append(
            {"name": name, "lhs": lhs, "rhs": rhs, "passed": bool(lhs <= rhs)}
        )

    # per-size option probability bounds
    for ell in range(1, m):
        rhs = (
            (T / (m * n) - 1.0 / T) ** ell
            * (1.0 - T / (m * n)) ** (m - ell - 1)
            * (ell * b / (T * a))
        )
        add(f"q_{ell}_upper", q[ell - 1], rhs)

    q_high = sum(binom(m - 1, ell) * q[ell - 1] for ell in range(1, m))
    q_low = (m - 1) * sum(binom(m - 2, ell - 1) * q[ell - 1] for ell in range(1, m))
    if lam > 1.0 and m >= 2:
        rhs_high = (
            (1.0 - 1.0 / lam**2)
            * (b * (m - 1) / (a * m * n))
            * _pow1m(1.0 / T, m - 2)
        )
        add("q_high_sum", q_high, rhs_high)
        rhs_low = (
            (1.0 - 1.0 / lam**2)
            * (b * (m - 1) / (a * m * n))
            * _pow1m(1.0 / T, m - 3)
            * (
                1.0
                - 1.0 / (lam * math.sqrt(m * n))
                + (lam - 1.0 / lam) * (m - 2) / math.sqrt(m * n)
            )
        )
        add("q_low_sum", q_low, rhs_low)

    # ratio bound b/a <= (n/T)e^{-n/T}/(1 - e^{-n/T}), valid for T >= sqrt(mn)
    if T >= math.sqrt(m * n):
        x = n / T
        ratio_rhs = x * math.exp(-x) / (-math.expm1(-x))
        add("b_over_a", b / a if a > 0 else math.inf, ratio_rhs)
        add("b_leq_a", b, a)

    # scale of b against (1-1/T)^n, reported for trend analysis
    b_floor_ratio = b / _pow1m(1.0 / T, n)

    # the alternative low rate using n (not n-1) others in the no-high factor
    b_alt = _b_from_probs(rates.p_high, rates.p_low, n, n)
    report = {
        "checks": checks,
        "all_passed": all(c["passed"] for c in checks),
        "b_floor_ratio": b_floor_ratio,
        "b_exponent_n_variant": b_alt,
        "b_exponent_discrepancy": (b - b_alt) / b if b > 0 else 0.0,
        "lambda": lam,
        "low_price": low,
    }
    return report


def second_highest_favorite_cdf(n: int, m: int, z: float) -> float:
    """CDF of the second-highest favorite value among n bidders, each holding
    m i.i.d. untruncated Equal-Revenue values."""
    if z < 1.0:
        raise ValueError("support starts at 1")
    all_below = _pow1m(1.0 / z, m * n)
    one_above = (
        n * _pow1m(1.0 / z, m * (n - 1)) * _one_minus_pow1m(1.0 / z, m)
    )
    return all_below + one_above


def grand_bundle_forms(n: int, m: int) -> dict:
    """Bounds on the expected second-highest favorite value: it lies in
    [nm - n(m-1)/(n-1), nm]."""
    if n < 2:
        raise ValueError("need at least two bidders")
    return {
        "lower": n * m - n * (m - 1) / (n - 1),
        "upper": float(n * m),
        "cdf": lambda z: second_highest_favorite_cdf(n, m, z),
    }


def kfa_forms(n: int, m: int) -> dict:
    """Interval bounds for the favorite-aware posted-price auction with high
    price H = e^{nm} and low price L = sqrt(nm).  All quantities that would
    involve H directly are expressed through exp(-nm) so nothing overflows;
    underflow to 0 is the correct limit.
    """
    log_h = float(n * m)
    inv_h = math.exp(-log_h) if log_h < 745.0 else 0.0
    L = math.sqrt(n * m)

    p_upper = inv_h
    p_lower = inv_h - (m / 2.0) * inv_h * inv_h
    sale_upper = n * inv_h
    sale_lower = n * inv_h - (n * (n + m - 1) / 2.0) * inv_h * inv_h
    # high-branch revenue per item = H * P[sold]; well-scaled in [~n - eps, n]
    high_rev_upper = float(n)
    high_rev_lower = n - (n * (n + m - 1) / 2.0) * inv_h

    if m >= 2:
        q_upper = (m - 1) / (2.0 * L * L)
        q_lower = q_upper - (m - 1) * (m - 2) / (6.0 * L**3)
        # per-item: L*n*q_lower - L*binom(n,2)*q_upper^2
        low_rev_lower_per_item = (
            n * (m - 1) / (2.0 * L)
            - n * (m - 1) * (m - 2) / (6.0 * L * L)
            - (n * (n - 1) / 2.0) * (m - 1) ** 2 / (4.0 * L**3)
        )
    else:
        q_upper = q_lower = 0.0
        low_rev_lower_per_item = 0.0

    # per-bidder favorite-exceeds-H probability, both exponent conventions:
    # integral of (1/x^2)(1-1/x)^k over [H, inf) is (1-(1-1/H)^{k+1})/(k+1)
    def _p_exact(k: int) -> float:
        if inv_h == 0.0:
            return 0.0
        return _one_minus_pow1m(inv_h, k + 1) / (k + 1)

    return {
        "log_high_price": log_h,
        "low_price": L,
        "p_interval": (p_lower, p_upper),
        "p_exact_m_minus_1": _p_exact(m - 1),
        "p_exact_m": _p_exact(m),
        "sale_prob_interval": (sale_lower, sale_upper),
        "high_rev_per_item_interval": (high_rev_lower, high_rev_upper),
        "q_interval": (q_lower, q_upper),
        "low_branch_rev_lower_per_item": low_rev_lower_per_item,
        "low_branch_rev_lower": m * low_rev_lower_per_item,
    }
