"""Ex-post auction simulators: separate second-price sale, the two-price
(naive) auction and its rebate variant, the two-tier menu auction, the
grand-bundle second-price auction, and the favorite-aware posted-price
auction.

These single-profile implementations are the readable reference; batch Monte
Carlo runs go through ``auctioncc.kernels``, which must agree with them
(enforced by tests).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .closed_form import AuctionParams, InterimRates

__all__ = [
    "MechanismOutcome",
    "MenuOption",
    "sell_separately",
    "naive_auction",
    "less_naive_auction",
    "nsn_preferred_option",
    "menu_option_price",
    "menu_option_utility",
    "nsn_expost",
    "grand_bundle_spa",
    "kfa",
    "kfa_prices",
]


@dataclass
class MechanismOutcome:
    """allocation[j] is the winning bidder of item j or -1; revenue equals
    sum(payments) - sum(subsidies)."""

    allocation: np.ndarray
    payments: np.ndarray
    subsidies: np.ndarray
    revenue: float


def _outcome(allocation, payments, subsidies) -> MechanismOutcome:
    return MechanismOutcome(
        allocation=allocation,
        payments=payments,
        subsidies=subsidies,
        revenue=float(payments.sum() - subsidies.sum()),
    )


def _uniform_choice(indices: np.ndarray, gen: np.random.Generator) -> int:
    if len(indices) == 1:
        return int(indices[0])
    return int(indices[int(gen.random() * len(indices))])


def sell_separately(
    values: np.ndarray, reserve: float, gen: np.random.Generator
) -> MechanismOutcome:
    """Per-item second-price auction with a reserve; argmax ties broken
    uniformly at random."""
    if reserve < 0:
        raise ValueError("reserve must be >= 0")
    n, m = values.shape
    allocation = np.full(m, -1, dtype=np.int64)
    payments = np.zeros(n)
    for j in range(m):
        col = values[:, j]
        top = col.max()
        if top < reserve:
            continue
        winners = np.flatnonzero(col == top)
        w = _uniform_choice(winners, gen)
        second = np.partition(col, n - 2)[n - 2] if n >= 2 else 0.0
        allocation[j] = w
        payments[w] += max(reserve, second)
    return _outcome(allocation, payments, np.zeros(n))


def naive_auction(
    values: np.ndarray, params: AuctionParams, gen: np.random.Generator
) -> MechanismOutcome:
    """Per item: a uniformly chosen bidder valuing it at T pays T; failing
    that, a uniformly chosen bidder valuing it >= mn/T who holds a T on some
    other item pays mn/T; else unsold."""
    n, m = values.shape
    T, low = params.T, params.low_price
    allocation = np.full(m, -1, dtype=np.int64)
    payments = np.zeros(n)
    has_t = (values == T).any(axis=1)
    for j in range(m):
        col = values[:, j]
        at_t = np.flatnonzero(col == T)
        if len(at_t) > 0:
            w = _uniform_choice(at_t, gen)
            allocation[j] = w
            payments[w] += T
            continue
        eligible = np.flatnonzero((col >= low) & has_t)
        if len(eligible) > 0:
            w = _uniform_choice(eligible, gen)
            allocation[j] = w
            payments[w] += low
    return _outcome(allocation, payments, np.zeros(n))


def less_naive_auction(
    values: np.ndarray,
    params: AuctionParams,
    a0_val: float,
    b0_val: float,
    gen: np.random.Generator,
) -> MechanismOutcome:
    """Same allocation as the naive auction; a T-winner of item j who also
    values an earlier item j' < j at T gets the rebate
    (b0/a0)(T - mn/T) off the price T."""
    if a0_val <= 0:
        raise ValueError("high rate must be positive")
    n, m = values.shape
    T, low = params.T, params.low_price
    rebate = (b0_val / a0_val) * (T - low)
    base = naive_auction(values, params, gen)
    subsidies = np.zeros(n)
    for j in range(m):
        w = base.allocation[j]
        if w >= 0 and values[w, j] == T and (values[w, :j] == T).any():
            subsidies[w] += rebate
    return _outcome(base.allocation, base.payments, subsidies)


@dataclass(frozen=True)
class MenuOption:
    """A two-tier menu entry: guaranteed-rate item set H, fallback-rate item
    set L (disjoint), and the interim price.  The null option is ((), (), 0)."""

    H: tuple[int, ...]
    L: tuple[int, ...]
    price: float

    @property
    def is_null(self) -> bool:
        return len(self.H) == 0


NULL_OPTION = MenuOption((), (), 0.0)


def menu_option_price(
    size_h: int, size_l: int, rates: InterimRates, params: AuctionParams
) -> float:
    """Price of an option with |H| = size_h >= 1, |L| = size_l."""
    if size_h < 1:
        raise ValueError("non-null options need at least one high item")
    a, b = rates.a, rates.b
    T, low = params.T, params.low_price
    return b * size_l * low + a * size_h * T - b * (T - low) * (size_h - 1)


def menu_option_utility(
    v: np.ndarray, option: MenuOption, rates: InterimRates
) -> float:
    """Interim utility of type v for an option: a*sum_H v + b*sum_L v - price."""
    if option.is_null:
        return 0.0
    a, b = rates.a, rates.b
    return (
        a * sum(v[j] for j in option.H)
        + b * sum(v[j] for j in option.L)
        - option.price
    )


def nsn_preferred_option(
    v: np.ndarray, rates: InterimRates, params: AuctionParams
) -> MenuOption:
    """The utility-maximizing menu option of type v (requires a >= b).

    H collects the T-valued items plus the favorite (first argmax); L
    collects the remaining items valued at least mn/T.  A type with no
    T-valued item participates only when a*v_fav + b*sum_L v clears the
    price a*T + |L|*b*mn/T.
    """
    T, low = params.T, params.low_price
    v = np.asarray(v, dtype=np.float64)
    jstar = int(np.argmax(v))
    h_items = tuple(
        j for j in range(len(v)) if v[j] == T or j == jstar
    )
    l_items = tuple(
        j for j in range(len(v)) if v[j] >= low and j not in h_items
    )
    has_t = v[jstar] == T
    if not has_t:
        lhs = rates.a * v[jstar] + rates.b * sum(v[j] for j in l_items)
        rhs = rates.a * T + len(l_items) * rates.b * low
        if lhs < rhs:
            return NULL_OPTION
    price = menu_option_price(len(h_items), len(l_items), rates, params)
    return MenuOption(h_items, l_items, price)


def nsn_expost(
    values: np.ndarray,
    rates: InterimRates,
    params: AuctionParams,
    gen: np.random.Generator,
) -> MechanismOutcome:
    """Ex-post run of the two-tier menu auction: every bidder claims her
    preferred option and pays its interim price; each item goes uniformly to
    a high claimant, else uniformly to a low claimant."""
    n, m = values.shape
    payments = np.zeros(n)
    high = np.zeros((n, m), dtype=bool)
    low = np.zeros((n, m), dtype=bool)
    for i in range(n):
        opt = nsn_preferred_option(values[i], rates, params)
        payments[i] = opt.price
        for j in opt.H:
            high[i, j] = True
        for j in opt.L:
            low[i, j] = True
    allocation = np.full(m, -1, dtype=np.int64)
    for j in range(m):
        highs = np.flatnonzero(high[:, j])
        if len(highs) > 0:
            allocation[j] = _uniform_choice(highs, gen)
            continue
        lows = np.flatnonzero(low[:, j])
        if len(lows) > 0:
            allocation[j] = _uniform_choice(lows, gen)
    return _outcome(allocation, payments, np.zeros(n))


def grand_bundle_spa(values: np.ndarray) -> MechanismOutcome:
    """All m items as one bundle, second-price: the highest row sum wins and
    pays the second-highest row sum."""
    n, m = values.shape
    if n < 2:
        raise ValueError("need at least two bidders")
    rowsum = values.sum(axis=1)
    w = int(np.argmax(rowsum))
    second = np.partition(rowsum, n - 2)[n - 2]
    allocation = np.full(m, w, dtype=np.int64)
    payments = np.zeros(n)
    payments[w] = second
    return _outcome(allocation, payments, np.zeros(n))


def kfa_prices(n: int, m: int) -> tuple[float, float]:
    """(log of the high price, low price): high = e^{nm}, low = sqrt(nm)."""
    return float(n * m), math.sqrt(n * m)


def kfa(
    values: np.ndarray, n: int, m: int, gen: np.random.Generator
) -> MechanismOutcome:
    """Favorite-aware posted prices.  Bidders with any two equal values are
    excluded.  Per item j: a favorite-j holder with log-value >= nm buys at
    the high price; else a non-favorite-j holder valuing it >= sqrt(nm) buys
    at the low price.  High comparisons are done in log space."""
    log_h, low_price = kfa_prices(n, m)
    high_price = math.exp(log_h) if log_h < 709.0 else math.inf
    allocation = np.full(m, -1, dtype=np.int64)
    payments = np.zeros(n)
    distinct = np.array(
        [len(np.unique(values[i])) == m for i in range(n)]
    )
    fav = values.argmax(axis=1)
    for j in range(m):
        col = values[:, j]
        high = np.flatnonzero(distinct & (fav == j) & (np.log(col) >= log_h))
        if len(high) > 0:
            w = _uniform_choice(high, gen)
            allocation[j] = w
            payments[w] += high_price
            continue
        lows = np.flatnonzero(distinct & (fav != j) & (col >= low_price))
        if len(lows) > 0:
            w = _uniform_choice(lows, gen)
            allocation[j] = w
            payments[w] += low_price
    return _outcome(allocation, payments, np.zeros(n))
