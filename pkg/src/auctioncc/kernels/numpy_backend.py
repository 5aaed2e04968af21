"""Vectorized numpy implementations of the batch revenue kernels.

Every function takes a batch of valuation profiles ``values`` with shape
(B, n, m) (B profiles, n bidders, m items) and returns per-profile revenue
figures or aggregate counters.  Random tie-breaks are injected as uniform
arrays drawn by the caller so the numba and numpy paths consume identical
randomness.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def spa_reserve_batch(values: np.ndarray, reserve: float) -> np.ndarray:
    """Per-item second-price auction with a reserve; returns revenue per
    profile.  Winner identity is irrelevant for revenue, so ties need no RNG."""
    B, n, m = values.shape
    top = values.max(axis=1)
    if n >= 2:
        second = np.partition(values, n - 2, axis=1)[:, n - 2, :]
    else:
        second = np.zeros((B, m))
    pay = np.where(top >= reserve, np.maximum(second, reserve), 0.0)
    return pay.sum(axis=1)


def naive_lna_batch(
    values: np.ndarray,
    T: float,
    low_price: float,
    subsidy: float,
    tie_u: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Two-price auction revenue per profile, with and without the rebate.

    Per item: a uniformly chosen T-bidder pays T; otherwise a bidder valuing
    the item >= low_price who holds a T elsewhere pays low_price.  The rebate
    variant refunds ``subsidy`` to a T-winner who already has an earlier-item
    T.  ``tie_u`` has shape (B, m) and picks the uniform T-winner.
    """
    is_t = values == T
    has_t_item = is_t.any(axis=1)  # (B, m)
    bidder_has_t = is_t.any(axis=2)  # (B, n)
    low_elig = (values >= low_price) & bidder_has_t[:, :, None] & ~is_t
    case2 = ~has_t_item & low_elig.any(axis=1)
    naive = (has_t_item * T + case2 * low_price).sum(axis=1)

    # uniform winner among T-bidders: the (floor(u*k)+1)-th one in index order
    k = is_t.sum(axis=1)  # (B, m)
    target = np.floor(tie_u * k).astype(np.int64) + 1
    cum = np.cumsum(is_t, axis=1)
    winner = is_t & (cum == target[:, None, :])
    earlier_t = np.cumsum(is_t, axis=2) - is_t  # count of T's on items before j
    n_subsidized = (winner & (earlier_t > 0)).sum(axis=(1, 2))
    lna = naive - subsidy * n_subsidized
    return naive, lna


def nsn_batch(
    values: np.ndarray, a: float, b: float, T: float, low_price: float
) -> tuple[np.ndarray, np.ndarray]:
    """Two-tier menu auction: per-profile total menu payment plus win-rate
    counters.

    Each bidder claims her preferred option: H = {T-valued items} + favorite,
    L = {items valued >= low_price} outside H; a bidder with no T item
    participates only if a*v_fav + b*sum_L v >= a*T + |L|*b*low_price.
    Items go uniformly to high claimants, else uniformly to low claimants.

    Returned stats (length 8) are per-item tallies over the batch, with k and
    l the high/low claimant counts of an item: [#items, sum k, sum k^2,
    #items with k >= 1, sum l, sum l^2, #items with k = 0 and l >= 1,
    sum of l over those items].  They feed the ratio estimators
    a_hat = stats[3]/stats[1] and b_hat = stats[6]/stats[4] (an item served
    to a tier pays each of its claimants conditional win probability 1/count,
    so the tier's claim total contributes exactly 1), which have far lower
    variance than realized 0/1 win indicators.
    """
    B, n, m = values.shape
    is_t = values == T
    has_t = is_t.any(axis=2)  # (B, n)
    jstar = values.argmax(axis=2)  # first max: lexicographic tie-break
    vmax = values.max(axis=2)
    onehot = np.zeros_like(is_t)
    np.put_along_axis(onehot, jstar[:, :, None], True, axis=2)
    h_mask = is_t | onehot  # equals is_t when a T exists (jstar is a T item)
    l_mask = (values >= low_price) & ~h_mask

    low_value = (values * l_mask).sum(axis=2)
    size_l = l_mask.sum(axis=2)
    participate = has_t | (
        a * vmax + b * low_value >= a * T + size_l * b * low_price
    )
    h_mask &= participate[:, :, None]
    l_mask &= participate[:, :, None]
    size_h = h_mask.sum(axis=2)
    size_l = l_mask.sum(axis=2)
    price = np.where(
        participate,
        b * size_l * low_price + a * size_h * T - b * (T - low_price) * (size_h - 1),
        0.0,
    )

    k = h_mask.sum(axis=1).astype(np.float64)  # (B, m) high claimants per item
    l = l_mask.sum(axis=1).astype(np.float64)
    k_pos = k > 0
    l_served = ~k_pos & (l > 0)
    stats = np.array(
        [
            float(B * m),
            k.sum(),
            np.square(k).sum(),
            float(k_pos.sum()),
            l.sum(),
            np.square(l).sum(),
            float(l_served.sum()),
            (l * l_served).sum(),
        ]
    )
    return price.sum(axis=1), stats


def bundle_batch(
    values: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Grand-bundle second-price auction.  Returns per profile: revenue
    (second-highest bundle sum), the favorite value of the bidder holding the
    second-highest favorite value, and that bidder's bundle sum (proxy)."""
    B, n, m = values.shape
    if n < 2:
        raise ValueError("need at least two bidders")
    rowsum = values.sum(axis=2)
    rev = np.partition(rowsum, n - 2, axis=1)[:, n - 2]
    fav = values.max(axis=2)
    rows = np.arange(B)
    i1 = fav.argmax(axis=1)  # first max, matching the loop backend on ties
    fav2 = fav.copy()
    fav2[rows, i1] = -np.inf
    i2 = fav2.argmax(axis=1)
    return rev, fav[rows, i2], rowsum[rows, i2]


def cdw_batch(values: np.ndarray, T: float, truncated: bool) -> np.ndarray:
    """Virtual-welfare benchmark: per item, max over bidders of the ironed
    virtual value when the item is the bidder's favorite (lexicographic
    argmax), raw value otherwise."""
    jstar = values.argmax(axis=2)
    onehot = np.zeros(values.shape, dtype=bool)
    np.put_along_axis(onehot, jstar[:, :, None], True, axis=2)
    if truncated:
        phibar = np.where(values == T, T, 0.0)
    else:
        phibar = np.zeros_like(values)
    score = np.where(onehot, phibar, values)
    return score.max(axis=1).sum(axis=1)


def kfa_batch(
    values: np.ndarray, high_price: float, low_price: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Favorite-aware posted prices.  Per item: a favorite-holder above the
    high price buys at it; otherwise any non-favorite-holder above the low
    price buys at it.  Bidders with non-distinct rows are excluded.  Returns
    (revenue, high sale count, low sale count) per profile.  Pass
    ``high_price = inf`` to simulate conditioning on no high sale."""
    B, n, m = values.shape
    if m >= 2:
        srt = np.sort(values, axis=2)
        distinct = (np.diff(srt, axis=2) != 0).all(axis=2)
    else:
        distinct = np.ones((B, n), dtype=bool)
    fav = values.argmax(axis=2)
    onehot = np.zeros(values.shape, dtype=bool)
    np.put_along_axis(onehot, fav[:, :, None], True, axis=2)
    in_s = distinct[:, :, None]
    high_claim = onehot & (values >= high_price) & in_s
    low_claim = ~onehot & (values >= low_price) & in_s
    high_sale = high_claim.any(axis=1)  # (B, m)
    low_sale = ~high_sale & low_claim.any(axis=1)
    n_high = high_sale.sum(axis=1).astype(np.float64)
    n_low = low_sale.sum(axis=1).astype(np.float64)
    rev = n_high * (high_price if np.isfinite(high_price) else 0.0)
    rev = rev + n_low * low_price
    return rev, n_high, n_low
