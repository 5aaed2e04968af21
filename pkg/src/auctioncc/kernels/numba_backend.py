"""JIT-compiled loop implementations of the batch revenue kernels.

Mirrors ``numpy_backend`` exactly: same signatures, same semantics, same
consumed randomness (tie-break uniforms are passed in, never drawn here).
Equality of the two backends is enforced by tests.
"""

from __future__ import annotations

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True, nogil=True)
def spa_reserve_batch(values: np.ndarray, reserve: float) -> np.ndarray:
    B, n, m = values.shape
    rev = np.zeros(B)
    for p in range(B):
        total = 0.0
        for j in range(m):
            top = -1.0
            second = 0.0
            for i in range(n):
                v = values[p, i, j]
                if v > top:
                    second = top
                    top = v
                elif v > second:
                    second = v
            if top >= reserve:
                total += second if second > reserve else reserve
        rev[p] = total
    return rev


@njit(cache=True, nogil=True)
def naive_lna_batch(
    values: np.ndarray,
    T: float,
    low_price: float,
    subsidy: float,
    tie_u: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    B, n, m = values.shape
    naive = np.zeros(B)
    lna = np.zeros(B)
    has_t = np.zeros(n, dtype=np.bool_)
    for p in range(B):
        for i in range(n):
            ht = False
            for j in range(m):
                if values[p, i, j] == T:
                    ht = True
                    break
            has_t[i] = ht
        nv = 0.0
        rebate = 0.0
        for j in range(m):
            k = 0
            for i in range(n):
                if values[p, i, j] == T:
                    k += 1
            if k > 0:
                nv += T
                # uniform winner among the k T-bidders, in index order
                target = int(tie_u[p, j] * k) + 1
                seen = 0
                winner = -1
                for i in range(n):
                    if values[p, i, j] == T:
                        seen += 1
                        if seen == target:
                            winner = i
                            break
                for jp in range(j):
                    if values[p, winner, jp] == T:
                        rebate += subsidy
                        break
            else:
                sold = False
                for i in range(n):
                    if values[p, i, j] >= low_price and has_t[i]:
                        sold = True
                        break
                if sold:
                    nv += low_price
        naive[p] = nv
        lna[p] = nv - rebate
    return naive, lna


@njit(cache=True, nogil=True)
def nsn_batch(
    values: np.ndarray, a: float, b: float, T: float, low_price: float
) -> tuple[np.ndarray, np.ndarray]:
    B, n, m = values.shape
    price_sum = np.zeros(B)
    stats = np.zeros(8)
    stats[0] = B * m
    h_mask = np.zeros((n, m), dtype=np.bool_)
    l_mask = np.zeros((n, m), dtype=np.bool_)
    for p in range(B):
        total = 0.0
        for i in range(n):
            has_t = False
            jstar = 0
            vmax = values[p, i, 0]
            for j in range(m):
                v = values[p, i, j]
                if v == T:
                    has_t = True
                if v > vmax:
                    vmax = v
                    jstar = j
            size_l = 0
            low_value = 0.0
            size_h = 0
            for j in range(m):
                v = values[p, i, j]
                in_h = v == T or j == jstar
                h_mask[i, j] = in_h
                in_l = (not in_h) and v >= low_price
                l_mask[i, j] = in_l
                if in_h:
                    size_h += 1
                if in_l:
                    size_l += 1
                    low_value += v
            participate = has_t or (
                a * vmax + b * low_value >= a * T + size_l * b * low_price
            )
            if participate:
                total += (
                    b * size_l * low_price
                    + a * size_h * T
                    - b * (T - low_price) * (size_h - 1)
                )
            else:
                for j in range(m):
                    h_mask[i, j] = False
                    l_mask[i, j] = False
        price_sum[p] = total
        for j in range(m):
            k = 0
            l = 0
            for i in range(n):
                if h_mask[i, j]:
                    k += 1
                if l_mask[i, j]:
                    l += 1
            stats[1] += k
            stats[2] += k * k
            stats[4] += l
            stats[5] += l * l
            if k > 0:
                stats[3] += 1.0
            elif l > 0:
                stats[6] += 1.0
                stats[7] += l
    return price_sum, stats


@njit(cache=True, nogil=True)
def bundle_batch(
    values: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    B, n, m = values.shape
    rev = np.zeros(B)
    v21 = np.zeros(B)
    proxy = np.zeros(B)
    for p in range(B):
        top_sum = -1.0
        second_sum = -1.0
        top_fav = -1.0
        i1 = 0
        for i in range(n):
            s = 0.0
            f = values[p, i, 0]
            for j in range(m):
                v = values[p, i, j]
                s += v
                if v > f:
                    f = v
            if s > top_sum:
                second_sum = top_sum
                top_sum = s
            elif s > second_sum:
                second_sum = s
            if f > top_fav:
                top_fav = f
                i1 = i
        second_fav = -1.0
        i2 = 0
        for i in range(n):
            if i == i1:
                continue
            f = values[p, i, 0]
            for j in range(m):
                if values[p, i, j] > f:
                    f = values[p, i, j]
            if f > second_fav:
                second_fav = f
                i2 = i
        rev[p] = second_sum
        v21[p] = second_fav
        s2 = 0.0
        for j in range(m):
            s2 += values[p, i2, j]
        proxy[p] = s2
    return rev, v21, proxy


@njit(cache=True, nogil=True)
def cdw_batch(values: np.ndarray, T: float, truncated: bool) -> np.ndarray:
    B, n, m = values.shape
    out = np.zeros(B)
    for p in range(B):
        total = 0.0
        for j in range(m):
            best = 0.0
            for i in range(n):
                # favorite item of bidder i: first argmax (lexicographic)
                jstar = 0
                vmax = values[p, i, 0]
                for jj in range(1, m):
                    if values[p, i, jj] > vmax:
                        vmax = values[p, i, jj]
                        jstar = jj
                v = values[p, i, j]
                if j == jstar:
                    score = T if (truncated and v == T) else 0.0
                else:
                    score = v
                if score > best:
                    best = score
            total += best
        out[p] = total
    return out


@njit(cache=True, nogil=True)
def kfa_batch(
    values: np.ndarray, high_price: float, low_price: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    B, n, m = values.shape
    rev = np.zeros(B)
    n_high = np.zeros(B)
    n_low = np.zeros(B)
    distinct = np.zeros(n, dtype=np.bool_)
    favorite = np.zeros(n, dtype=np.int64)
    pay_high = high_price if np.isfinite(high_price) else 0.0
    for p in range(B):
        for i in range(n):
            ok = True
            jstar = 0
            vmax = values[p, i, 0]
            for j in range(1, m):
                if values[p, i, j] > vmax:
                    vmax = values[p, i, j]
                    jstar = j
            for j in range(m):
                for jj in range(j + 1, m):
                    if values[p, i, j] == values[p, i, jj]:
                        ok = False
            distinct[i] = ok
            favorite[i] = jstar
        hi = 0
        lo = 0
        for j in range(m):
            high_sold = False
            for i in range(n):
                if distinct[i] and favorite[i] == j and values[p, i, j] >= high_price:
                    high_sold = True
                    break
            if high_sold:
                hi += 1
                continue
            for i in range(n):
                if distinct[i] and favorite[i] != j and values[p, i, j] >= low_price:
                    lo += 1
                    break
        rev[p] = hi * pay_high + lo * low_price
        n_high[p] = hi
        n_low[p] = lo
    return rev, n_high, n_low
