"""Batch kernel backend selection.

The JIT backend is used when numba imports cleanly; set the environment
variable ``AUCTIONCC_NO_NUMBA=1`` to force the pure-numpy fallback.  Both
backends expose the same functions with identical semantics and identical
randomness consumption; ``benchmarks/bench_kernels.py`` compares their speed.
"""

from __future__ import annotations

import os

from . import numpy_backend

_disable = os.environ.get("AUCTIONCC_NO_NUMBA", "").strip().lower() in {
    "1",
    "true",
    "yes",
    "on",
}

if not _disable:
    try:
        from . import numba_backend as _impl
    except ImportError:
        _impl = numpy_backend
else:
    _impl = numpy_backend

BACKEND = _impl.NAME

spa_reserve_batch = _impl.spa_reserve_batch
naive_lna_batch = _impl.naive_lna_batch
nsn_batch = _impl.nsn_batch
bundle_batch = _impl.bundle_batch
cdw_batch = _impl.cdw_batch
kfa_batch = _impl.kfa_batch

__all__ = [
    "BACKEND",
    "numpy_backend",
    "spa_reserve_batch",
    "naive_lna_batch",
    "nsn_batch",
    "bundle_batch",
    "cdw_batch",
    "kfa_batch",
]
