"""auctioncc: revenue simulation, closed forms, fixed-point interim rates,
incentive verification, and competition-complexity experiments for n additive
bidders with (truncated) Equal-Revenue values over m items."""

from .closed_form import AuctionParams, InterimRates
from .distributions import DistSpec, Seed
from .fixed_point import FixedPointSolution, solve
from .kernels import BACKEND

__all__ = [
    "AuctionParams",
    "InterimRates",
    "DistSpec",
    "Seed",
    "FixedPointSolution",
    "solve",
    "BACKEND",
]

__version__ = "0.1.0"
