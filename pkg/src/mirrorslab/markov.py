"""Exact formulas and a simulator for the kinematic non-backtracking walk.

Averaging the mirrors step over the disorder yields a Markov chain that picks
uniformly among the 2d-1 non-reversing directions.  Its slab crossing
probability has the closed form kappa0/(kappa0 + N) with kappa0 = d/(d-1),
and the scale-doubling map c -> c/(2-c) leaves the conductivity invariant
exactly; everything here is kept in rational arithmetic so those identities
are testable with zero tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import engine
from .geometry import SlabGeometry
from .stats import CrossingEstimate


def chat0(d: int) -> Fraction:
    """Single-layer crossing probability d/(2d-1) of the baseline walk."""
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    return Fraction(d, 2 * d - 1)


def kappa_hat0(d: int) -> Fraction:
    """Baseline conductivity d/(d-1); equals chat0/(1 - chat0)."""
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    return Fraction(d, d - 1)


def exact_crossing(d: int, width: int) -> Fraction:
    """Closed-form crossing probability kappa0/(kappa0 + N) of a width-N slab."""
    if width < 1:
        raise ValueError(f"width must be >= 1, got {width}")
    k0 = kappa_hat0(d)
    return k0 / (k0 + width)


def chat_double(c: Fraction) -> Fraction:
    """Scale-doubling map c/(2-c); conductivity-preserving."""
    c = Fraction(c)
    if not 0 < c < 1:
        raise ValueError(f"crossing probability must be in (0,1), got {c}")
    return c / (2 - c)


@dataclass(frozen=True)
class MarkovScaleState:
    """Exact (scale, crossing, conductivity) triple along the doubling recursion."""

    n: int
    c_hat: Fraction
    kappa_hat: Fraction

    def __post_init__(self) -> None:
        if self.kappa_hat != 2**self.n * self.c_hat / (1 - self.c_hat):
            raise ValueError("kappa_hat inconsistent with c_hat at this scale")

    @classmethod
    def initial(cls, d: int) -> "MarkovScaleState":
        c0 = chat0(d)
        return cls(0, c0, c0 / (1 - c0))

    def double(self) -> "MarkovScaleState":
        c = chat_double(self.c_hat)
        return MarkovScaleState(self.n + 1, c, 2 ** (self.n + 1) * c / (1 - c))


def simulate_nb_walk(geom: SlabGeometry, samples: int, seed: int) -> CrossingEstimate:
    """Monte Carlo crossing estimate for the non-backtracking walk.

    Walks start at the canonical entry and use the same geometry (periodic
    transverse closure included) as the mirrors runs.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    crossed = 0
    chunk = 1 << 17
    for lo in range(0, samples, chunk):
        hi = min(lo + chunk, samples)
        keys = engine.sample_keys(seed, np.arange(lo, hi, dtype=np.uint64))
        coords, vel = engine.entry_arrays(geom, hi - lo)
        res = engine.run_batch(geom, keys, coords, vel, model="markov")
        crossed += int(res.crossed.sum())
    return CrossingEstimate.from_counts(crossed, samples)
