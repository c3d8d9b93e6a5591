"""Conductivity from crossing probabilities and the scale-doubling recursion.

The slab of width N has conductivity kappa = N c/(1-c).  Doubling the width
multiplies the baseline map c -> c/(2-c) by 1 + Delta_n, where Delta_n
collects the inter-scale correlation corrections; its leading part is
predicted by the backscatter overlap, and iterating the resulting kappa
recursion converges because the corrections decay geometrically in scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

from .disorder import mix64
from .estimators import (
    OverlapEstimate,
    estimate_backscatter_overlap,
    estimate_crossing,
)
from .geometry import SlabGeometry
from .stats import CrossingEstimate, Z95


class Estimate(NamedTuple):
    value: float
    stderr: float


def kappa_from_c(width: int, c) -> float:
    """Conductivity N c/(1-c) at scale N."""
    if not 0 < c < 1:
        raise ValueError(f"crossing probability must be in (0,1), got {c}")
    return width * c / (1 - c)


def c_from_kappa(width: int, kappa) -> float:
    """Crossing probability kappa/(kappa + N); exact inverse of kappa_from_c."""
    if kappa <= 0:
        raise ValueError(f"conductivity must be positive, got {kappa}")
    return kappa / (kappa + width)


def measured_delta(c_n, c_next, c_err: float = 0.0, c_next_err: float = 0.0) -> Estimate:
    """Doubling correction c_next (2 - c_n)/c_n - 1 with first-order errors.

    Exact input types are preserved: feeding rationals with zero errors gives
    an exact zero for the baseline doubling map.  The degenerate boundary
    c = 1 is admitted, where the correction is identically zero.
    """
    if not 0 < c_n <= 1 or not 0 < c_next <= 1:
        raise ValueError("crossing probabilities must be in (0,1]")
    delta = c_next * (2 - c_n) / c_n - 1
    var = ((2 - c_n) / c_n * c_next_err) ** 2 + (2 * c_next / (c_n * c_n) * c_err) ** 2
    return Estimate(delta, math.sqrt(var))


def predicted_delta(c_n: float, overlap: float) -> float:
    """Leading correction c(2-c) * overlap from the hard-core backscatter term."""
    if not 0 < c_n < 1:
        raise ValueError(f"crossing probability must be in (0,1), got {c_n}")
    if not 0 <= overlap <= 1:
        raise ValueError(f"overlap must be in [0,1], got {overlap}")
    return c_n * (2 - c_n) * overlap


def alpha_from_overlap(overlap: float) -> float:
    """Recursion coefficient alpha = 2 * overlap."""
    if not 0 <= overlap <= 1:
        raise ValueError(f"overlap must be in [0,1], got {overlap}")
    return 2.0 * overlap


def kappa_next(kappa_n: float, n: int, alpha: float, mode: str = "leading") -> float:
    """One step of the conductivity recursion from scale n to n+1.

    "leading" applies kappa (1 + kappa alpha / 2^n); "exact" evaluates the
    doubling relation through c_n and the predicted correction.  The two
    agree up to terms of order 4^-n.
    """
    if kappa_n <= 0:
        raise ValueError(f"conductivity must be positive, got {kappa_n}")
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if mode == "leading":
        return kappa_n * (1.0 + kappa_n * alpha / 2.0**n)
    if mode == "exact":
        c = c_from_kappa(2**n, kappa_n)
        delta = predicted_delta(c, alpha / 2.0)
        return 2.0**n * c * (1.0 + delta) / (1.0 - c - 0.5 * c * delta)
    raise ValueError(f"mode must be 'leading' or 'exact', got {mode!r}")


def iterate_kappa(
    kappa_start: float,
    n_start: int,
    alpha: float,
    *,
    mode: str = "leading",
    tol: float = 1e-10,
    max_iter: int = 128,
) -> tuple[list[float], float]:
    """Iterate the recursion until increments fall below tol.

    Returns the full sequence (starting value included) and the limit; the
    sequence is non-decreasing for alpha >= 0 and the increments are summable,
    so failure to converge within max_iter means invalid inputs.
    """
    sequence = [kappa_start]
    kappa, n = kappa_start, n_start
    for _ in range(max_iter):
        nxt = kappa_next(kappa, n, alpha, mode)
        sequence.append(nxt)
        if abs(nxt - kappa) < tol:
            return sequence, nxt
        kappa, n = nxt, n + 1
    raise RuntimeError(f"kappa recursion did not converge within {max_iter} iterations")


@dataclass(frozen=True)
class ScaleReport:
    """Per-scale record feeding the recursion and the figure output."""

    n: int
    width: int
    transverse: int
    samples: int
    c_n: CrossingEstimate
    c_next: CrossingEstimate
    overlap: OverlapEstimate

    @property
    def kappa(self) -> float:
        return kappa_from_c(self.width, self.c_n.p_hat)

    @property
    def kappa_err(self) -> float:
        return self.width * self.c_n.stderr / (1.0 - self.c_n.p_hat) ** 2

    @property
    def delta_measured(self) -> Estimate:
        return measured_delta(
            self.c_n.p_hat, self.c_next.p_hat, self.c_n.stderr, self.c_next.stderr
        )

    @property
    def delta_predicted(self) -> float:
        return predicted_delta(self.c_n.p_hat, self.overlap.value)

    @property
    def alpha(self) -> float:
        return alpha_from_overlap(self.overlap.value)

    def measured_interval(self) -> tuple[float, float]:
        """95% interval for the measured 1 + Delta_n."""
        delta = self.delta_measured
        half = Z95 * delta.stderr
        return 1.0 + delta.value - half, 1.0 + delta.value + half


def subseed(seed: int, tag: int) -> int:
    """Derived seed for one job of a multi-run orchestration."""
    return mix64(mix64(seed) + tag)


def build_scale_sweep(
    d: int,
    n_lo: int,
    n_hi: int,
    aspect: int,
    samples: int,
    seed: int,
    *,
    model: str = "mirrors",
    overlap_samples: Optional[int] = None,
    workers: int = 1,
    progress: Optional[Callable[[str], None]] = None,
) -> list[ScaleReport]:
    """Crossing and overlap estimates for every scale n in n_lo..n_hi.

    Widths are 2^n with transverse extent aspect * width; each width and each
    overlap run gets its own derived sub-seed so estimates are independent.
    The width-2^(n+1) estimate of scale n is reused as the width estimate of
    scale n+1.
    """
    if n_lo < 0 or n_hi < n_lo:
        raise ValueError(f"scale range {n_lo}..{n_hi} is invalid")
    overlap_samples = overlap_samples or samples

    crossings: dict[int, CrossingEstimate] = {}
    for n in range(n_lo, n_hi + 2):
        width = 2**n
        geom = SlabGeometry(d, width, aspect * width)
        if progress:
            progress(f"crossing n={n} width={width}")
        crossings[n] = estimate_crossing(
            geom, samples, subseed(seed, 2 * n), model=model, workers=workers
        )

    reports = []
    for n in range(n_lo, n_hi + 1):
        width = 2**n
        geom = SlabGeometry(d, width, aspect * width)
        if progress:
            progress(f"overlap n={n} width={width}")
        overlap = estimate_backscatter_overlap(
            geom, overlap_samples, subseed(seed, 2 * n + 1), model=model, workers=workers
        )
        reports.append(
            ScaleReport(
                n, width, geom.transverse, samples, crossings[n], crossings[n + 1], overlap
            )
        )
    return reports
