"""Binomial proportion estimates with normal and Wilson intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass

Z95 = 1.959963984540054  # two-sided 95% normal quantile


def wilson_interval(successes: int, samples: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval; well behaved for rare events and proportions at 0 or 1."""
    if samples < 1:
        raise ValueError("interval needs at least one sample")
    p = successes / samples
    denom = 1.0 + z * z / samples
    center = (p + z * z / (2 * samples)) / denom
    half = (z / denom) * math.sqrt(p * (1.0 - p) / samples + z * z / (4.0 * samples * samples))
    # clamp against rounding so the interval always brackets the estimate
    return max(0.0, min(center - half, p)), min(1.0, max(center + half, p))


def normal_interval(successes: int, samples: int, z: float = Z95) -> tuple[float, float]:
    p = successes / samples
    half = z * math.sqrt(p * (1.0 - p) / samples)
    return max(0.0, p - half), min(1.0, p + half)


@dataclass(frozen=True)
class CrossingEstimate:
    """Monte Carlo proportion with standard error and 95% confidence interval.

    The interval is the normal approximation, replaced by the Wilson interval
    when samples * min(p, 1-p) < 30; the standard error is NaN for degenerate
    proportions (0 or 1), where the binomial formula is uninformative.
    """

    p_hat: float
    samples: int
    stderr: float
    ci_low: float
    ci_high: float
    crossed: int

    @classmethod
    def from_counts(cls, crossed: int, samples: int) -> "CrossingEstimate":
        if samples < 1:
            raise ValueError("estimate needs at least one sample")
        if not 0 <= crossed <= samples:
            raise ValueError(f"count {crossed} outside 0..{samples}")
        p = crossed / samples
        if 0.0 < p < 1.0:
            stderr = math.sqrt(p * (1.0 - p) / samples)
        else:
            stderr = math.nan
        if samples * min(p, 1.0 - p) < 30:
            low, high = wilson_interval(crossed, samples)
        else:
            low, high = normal_interval(crossed, samples)
        return cls(p, samples, stderr, low, high, crossed)

    @property
    def degenerate(self) -> bool:
        return self.p_hat in (0.0, 1.0)
