"""Slab geometry, phase points, and boundary classification.

The slab occupies lattice sites with transport coordinate 1..N (axis 0)
and transverse coordinates 1..M on each of the remaining d-1 axes, closed
periodically.  A phase point is a (site, velocity) pair; the four boundary
classes mark states entering or leaving the slab through its faces.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Iterator


class BoundaryClass(Enum):
    INTERIOR = "interior"
    IN_RIGHTWARD = "in_rightward"   # on the left face, moving along +axis0
    IN_LEFTWARD = "in_leftward"     # on the right face, moving along -axis0
    OUT_LEFT = "out_left"           # left the slab through the left face
    OUT_RIGHT = "out_right"         # left the slab through the right face


@dataclass(frozen=True)
class Velocity:
    """Unit lattice velocity: one of the 2d signed axis directions."""

    axis: int
    sign: int

    def __post_init__(self) -> None:
        if self.axis < 0:
            raise ValueError(f"velocity axis must be >= 0, got {self.axis}")
        if self.sign not in (1, -1):
            raise ValueError(f"velocity sign must be +1 or -1, got {self.sign}")

    def __neg__(self) -> "Velocity":
        return Velocity(self.axis, -self.sign)

    @property
    def index(self) -> int:
        """Encoding 2*axis + (sign < 0); reversal toggles the low bit."""
        return 2 * self.axis + (1 if self.sign < 0 else 0)

    @classmethod
    def from_index(cls, index: int) -> "Velocity":
        if index < 0:
            raise ValueError(f"velocity index must be >= 0, got {index}")
        return cls(index >> 1, -1 if index & 1 else 1)


def velocities(d: int) -> tuple[Velocity, ...]:
    """All 2d velocities of the d-dimensional lattice, in index order."""
    return tuple(Velocity.from_index(i) for i in range(2 * d))


@dataclass(frozen=True)
class PhasePoint:
    site: tuple[int, ...]
    velocity: Velocity


@dataclass(frozen=True)
class SlabGeometry:
    """Slab of width `width` along axis 0, periodic transverse extent `transverse`."""

    dim: int
    width: int
    transverse: int

    def __post_init__(self) -> None:
        if self.dim < 2:
            raise ValueError(f"dimension must be >= 2, got {self.dim}")
        if self.width < 1:
            raise ValueError(f"slab width must be >= 1, got {self.width}")
        if self.transverse < 1:
            raise ValueError(f"transverse extent must be >= 1, got {self.transverse}")

    @property
    def site_count(self) -> int:
        return self.transverse ** (self.dim - 1) * self.width

    @property
    def phase_space_size(self) -> int:
        return 2 * self.dim * self.site_count

    @property
    def step_bound(self) -> int:
        """Hard cap on steps to exit: 2d * |slab sites|."""
        return self.phase_space_size

    def inside(self, site: tuple[int, ...]) -> bool:
        if len(site) != self.dim:
            raise ValueError(f"site has {len(site)} coordinates, expected {self.dim}")
        if not 1 <= site[0] <= self.width:
            return False
        return all(1 <= c <= self.transverse for c in site[1:])

    def wrap(self, site: tuple[int, ...]) -> tuple[int, ...]:
        """Reduce transverse coordinates periodically into 1..M; axis 0 untouched."""
        m = self.transverse
        return (site[0],) + tuple((c - 1) % m + 1 for c in site[1:])

    def translate(self, site: tuple[int, ...], v: Velocity) -> tuple[int, ...]:
        """Move one lattice unit along v, wrapping transverse coordinates."""
        moved = list(site)
        moved[v.axis] += v.sign
        return self.wrap(tuple(moved))

    def site_index(self, site: tuple[int, ...]) -> int:
        """Row-major linear index of an in-slab site (axis 0 most significant)."""
        if not self.inside(site):
            raise ValueError(f"site {site} is outside the slab")
        idx = site[0] - 1
        for c in site[1:]:
            idx = idx * self.transverse + (c - 1)
        return idx

    def sites(self) -> Iterator[tuple[int, ...]]:
        """All slab sites in site_index order."""
        transverse_ranges = [range(1, self.transverse + 1)] * (self.dim - 1)
        for q1 in range(1, self.width + 1):
            for rest in itertools.product(*transverse_ranges):
                yield (q1,) + rest


def _check_coords(geom: SlabGeometry, x: PhasePoint) -> None:
    if len(x.site) != geom.dim:
        raise ValueError(f"site has {len(x.site)} coordinates, expected {geom.dim}")
    if not 0 <= x.site[0] <= geom.width + 1:
        raise ValueError(
            f"transport coordinate {x.site[0]} outside 0..{geom.width + 1}"
        )
    if any(not 1 <= c <= geom.transverse for c in x.site[1:]):
        raise ValueError(f"transverse coordinates of {x.site} outside 1..{geom.transverse}")
    if x.velocity.axis >= geom.dim:
        raise ValueError(f"velocity axis {x.velocity.axis} outside dimension {geom.dim}")


def classify(geom: SlabGeometry, x: PhasePoint) -> BoundaryClass:
    """Boundary class of a phase point.

    Entering states take precedence over the plain interior; states sitting
    outside the slab with a velocity that could not have carried them there
    are rejected as unreachable.
    """
    _check_coords(geom, x)
    q1, v = x.site[0], x.velocity
    if q1 == 0:
        if v.axis == 0 and v.sign == -1:
            return BoundaryClass.OUT_LEFT
        raise ValueError(f"state {x} at the left face is unreachable")
    if q1 == geom.width + 1:
        if v.axis == 0 and v.sign == 1:
            return BoundaryClass.OUT_RIGHT
        raise ValueError(f"state {x} at the right face is unreachable")
    if q1 == 1 and v.axis == 0 and v.sign == 1:
        return BoundaryClass.IN_RIGHTWARD
    if q1 == geom.width and v.axis == 0 and v.sign == -1:
        return BoundaryClass.IN_LEFTWARD
    return BoundaryClass.INTERIOR


_BOUNDARY = {
    BoundaryClass.IN_RIGHTWARD,
    BoundaryClass.IN_LEFTWARD,
    BoundaryClass.OUT_LEFT,
    BoundaryClass.OUT_RIGHT,
}


def reverse_boundary(geom: SlabGeometry, x: PhasePoint) -> PhasePoint:
    """Time-reversal involution (q, p) -> (q - p, -p) on boundary states.

    Swaps entering and outgoing classes: in_rightward <-> out_left and
    in_leftward <-> out_right.
    """
    if classify(geom, x) not in _BOUNDARY:
        raise ValueError(f"state {x} is interior; time reversal needs a boundary state")
    v = x.velocity
    moved = list(x.site)
    moved[v.axis] -= v.sign
    return PhasePoint(tuple(moved), -v)


def canonical_entry(geom: SlabGeometry) -> PhasePoint:
    """Entry state at the all-ones corner of the left face, moving rightward."""
    return PhasePoint((1,) * geom.dim, Velocity(0, 1))
