"""Deterministic single-step map and slab-crossing runs.

One step scatters the velocity on the mirror at the current site and moves
one lattice unit; a run iterates until the trajectory leaves through a face.
Termination within 2d * |slab sites| steps is a theorem of the bijective
dynamics, so exceeding the bound is treated as data corruption, never as a
censored sample.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Optional

from .geometry import (
    BoundaryClass,
    PhasePoint,
    SlabGeometry,
    classify,
)

_ENTERING = (BoundaryClass.IN_RIGHTWARD, BoundaryClass.IN_LEFTWARD)


@dataclass(frozen=True)
class ExitRecord:
    exit: PhasePoint
    steps: int
    crossed: bool


def step(geom: SlabGeometry, field, x: PhasePoint) -> PhasePoint:
    """One application of the dynamics: scatter at the current site, then move."""
    if not geom.inside(x.site):
        raise ValueError(f"cannot step from {x}: position outside the slab")
    v = field.matching_at(x.site).scatter(x.velocity)
    return PhasePoint(geom.translate(x.site, v), v)


def run_to_exit(
    geom: SlabGeometry,
    field,
    x: PhasePoint,
    *,
    trace: Optional[IO[str]] = None,
) -> ExitRecord:
    """Iterate the step map from an entering state until the trajectory exits.

    With `trace` set, writes one line per step: "<time> <site> <velocity>".
    """
    if classify(geom, x) not in _ENTERING:
        raise ValueError(f"run must start from an entering state, got {x}")
    bound = geom.step_bound
    steps = 0
    while True:
        x = step(geom, field, x)
        steps += 1
        if trace is not None:
            v = x.velocity
            trace.write(f"{steps} {','.join(map(str, x.site))} {v.sign * (v.axis + 1):+d}\n")
        q1 = x.site[0]
        if q1 == 0:
            return ExitRecord(x, steps, False)
        if q1 == geom.width + 1:
            return ExitRecord(x, steps, True)
        if steps > bound:
            raise RuntimeError(
                f"trajectory exceeded the hard step bound {bound}; "
                "disorder or geometry state is corrupt"
            )


def run_pair_to_exit(
    geom: SlabGeometry, field, x_a: PhasePoint, x_b: PhasePoint
) -> tuple[ExitRecord, ExitRecord]:
    """Run two entries through the same disorder realization.

    Trajectories do not interact; each record equals a standalone run.
    """
    return run_to_exit(geom, field, x_a), run_to_exit(geom, field, x_b)


def run_with_interface_trace(
    geom: SlabGeometry, field, x: PhasePoint
) -> tuple[ExitRecord, int]:
    """Run to exit while counting left-to-right passages of the midplane.

    The interface sits after column width/2; the count l is the number of
    passages from the left half into the right half before exit, so a straight
    crossing has l = 1 and a reflection that never reaches the interface l = 0.
    """
    if geom.width % 2:
        raise ValueError(f"interface runs need an even width, got {geom.width}")
    if classify(geom, x) not in _ENTERING:
        raise ValueError(f"run must start from an entering state, got {x}")
    half = geom.width // 2
    bound = geom.step_bound
    steps = 0
    passages = 0
    while True:
        prev_q1 = x.site[0]
        x = step(geom, field, x)
        steps += 1
        q1 = x.site[0]
        if prev_q1 == half and q1 == half + 1:
            passages += 1
        if q1 == 0:
            return ExitRecord(x, steps, False), passages
        if q1 == geom.width + 1:
            return ExitRecord(x, steps, True), passages
        if steps > bound:
            raise RuntimeError(
                f"trajectory exceeded the hard step bound {bound}; "
                "disorder or geometry state is corrupt"
            )
