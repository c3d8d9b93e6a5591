"""Vectorized batch trajectory kernels for the mirrors and baseline walks.

Trajectories are advanced in lockstep over numpy arrays and compacted as they
exit.  Every per-walker random value is a pure function of (its 64-bit key,
the lattice site or step counter), reproducing the scalar modules bit for bit,
so results are independent of batch size, worker count, and schedule.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .disorder import all_matchings, mix64
from .geometry import SlabGeometry

_ADD = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)


def mix64_array(x: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 output function; matches disorder.mix64 exactly."""
    z = x + _ADD
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def sample_keys(seed: int, realizations: np.ndarray) -> np.ndarray:
    """Field keys for an array of realization indices; matches derive_key."""
    base = np.uint64(mix64(seed & ((1 << 64) - 1)))
    return mix64_array(base + realizations.astype(np.uint64) * _ADD)


@lru_cache(maxsize=None)
def scatter_table(d: int) -> np.ndarray:
    """Flat (matchings x directions) table of outgoing direction indices."""
    matchings = all_matchings(d)
    table = np.empty(len(matchings) * 2 * d, dtype=np.int64)
    for k, m in enumerate(matchings):
        for v in range(2 * d):
            table[k * 2 * d + v] = m.scatter_index(v)
    return table


@lru_cache(maxsize=None)
def delta_tables(d: int) -> tuple[np.ndarray, ...]:
    """Per-axis coordinate increments indexed by direction."""
    out = []
    for axis in range(d):
        dq = np.zeros(2 * d, dtype=np.int64)
        dq[2 * axis] = 1
        dq[2 * axis + 1] = -1
        out.append(dq)
    return tuple(out)


@dataclass
class BatchResult:
    """Per-sample outcomes in the original sample order."""

    crossed: np.ndarray
    steps: np.ndarray
    exit_transverse: Optional[np.ndarray]
    passages: Optional[np.ndarray]
    max_steps: int


def entry_arrays(
    geom: SlabGeometry,
    n: int,
    site: Optional[tuple[int, ...]] = None,
    vel_index: int = 0,
) -> tuple[list[np.ndarray], np.ndarray]:
    """Coordinate and velocity arrays for n identical entries (canonical default)."""
    if site is None:
        site = (1,) * geom.dim
    coords = [np.full(n, site[j], dtype=np.int64) for j in range(geom.dim)]
    vel = np.full(n, vel_index, dtype=np.int64)
    return coords, vel


def run_batch(
    geom: SlabGeometry,
    keys: np.ndarray,
    coords: list[np.ndarray],
    vel: np.ndarray,
    *,
    model: str = "mirrors",
    record_exits: bool = False,
    count_passages: bool = False,
) -> BatchResult:
    """Advance a batch of walkers to exit.

    `model="mirrors"` consumes site-keyed randomness (the quenched field);
    `model="markov"` consumes step-keyed randomness (the non-backtracking
    walk).  Walkers sharing a key in mirrors mode see the same disorder.
    """
    if model not in ("mirrors", "markov"):
        raise ValueError(f"unknown model {model!r}")
    d, width, m_ext = geom.dim, geom.width, geom.transverse
    twod = 2 * d
    n = len(vel)
    if len(keys) != n or any(len(c) != n for c in coords):
        raise ValueError("keys, coords, and vel must have matching lengths")

    keys = keys.astype(np.uint64, copy=False)
    coords = [c.astype(np.int64, copy=True) for c in coords]
    vel = vel.astype(np.int64, copy=True)
    steps = np.zeros(n, dtype=np.int64)
    orig = np.arange(n, dtype=np.int64)
    passages = np.zeros(n, dtype=np.int64) if count_passages else None
    half = width // 2

    out_crossed = np.zeros(n, dtype=bool)
    out_steps = np.zeros(n, dtype=np.int64)
    out_exit = np.zeros((n, d - 1), dtype=np.int64) if record_exits else None
    out_pass = np.zeros(n, dtype=np.int64) if count_passages else None

    table = scatter_table(d) if model == "mirrors" else None
    deltas = delta_tables(d)
    n_match = np.uint64(len(all_matchings(d)))
    n_turn = np.uint64(twod - 1)
    m_u = np.int64(m_ext)
    bound = geom.step_bound
    max_steps = 0
    iteration = 0

    while len(vel):
        iteration += 1
        if iteration > bound:
            raise RuntimeError(
                f"batch exceeded the hard step bound {bound}; "
                "disorder or geometry state is corrupt"
            )
        if model == "mirrors":
            site = coords[0] - 1
            for j in range(1, d):
                site = site * m_u + (coords[j] - 1)
            h = mix64_array(keys ^ mix64_array(site.astype(np.uint64)))
            midx = (h % n_match).astype(np.int64)
            vel = np.take(table, midx * twod + vel)
        else:
            h = mix64_array(keys ^ mix64_array((steps + 1).astype(np.uint64)))
            r = (h % n_turn).astype(np.int64)
            rev = vel ^ 1
            vel = r + (r >= rev)
        steps += 1
        if count_passages:
            prev0 = coords[0].copy()
        coords[0] = coords[0] + np.take(deltas[0], vel)
        for j in range(1, d):
            coords[j] = (coords[j] + np.take(deltas[j], vel) - 1) % m_u + 1
        if count_passages:
            passages += (prev0 == half) & (coords[0] == half + 1)

        q1 = coords[0]
        exited = (q1 == 0) | (q1 == width + 1)
        if exited.any():
            done = orig[exited]
            out_crossed[done] = q1[exited] == width + 1
            out_steps[done] = steps[exited]
            if record_exits:
                for j in range(1, d):
                    out_exit[done, j - 1] = coords[j][exited]
            if count_passages:
                out_pass[done] = passages[exited]
            max_steps = max(max_steps, int(steps[exited].max()))
            keep = ~exited
            keys = keys[keep]
            vel = vel[keep]
            steps = steps[keep]
            orig = orig[keep]
            coords = [c[keep] for c in coords]
            if count_passages:
                passages = passages[keep]

    return BatchResult(out_crossed, out_steps, out_exit, out_pass, max_steps)
