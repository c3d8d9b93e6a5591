"""Monte Carlo estimators of disorder-averaged crossing statistics.

Each estimator draws fresh disorder realizations indexed by absolute sample
number, processes samples in fixed-size chunks through the vectorized engine,
and merges integer counts, so output is bit-identical for any worker count.
The exhaustive oracle averages over every disorder configuration of a small
slab in rational arithmetic and is the ground truth for the estimators.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import engine
from .disorder import FrozenDisorder, all_matchings, count_matchings
from .dynamics import run_to_exit
from .geometry import (
    BoundaryClass,
    PhasePoint,
    SlabGeometry,
    canonical_entry,
    classify,
)
from .stats import CrossingEstimate

CHUNK = 1 << 17

PROJECTIONS = ("side", "transverse", "full")


class EnumerationBudgetError(Exception):
    """The exhaustive oracle would exceed its configured configuration budget."""


def _chunks(total: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + CHUNK, total)) for lo in range(0, total, CHUNK)]


def _map_jobs(fn, jobs: list[tuple], workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def _merge_counts(parts: list[dict]) -> dict:
    merged: dict = {}
    for part in parts:
        for key, value in part.items():
            merged[key] = merged.get(key, 0) + value
    return merged


def _entry_spec(x: PhasePoint) -> tuple[tuple[int, ...], int]:
    return x.site, x.velocity.index


# ---------------------------------------------------------------------------
# crossing probability
# ---------------------------------------------------------------------------


def _crossing_chunk(job) -> tuple[int, int]:
    geom, seed, lo, hi, model, site, vel_index = job
    keys = engine.sample_keys(seed, np.arange(lo, hi, dtype=np.uint64))
    coords, vel = engine.entry_arrays(geom, hi - lo, site, vel_index)
    res = engine.run_batch(geom, keys, coords, vel, model=model)
    return int(res.crossed.sum()), res.max_steps


def estimate_crossing(
    geom: SlabGeometry,
    samples: int,
    seed: int,
    *,
    model: str = "mirrors",
    workers: int = 1,
    entry: Optional[PhasePoint] = None,
) -> CrossingEstimate:
    """Crossing proportion from one fresh disorder realization per sample."""
    if samples < 1:
        raise ValueError("need at least one sample")
    site, vel_index = _entry_spec(entry or canonical_entry(geom))
    jobs = [(geom, seed, lo, hi, model, site, vel_index) for lo, hi in _chunks(samples)]
    parts = _map_jobs(_crossing_chunk, jobs, workers)
    crossed = sum(p[0] for p in parts)
    return CrossingEstimate.from_counts(crossed, samples)


# ---------------------------------------------------------------------------
# single-entry kernel histograms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KernelHistogram:
    """Projected empirical distribution of the exit state of one entry."""

    geom: SlabGeometry
    entry: PhasePoint
    projection: str
    samples: int
    counts: dict

    def masses(self) -> dict:
        return {k: v / self.samples for k, v in self.counts.items()}

    def side_counts(self) -> dict[str, int]:
        """Exit-side marginal, whatever the projection."""
        out = {"left": 0, "right": 0}
        if self.projection == "side":
            for k, v in self.counts.items():
                out[k] += v
        else:
            for (side, _), v in self.counts.items():
                out[side] += v
        return out


def _signed_offsets(exit_t: np.ndarray, entry_t: np.ndarray, m_ext: int) -> np.ndarray:
    """Minimal signed transverse displacement on the periodic torus."""
    delta = (exit_t - entry_t) % m_ext
    delta[delta > m_ext // 2] -= m_ext
    return delta


def _kernel_chunk(job) -> dict:
    geom, seed, lo, hi, model, site, vel_index, projection = job
    keys = engine.sample_keys(seed, np.arange(lo, hi, dtype=np.uint64))
    coords, vel = engine.entry_arrays(geom, hi - lo, site, vel_index)
    res = engine.run_batch(geom, keys, coords, vel, model=model, record_exits=True)
    counts: dict = {}
    if projection == "side":
        right = int(res.crossed.sum())
        counts["right"] = right
        counts["left"] = (hi - lo) - right
        return counts
    if projection == "transverse":
        entry_t = np.array(site[1:], dtype=np.int64)
        values = _signed_offsets(res.exit_transverse, entry_t, geom.transverse)
    else:
        values = res.exit_transverse
    for crossed_flag, label in ((True, "right"), (False, "left")):
        sel = values[res.crossed == crossed_flag]
        if not len(sel):
            continue
        uniq, cnt = np.unique(sel, axis=0, return_counts=True)
        for row, c in zip(uniq, cnt):
            counts[(label, tuple(int(v) for v in row))] = int(c)
    return counts


def estimate_kernel(
    geom: SlabGeometry,
    entry: PhasePoint,
    samples: int,
    seed: int,
    projection: str = "side",
    *,
    model: str = "mirrors",
    workers: int = 1,
    max_face_states: int = 2_000_000,
) -> KernelHistogram:
    """Empirical exit distribution of one entry under fresh disorder per sample.

    The realization schedule matches estimate_crossing, so the exit-side
    marginal reproduces its counts exactly for the same seed.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    if projection not in PROJECTIONS:
        raise ValueError(f"projection must be one of {PROJECTIONS}, got {projection!r}")
    if classify(geom, entry) not in (
        BoundaryClass.IN_RIGHTWARD,
        BoundaryClass.IN_LEFTWARD,
    ):
        raise ValueError(f"entry {entry} is not an entering state")
    if projection == "full":
        face_states = 2 * geom.transverse ** (geom.dim - 1)
        if face_states > max_face_states:
            raise ValueError(
                f"full exit projection needs {face_states} face states, "
                f"budget is {max_face_states}"
            )
    site, vel_index = _entry_spec(entry)
    jobs = [
        (geom, seed, lo, hi, model, site, vel_index, projection)
        for lo, hi in _chunks(samples)
    ]
    counts = _merge_counts(_map_jobs(_kernel_chunk, jobs, workers))
    return KernelHistogram(geom, entry, projection, samples, counts)


# ---------------------------------------------------------------------------
# interface-passage decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PassageTable:
    """Crossing counts split by the number of left-to-right interface passages."""

    geom: SlabGeometry
    samples: int
    l_max: int
    counts: tuple[int, ...]  # index l = 1..l_max
    overflow: int
    crossed: int
    c_n: Optional[CrossingEstimate] = None

    def crossing_probabilities(self) -> dict[int, float]:
        return {l: self.counts[l - 1] / self.samples for l in range(1, self.l_max + 1)}

    def eta_rows(self) -> list[tuple[int, int, float, float]]:
        """(l, count, eta_hat, eta_stderr) against the supplied reference c_n.

        eta_hat(l) divides the measured P(cross, l) by the independent
        concatenation value c^2 (1-c)^(2(l-1)); errors are first-order in both
        the passage proportion and the reference estimate.
        """
        if self.c_n is None:
            raise ValueError("eta rows need the reference crossing estimate c_n")
        c, c_err = self.c_n.p_hat, self.c_n.stderr
        rows = []
        for l in range(1, self.l_max + 1):
            k = self.counts[l - 1]
            p = k / self.samples
            ref = c * c * (1.0 - c) ** (2 * (l - 1))
            eta = p / ref if ref > 0 else math.nan
            if 0 < k < self.samples and ref > 0 and not math.isnan(c_err):
                p_err = math.sqrt(p * (1.0 - p) / self.samples)
                dc = abs(2.0 / c - 2.0 * (l - 1) / (1.0 - c))
                err = eta * math.sqrt((p_err / p) ** 2 + (dc * c_err) ** 2)
            else:
                err = math.nan
            rows.append((l, k, eta, err))
        return rows


def _passage_chunk(job) -> tuple[np.ndarray, int, int]:
    geom, seed, lo, hi, model, l_max = job
    keys = engine.sample_keys(seed, np.arange(lo, hi, dtype=np.uint64))
    coords, vel = engine.entry_arrays(geom, hi - lo)
    res = engine.run_batch(geom, keys, coords, vel, model=model, count_passages=True)
    l_values = res.passages[res.crossed]
    hist = np.bincount(np.minimum(l_values, l_max + 1), minlength=l_max + 2)
    return hist, int(res.crossed.sum()), res.max_steps


def estimate_passage_table(
    geom: SlabGeometry,
    samples: int,
    seed: int,
    l_max: int = 8,
    *,
    c_n: Optional[CrossingEstimate] = None,
    model: str = "mirrors",
    workers: int = 1,
) -> PassageTable:
    """Tabulate crossings of a doubled slab by interface-passage count."""
    if geom.width % 2:
        raise ValueError(f"passage tables need an even width, got {geom.width}")
    if l_max < 2:
        raise ValueError(f"l_max must be >= 2, got {l_max}")
    if samples < 1:
        raise ValueError("need at least one sample")
    jobs = [(geom, seed, lo, hi, model, l_max) for lo, hi in _chunks(samples)]
    parts = _map_jobs(_passage_chunk, jobs, workers)
    hist = np.sum([p[0] for p in parts], axis=0)
    crossed = sum(p[1] for p in parts)
    overflow = int(hist[l_max + 1])
    if crossed and overflow > 0.01 * crossed:
        raise ValueError(
            f"overflow bucket holds {overflow}/{crossed} crossings; raise l_max={l_max}"
        )
    counts = tuple(int(hist[l]) for l in range(1, l_max + 1))
    return PassageTable(geom, samples, l_max, counts, overflow, crossed, c_n)


# ---------------------------------------------------------------------------
# backscatter overlap (coincidence estimator)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OverlapEstimate:
    """Estimate of the summed squared backscatter kernel Sum_x c(y,x)^2."""

    value: float
    samples: int
    stderr: float
    ci_low: float
    ci_high: float
    coincidences: int

    @classmethod
    def from_counts(cls, coincidences: int, samples: int) -> "OverlapEstimate":
        est = CrossingEstimate.from_counts(coincidences, samples)
        return cls(est.p_hat, samples, est.stderr, est.ci_low, est.ci_high, coincidences)


def _overlap_chunk(job) -> int:
    geom, seed, lo, hi, model = job
    pair_idx = np.arange(lo, hi, dtype=np.uint64)
    keys_a = engine.sample_keys(seed, 2 * pair_idx)
    keys_b = engine.sample_keys(seed, 2 * pair_idx + 1)
    coords, vel = engine.entry_arrays(geom, hi - lo)
    res_a = engine.run_batch(geom, keys_a, coords, vel, model=model, record_exits=True)
    res_b = engine.run_batch(geom, keys_b, coords, vel, model=model, record_exits=True)
    both_back = (~res_a.crossed) & (~res_b.crossed)
    same_site = (res_a.exit_transverse == res_b.exit_transverse).all(axis=1)
    return int((both_back & same_site).sum())


def estimate_backscatter_overlap(
    geom: SlabGeometry,
    samples: int,
    seed: int,
    *,
    model: str = "mirrors",
    workers: int = 1,
) -> OverlapEstimate:
    """Coincidence estimate of the squared reflection kernel.

    Each sample runs the canonical entry through two independent disorder
    realizations and scores the event that both exit backwards at the same
    state; the expectation is exactly the sum of squared reflection masses.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    jobs = [(geom, seed, lo, hi, model) for lo, hi in _chunks(samples)]
    coincidences = sum(_map_jobs(_overlap_chunk, jobs, workers))
    return OverlapEstimate.from_counts(coincidences, samples)


# ---------------------------------------------------------------------------
# two-entry closure correlator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JointExitStats:
    """Projected joint exit statistics of two entries sharing one disorder."""

    geom: SlabGeometry
    entry_a: PhasePoint
    entry_b: PhasePoint
    projection: str
    samples: int
    counts: dict
    coincident_exits: int

    def masses(self) -> dict:
        return {k: v / self.samples for k, v in self.counts.items()}

    def side_pair_counts(self) -> dict[tuple[str, str], int]:
        if self.projection == "side":
            return dict(self.counts)
        out: dict[tuple[str, str], int] = {}
        for (sa, sb, _), v in self.counts.items():
            out[(sa, sb)] = out.get((sa, sb), 0) + v
        return out

    def product_deviation(self) -> float:
        """Max absolute deviation of joint side masses from marginal products."""
        pairs = self.side_pair_counts()
        total = self.samples
        pa = {s: sum(v for (sa, _), v in pairs.items() if sa == s) / total for s in ("left", "right")}
        pb = {s: sum(v for (_, sb), v in pairs.items() if sb == s) / total for s in ("left", "right")}
        dev = 0.0
        for sa in ("left", "right"):
            for sb in ("left", "right"):
                joint = pairs.get((sa, sb), 0) / total
                dev = max(dev, abs(joint - pa[sa] * pb[sb]))
        return dev


def _closure_chunk(job) -> tuple[dict, int]:
    geom, seed, lo, hi, site_a, vel_a, site_b, vel_b, projection = job
    keys = engine.sample_keys(seed, np.arange(lo, hi, dtype=np.uint64))
    coords_a, varr_a = engine.entry_arrays(geom, hi - lo, site_a, vel_a)
    coords_b, varr_b = engine.entry_arrays(geom, hi - lo, site_b, vel_b)
    res_a = engine.run_batch(geom, keys, coords_a, varr_a, record_exits=True)
    res_b = engine.run_batch(geom, keys, coords_b, varr_b, record_exits=True)
    coincident = int(
        (
            (res_a.crossed == res_b.crossed)
            & (res_a.exit_transverse == res_b.exit_transverse).all(axis=1)
        ).sum()
    )
    sides_a = np.where(res_a.crossed, 1, 0)
    sides_b = np.where(res_b.crossed, 1, 0)
    label = ("left", "right")
    counts: dict = {}
    if projection == "side":
        joint = sides_a * 2 + sides_b
        for code, c in zip(*np.unique(joint, return_counts=True)):
            counts[(label[code >> 1], label[code & 1])] = int(c)
        return counts, coincident
    offsets = _signed_offsets(res_a.exit_transverse, res_b.exit_transverse, geom.transverse)
    for code in range(4):
        sel = (sides_a * 2 + sides_b) == code
        if not sel.any():
            continue
        uniq, cnt = np.unique(offsets[sel], axis=0, return_counts=True)
        for row, c in zip(uniq, cnt):
            key = (label[code >> 1], label[code & 1], tuple(int(v) for v in row))
            counts[key] = int(c)
    return counts, coincident


def estimate_closure_correlator(
    geom: SlabGeometry,
    entry_a: PhasePoint,
    entry_b: PhasePoint,
    samples: int,
    seed: int,
    projection: str = "side",
    *,
    workers: int = 1,
) -> JointExitStats:
    """Joint exit statistics of two entries run through shared disorder.

    Distinct entries can never exit at the same state (the map to exits is
    injective), which is the hard-core exclusion in the closure factorization;
    equal entries yield the degenerate diagonal.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    if projection not in ("side", "offset"):
        raise ValueError(f"projection must be 'side' or 'offset', got {projection!r}")
    if classify(geom, entry_a) != BoundaryClass.IN_RIGHTWARD:
        raise ValueError(f"entry_a {entry_a} must enter from the left face")
    if entry_a != entry_b and classify(geom, entry_b) != BoundaryClass.IN_LEFTWARD:
        raise ValueError(f"entry_b {entry_b} must enter from the right face")
    site_a, vel_a = _entry_spec(entry_a)
    site_b, vel_b = _entry_spec(entry_b)
    jobs = [
        (geom, seed, lo, hi, site_a, vel_a, site_b, vel_b, projection)
        for lo, hi in _chunks(samples)
    ]
    parts = _map_jobs(_closure_chunk, jobs, workers)
    counts = _merge_counts([p[0] for p in parts])
    coincident = sum(p[1] for p in parts)
    return JointExitStats(geom, entry_a, entry_b, projection, samples, counts, coincident)


# ---------------------------------------------------------------------------
# backscatter-correlation proxy for the second-order remainder
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class R2Estimate:
    """Signed estimate of the cross-passage fluctuation correlator.

    value approximates 2 <dt dt> terms normalized by c^2 (1-c)^2 via the
    three-stage resampling chain (cross, bounce back, re-reflect), differencing
    a shared-disorder and a fresh-disorder reflection of the same return state.
    """

    value: float
    stderr: float
    samples: int
    noise_dominated: bool
    c_hat: float
    crossed: int
    returned: int
    reflected_same: int
    reflected_fresh: int


def _r2_chunk(job) -> tuple[int, int, int, int, int]:
    geom, seed, lo, hi, model = job
    idx = np.arange(lo, hi, dtype=np.uint64)
    stride = np.uint64(4 if model == "markov" else 3)
    keys_a = engine.sample_keys(seed, stride * idx)
    keys_b = engine.sample_keys(seed, stride * idx + np.uint64(1))
    keys_fresh = engine.sample_keys(seed, stride * idx + np.uint64(2))

    coords, vel = engine.entry_arrays(geom, hi - lo)
    res_a = engine.run_batch(geom, keys_a, coords, vel, model=model, record_exits=True)
    sel_cross = res_a.crossed
    crossed = int(sel_cross.sum())
    if not crossed:
        return crossed, 0, 0, 0, 0

    # bounce the forward exit state off an independent copy of the second half
    t_a = res_a.exit_transverse[sel_cross]
    coords_b = [np.full(crossed, 1, dtype=np.int64)] + [
        t_a[:, j].copy() for j in range(geom.dim - 1)
    ]
    vel_b = np.zeros(crossed, dtype=np.int64)
    res_b = engine.run_batch(
        geom, keys_b[sel_cross], coords_b, vel_b, model=model, record_exits=True
    )
    sel_back = ~res_b.crossed
    returned = int(sel_back.sum())
    if not returned:
        return crossed, 0, 0, 0, 0

    # re-enter the first half from the right, in the original disorder and in
    # a fresh one; "reflected" means exiting rightward again
    t_b = res_b.exit_transverse[sel_back]
    coords_c = [np.full(returned, geom.width, dtype=np.int64)] + [
        t_b[:, j].copy() for j in range(geom.dim - 1)
    ]
    vel_c = np.ones(returned, dtype=np.int64)
    if model == "markov":
        keys_same = engine.sample_keys(seed, (stride * idx + np.uint64(3)))[sel_cross][sel_back]
    else:
        keys_same = keys_a[sel_cross][sel_back]
    keys_new = keys_fresh[sel_cross][sel_back]
    res_same = engine.run_batch(geom, keys_same, coords_c, vel_c, model=model)
    res_new = engine.run_batch(geom, keys_new, coords_c, vel_c, model=model)
    t_same = int(res_same.crossed.sum())
    d_fresh = int(res_new.crossed.sum())
    differ = int((res_same.crossed != res_new.crossed).sum())
    return crossed, returned, t_same, d_fresh, differ


def estimate_r2_proxy(
    geom: SlabGeometry,
    samples: int,
    seed: int,
    *,
    model: str = "mirrors",
    workers: int = 1,
) -> R2Estimate:
    """Estimate the reverse-crossing fluctuation correlator at one scale.

    The magnitude is meaningful across scales (it should shrink roughly like
    the inverse squared width); estimates smaller than twice their standard
    error are flagged as noise-dominated.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    jobs = [(geom, seed, lo, hi, model) for lo, hi in _chunks(samples)]
    parts = _map_jobs(_r2_chunk, jobs, workers)
    crossed = sum(p[0] for p in parts)
    returned = sum(p[1] for p in parts)
    t_same = sum(p[2] for p in parts)
    d_fresh = sum(p[3] for p in parts)
    differ = sum(p[4] for p in parts)

    c_hat = crossed / samples
    if not 0.0 < c_hat < 1.0:
        raise ValueError("crossing estimate degenerate; cannot normalize")
    td_mean = (t_same - d_fresh) / samples
    var_z = max(differ / samples - td_mean * td_mean, 0.0)
    td_err = math.sqrt(var_z / samples)
    scale = 2.0 / (c_hat * (1.0 - c_hat) ** 2)
    value = scale * td_mean
    stderr = scale * td_err
    return R2Estimate(
        value, stderr, samples, abs(value) < 2.0 * stderr, c_hat,
        crossed, returned, t_same, d_fresh,
    )


# ---------------------------------------------------------------------------
# exhaustive oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExactResult:
    """Exact disorder average over every configuration of a small slab."""

    geom: SlabGeometry
    entry: PhasePoint
    crossing: Fraction
    kernel: dict[PhasePoint, Fraction] = field(compare=False)
    configurations: int = 0

    def backscatter_overlap(self) -> Fraction:
        """Exact sum of squared reflection masses Sum_x c(entry, x)^2."""
        total = Fraction(0)
        for x, mass in self.kernel.items():
            if classify(self.geom, x) == BoundaryClass.OUT_LEFT:
                total += mass * mass
        return total


def enumerate_exact(
    geom: SlabGeometry,
    entry: Optional[PhasePoint] = None,
    *,
    budget: int = 10**8,
) -> ExactResult:
    """Average the deterministic dynamics over all disorder configurations.

    Raises EnumerationBudgetError when (2d-1)!!^sites exceeds the budget.
    """
    entry = entry or canonical_entry(geom)
    if classify(geom, entry) not in (
        BoundaryClass.IN_RIGHTWARD,
        BoundaryClass.IN_LEFTWARD,
    ):
        raise ValueError(f"entry {entry} is not an entering state")
    n_sites = geom.site_count
    n_match = count_matchings(geom.dim)
    total = n_match**n_sites
    if total > budget:
        raise EnumerationBudgetError(
            f"{n_match}^{n_sites} = {total} configurations exceed budget {budget}"
        )
    sites = list(geom.sites())
    table = all_matchings(geom.dim)
    exit_counts: dict[PhasePoint, int] = {}
    crossed = 0
    for assignment in itertools.product(range(n_match), repeat=n_sites):
        disorder = FrozenDisorder(
            {site: table[k] for site, k in zip(sites, assignment)}
        )
        record = run_to_exit(geom, disorder, entry)
        exit_counts[record.exit] = exit_counts.get(record.exit, 0) + 1
        crossed += record.crossed
    kernel = {x: Fraction(c, total) for x, c in exit_counts.items()}
    return ExactResult(geom, entry, Fraction(crossed, total), kernel, total)
