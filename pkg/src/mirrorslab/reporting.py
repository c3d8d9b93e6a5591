"""Delimited output, run manifests, and figure rendering.

All writers format numbers with repr (shortest round-trip), so a rerun with
the same configuration and seed produces byte-identical files.
"""

from __future__ import annotations

import csv
import json
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional

from . import __version__
from .estimators import ExactResult, JointExitStats, KernelHistogram, PassageTable, R2Estimate
from .multiscale import ScaleReport
from .stats import Z95

MANIFEST_SCHEMA = "mirrorslab.manifest/1"

ESTIMATE_HEADER = [
    "quantity", "d", "N", "M", "samples",
    "estimate", "stderr", "ci_low", "ci_high", "seed",
]
PASSAGE_HEADER = ["l", "count", "eta_hat", "eta_stderr"]
SCALE_HEADER = [
    "n", "N", "M", "samples", "c_hat", "c_err", "kappa_hat", "kappa_err",
    "delta_measured", "delta_err", "delta_predicted", "overlap", "alpha",
]
FIGURE_HEADER = ["n", "N", "measured", "ci_low", "ci_high", "predicted"]


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    return str(value)


def write_csv(path, header: list[str], rows: Iterable[Iterable]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def render_csv(header: list[str], rows: Iterable[Iterable]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def estimate_row(quantity, geom, samples, estimate, stderr, ci_low, ci_high, seed):
    return [
        quantity, geom.dim, geom.width, geom.transverse, samples,
        estimate, stderr, ci_low, ci_high, seed,
    ]


def passage_rows(table: PassageTable) -> list[list]:
    return [list(row) for row in table.eta_rows()]


def kernel_rows(hist: KernelHistogram) -> tuple[list[str], list[list]]:
    d = hist.geom.dim
    if hist.projection == "side":
        header = ["side", "count", "mass"]
        rows = [
            [side, count, count / hist.samples]
            for side, count in sorted(hist.counts.items())
        ]
        return header, rows
    coord = "offset" if hist.projection == "transverse" else "t"
    header = ["side"] + [f"{coord}{j}" for j in range(1, d)] + ["count", "mass"]
    rows = [
        [side, *key, count, count / hist.samples]
        for (side, key), count in sorted(hist.counts.items())
    ]
    return header, rows


def closure_rows(stats: JointExitStats) -> tuple[list[str], list[list]]:
    d = stats.geom.dim
    if stats.projection == "side":
        header = ["side_a", "side_b", "count", "mass"]
        rows = [
            [sa, sb, count, count / stats.samples]
            for (sa, sb), count in sorted(stats.counts.items())
        ]
        return header, rows
    header = ["side_a", "side_b"] + [f"offset{j}" for j in range(1, d)] + ["count", "mass"]
    rows = [
        [sa, sb, *key, count, count / stats.samples]
        for (sa, sb, key), count in sorted(stats.counts.items())
    ]
    return header, rows


def oracle_rows(result: ExactResult) -> tuple[list[str], list[list]]:
    header = ["kind", "site", "velocity", "mass", "mass_float"]
    rows: list[list] = [
        ["crossing", "", "", result.crossing, float(result.crossing)]
    ]
    for x in sorted(result.kernel, key=lambda p: (p.site, p.velocity.index)):
        mass = result.kernel[x]
        v = x.velocity
        rows.append([
            "exit",
            ";".join(map(str, x.site)),
            f"{v.sign * (v.axis + 1):+d}",
            mass,
            float(mass),
        ])
    return header, rows


def r2_rows(est: R2Estimate, geom, seed) -> tuple[list[str], list[list]]:
    header = [
        "quantity", "d", "N", "M", "samples", "estimate", "stderr",
        "noise_dominated", "c_hat", "seed",
    ]
    rows = [[
        "r2_proxy", geom.dim, geom.width, geom.transverse, est.samples,
        est.value, est.stderr, int(est.noise_dominated), est.c_hat, seed,
    ]]
    return header, rows


def scale_rows(reports: list[ScaleReport]) -> list[list]:
    rows = []
    for r in reports:
        delta = r.delta_measured
        rows.append([
            r.n, r.width, r.transverse, r.samples,
            r.c_n.p_hat, r.c_n.stderr, r.kappa, r.kappa_err,
            delta.value, delta.stderr, r.delta_predicted,
            r.overlap.value, r.alpha,
        ])
    return rows


def figure_rows(reports: list[ScaleReport]) -> list[list]:
    rows = []
    for r in reports:
        delta = r.delta_measured
        low, high = r.measured_interval()
        rows.append([
            r.n, r.width, 1.0 + delta.value, low, high, 1.0 + r.delta_predicted,
        ])
    return rows


def write_manifest(path, command: str, config: dict, outputs: list[str]) -> None:
    payload = {
        "schema": MANIFEST_SCHEMA,
        "version": __version__,
        "command": command,
        "config": config,
        "outputs": outputs,
    }
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_sweep_figure(reports: list[ScaleReport], path, title: Optional[str] = None) -> None:
    """Measured doubling ratio with 95% bars against the overlap prediction."""
    plt = _pyplot()
    widths = [r.width for r in reports]
    measured = [1.0 + r.delta_measured.value for r in reports]
    bars = [Z95 * r.delta_measured.stderr for r in reports]
    predicted = [1.0 + r.delta_predicted for r in reports]

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.errorbar(
        widths, measured, yerr=bars, fmt="o", color="tab:blue", capsize=3,
        label="measured ratio",
    )
    ax.plot(widths, predicted, "s--", color="tab:red", label="overlap prediction")
    ax.axhline(1.0, color="gray", lw=0.8)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("slab width")
    ax.set_ylabel("doubling ratio")
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_passage_figure(table: PassageTable, path, title: Optional[str] = None) -> None:
    """Passage-count ratios eta(l) with error bars; the baseline sits at 1."""
    plt = _pyplot()
    rows = table.eta_rows()
    ls = [row[0] for row in rows if row[1] > 0]
    etas = [row[2] for row in rows if row[1] > 0]
    errs = [row[3] for row in rows if row[1] > 0]

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.errorbar(ls, etas, yerr=errs, fmt="o", color="tab:blue", capsize=3)
    ax.axhline(1.0, color="tab:red", lw=1.0, label="independent concatenation")
    ax.set_xlabel("interface passages")
    ax.set_ylabel("eta(l)")
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
