"""Stable schemas and reproducible formatting of the output writers."""

import json
from fractions import Fraction

from mirrorslab.estimators import enumerate_exact
from mirrorslab.geometry import SlabGeometry
from mirrorslab import reporting


class TestFormatting:
    def test_floats_round_trip(self):
        text = reporting.render_csv(["x"], [[0.1 + 0.2], [1e-17], [float("nan")]])
        lines = text.splitlines()
        assert lines[1] == repr(0.1 + 0.2)
        assert float(lines[2]) == 1e-17
        assert lines[3] == "nan"

    def test_fractions_render_exactly(self):
        text = reporting.render_csv(["mass"], [[Fraction(7, 9)]])
        assert text.splitlines()[1] == "7/9"

    def test_headers_pinned(self):
        assert reporting.ESTIMATE_HEADER == [
            "quantity", "d", "N", "M", "samples",
            "estimate", "stderr", "ci_low", "ci_high", "seed",
        ]
        assert reporting.PASSAGE_HEADER == ["l", "count", "eta_hat", "eta_stderr"]
        assert reporting.SCALE_HEADER == [
            "n", "N", "M", "samples", "c_hat", "c_err", "kappa_hat", "kappa_err",
            "delta_measured", "delta_err", "delta_predicted", "overlap", "alpha",
        ]
        assert reporting.FIGURE_HEADER == [
            "n", "N", "measured", "ci_low", "ci_high", "predicted",
        ]


class TestOracleRows:
    def test_rows_cover_kernel(self):
        result = enumerate_exact(SlabGeometry(2, 1, 2))
        header, rows = reporting.oracle_rows(result)
        assert header == ["kind", "site", "velocity", "mass", "mass_float"]
        assert rows[0][0] == "crossing"
        masses = [r[3] for r in rows[1:]]
        assert sum(masses) == 1


class TestManifest:
    def test_replayable_payload(self, tmp_path):
        path = tmp_path / "run.manifest.json"
        reporting.write_manifest(
            path, "cross", {"seed": 7, "samples": 100}, ["run.csv"]
        )
        payload = json.loads(path.read_text())
        assert payload["schema"] == reporting.MANIFEST_SCHEMA
        assert payload["command"] == "cross"
        assert payload["config"] == {"seed": 7, "samples": 100}
        assert payload["outputs"] == ["run.csv"]
        assert payload["version"]
