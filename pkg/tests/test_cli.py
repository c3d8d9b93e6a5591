"""Command-line contracts: schemas, exit codes, reproducibility, artifacts."""

import json

import pytest

from mirrorslab.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestUsage:
    def test_rejects_dim_one(self, capsys):
        code, _, err = run_cli(capsys, "cross", "--dim", "1", "--width", "1")
        assert code == 1
        assert "dimension" in err

    def test_rejects_unknown_command(self, capsys):
        code, _, _ = run_cli(capsys, "frobnicate")
        assert code == 1

    def test_rejects_bad_samples(self, capsys):
        code, _, _ = run_cli(capsys, "cross", "--width", "1", "--samples", "0")
        assert code == 1

    def test_version_runs(self, capsys):
        code, out, _ = run_cli(capsys, "--version")
        assert code == 0
        assert out.strip()


class TestMarkovCommand:
    def test_exact_table(self, capsys):
        code, out, _ = run_cli(capsys, "markov", "--dim", "3", "--max-n", "4")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "n,N,c_exact,c_float,kappa_exact"
        assert lines[1].startswith("0,1,3/5,0.6,3/2")
        assert lines[2].startswith("1,2,3/7,")
        assert len(lines) == 6

    def test_verify_column_within_3_sigma(self, capsys):
        code, out, _ = run_cli(
            capsys, "markov", "--dim", "2", "--max-n", "2",
            "--verify", "--samples", "5e4", "--seed", "3",
        )
        assert code == 0
        for line in out.strip().splitlines()[1:]:
            cells = line.split(",")
            exact, mc, stderr = float(cells[3]), float(cells[5]), float(cells[6])
            assert abs(mc - exact) < 3.5 * stderr


class TestCrossCommand:
    def test_csv_shape_and_kappa(self, capsys):
        code, out, _ = run_cli(
            capsys, "cross", "--dim", "2", "--width", "1", "--aspect", "64",
            "--samples", "2e4", "--seed", "7",
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "quantity,d,N,M,samples,estimate,stderr,ci_low,ci_high,seed"
        crossing = lines[1].split(",")
        kappa = lines[2].split(",")
        assert crossing[0] == "crossing" and kappa[0] == "kappa"
        c = float(crossing[5])
        assert abs(c - 2.0 / 3.0) < 0.02
        assert float(kappa[5]) == pytest.approx(c / (1 - c), rel=1e-12)

    def test_byte_identical_reruns(self, capsys):
        argv = ["cross", "--dim", "3", "--width", "2", "--samples", "1e4", "--seed", "5"]
        _, out_a, _ = run_cli(capsys, *argv)
        _, out_b, _ = run_cli(capsys, *argv)
        assert out_a == out_b

    def test_worker_count_does_not_change_output(self, capsys):
        base = ["cross", "--dim", "3", "--width", "2", "--samples", "2e4", "--seed", "5"]
        _, out_one, _ = run_cli(capsys, *base, "--workers", "1")
        _, out_two, _ = run_cli(capsys, *base, "--workers", "2")
        assert out_one == out_two

    def test_degenerate_exit_code(self, capsys):
        code, _, err = run_cli(
            capsys, "cross", "--dim", "2", "--width", "1", "--samples", "1",
            "--seed", "1",
        )
        assert code == 2
        assert "degenerate" in err

    def test_hex_seed_equals_decimal(self, capsys):
        base = ["cross", "--dim", "2", "--width", "1", "--samples", "1e4"]
        _, out_hex, _ = run_cli(capsys, *base, "--seed", "0x10")
        _, out_dec, _ = run_cli(capsys, *base, "--seed", "16")
        assert out_hex == out_dec

    def test_json_format(self, capsys):
        code, out, _ = run_cli(
            capsys, "cross", "--dim", "2", "--width", "1",
            "--samples", "1e4", "--format", "json",
        )
        assert code == 0
        rows = json.loads(out)
        assert rows[0]["quantity"] == "crossing"
        assert 0 < rows[0]["estimate"] < 1


class TestOracleCommand:
    def test_exact_seven_ninths(self, capsys):
        code, out, _ = run_cli(
            capsys, "oracle", "--dim", "2", "--width", "1", "--transverse", "2"
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "kind,site,velocity,mass,mass_float"
        assert lines[1].startswith("crossing,,,7/9,")

    def test_budget_exit_code(self, capsys):
        code, _, err = run_cli(
            capsys, "oracle", "--dim", "2", "--width", "2", "--transverse", "2",
            "--budget", "10",
        )
        assert code == 3
        assert "budget" in err


class TestRecurseCommand:
    def test_limit_row(self, capsys):
        code, out, _ = run_cli(
            capsys, "recurse", "--kappa", "1.5397", "--n", "8", "--alpha", "0.0374"
        )
        assert code == 0
        last = out.strip().splitlines()[-1].split(",")
        assert last[0] == "limit"
        assert abs(float(last[2]) - 1.5403) <= 1e-4


class TestReportCommands:
    def test_kernel_smoke(self, capsys):
        code, out, _ = run_cli(
            capsys, "kernel", "--dim", "2", "--width", "1", "--samples", "5e3",
            "--projection", "transverse",
        )
        assert code == 0
        assert out.splitlines()[0] == "side,offset1,count,mass"

    def test_closure_smoke(self, capsys):
        code, out, _ = run_cli(
            capsys, "closure", "--dim", "2", "--width", "2", "--samples", "5e3"
        )
        assert code == 0
        assert out.splitlines()[0] == "side_a,side_b,count,mass"

    def test_overlap_rows(self, capsys):
        code, out, _ = run_cli(
            capsys, "overlap", "--dim", "2", "--n", "1", "--samples", "5e3"
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[1].split(",")[0] == "overlap"
        assert lines[2].split(",")[0] == "alpha"
        assert float(lines[2].split(",")[5]) == pytest.approx(
            2 * float(lines[1].split(",")[5])
        )

    def test_r2_smoke(self, capsys):
        code, out, _ = run_cli(
            capsys, "r2", "--dim", "2", "--n", "1", "--samples", "2e4"
        )
        assert code == 0
        header = out.splitlines()[0]
        assert header.startswith("quantity,d,N,M,samples,estimate,stderr")


class TestPassageCommand:
    def test_table_and_figure(self, capsys, tmp_path):
        out_csv = tmp_path / "passage.csv"
        fig = tmp_path / "passage.png"
        code, _, _ = run_cli(
            capsys, "passage", "--dim", "3", "--n", "1", "--samples", "2e4",
            "--out", str(out_csv), "--plot", str(fig),
        )
        assert code == 0
        lines = out_csv.read_text().splitlines()
        assert lines[0] == "l,count,eta_hat,eta_stderr"
        assert fig.exists() and fig.stat().st_size > 0
        manifest = json.loads((tmp_path / "passage.csv.manifest.json").read_text())
        assert manifest["schema"] == "mirrorslab.manifest/1"
        assert str(fig) in manifest["outputs"]


class TestSweepCommand:
    def test_artifacts_and_schema(self, capsys, tmp_path):
        out_csv = tmp_path / "sweep.csv"
        fig = tmp_path / "sweep.png"
        code, _, _ = run_cli(
            capsys, "sweep", "--dim", "3", "--n", "0..1", "--model", "markov",
            "--samples", "2e4", "--seed", "4", "--aspect", "4",
            "--out", str(out_csv), "--plot", str(fig),
        )
        assert code == 0
        lines = out_csv.read_text().splitlines()
        assert lines[0] == ("n,N,M,samples,c_hat,c_err,kappa_hat,kappa_err,"
                            "delta_measured,delta_err,delta_predicted,overlap,alpha")
        assert len(lines) == 3
        figure_csv = tmp_path / "sweep.figure.csv"
        assert figure_csv.read_text().splitlines()[0] == (
            "n,N,measured,ci_low,ci_high,predicted"
        )
        assert fig.exists() and fig.stat().st_size > 0
        manifest = json.loads((tmp_path / "sweep.csv.manifest.json").read_text())
        assert manifest["command"] == "sweep"
        assert manifest["config"]["seed"] == 4

    def test_round_trip_parse(self, capsys, tmp_path):
        out_csv = tmp_path / "sweep.csv"
        run_cli(
            capsys, "sweep", "--dim", "2", "--n", "0..0", "--model", "markov",
            "--samples", "1e4", "--out", str(out_csv),
        )
        import csv

        with open(out_csv) as handle:
            rows = list(csv.DictReader(handle))
        assert len(rows) == 1
        row = rows[0]
        kappa = float(row["kappa_hat"])
        c = float(row["c_hat"])
        n = int(row["N"])
        assert kappa == pytest.approx(n * c / (1 - c), rel=1e-12)


class TestConfigFile:
    def test_config_overridden_by_flags(self, capsys, tmp_path):
        config = tmp_path / "defaults.json"
        config.write_text(json.dumps({"samples": 5000, "seed": 9}))
        code, out, _ = run_cli(
            capsys, "--config", str(config), "cross", "--dim", "2", "--width", "1"
        )
        assert code == 0
        assert out.splitlines()[1].split(",")[4] == "5000"
        # explicit flag wins over the config value
        code, out, _ = run_cli(
            capsys, "--config", str(config), "cross", "--dim", "2", "--width", "1",
            "--samples", "2000",
        )
        assert out.splitlines()[1].split(",")[4] == "2000"

    def test_bad_config_is_usage_error(self, capsys, tmp_path):
        config = tmp_path / "broken.json"
        config.write_text("{nope")
        code, _, err = run_cli(
            capsys, "--config", str(config), "cross", "--dim", "2", "--width", "1"
        )
        assert code == 1
        assert "config" in err
