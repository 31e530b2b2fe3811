"""
CLI Integration Tests

Drives ``python -m gsr_dist`` end to end: argument errors, output formats,
exit codes and byte-level reproducibility.
"""

import csv
import io
import json

import pytest

from tests.conftest import CliRunner

POST_FLAGS = ["--mu", "1.5", "--threshold", "100", "--theta", "1", "--modes", "20"]
PRE_FLAGS = ["--mu", "0.5", "--threshold", "100", "--theta", "0", "--modes", "20"]


def last_error(stderr: str) -> dict:
    """The JSON error payload is the last line written to stderr"""
    return json.loads(stderr.strip().splitlines()[-1])


def read_rows(text: str):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.mark.integration
class TestArgumentHandling:

    def test_help(self, cli: CliRunner):
        """--help exits 0 and lists every subcommand"""
        result = cli.invoke(["--help"])
        assert result.exit_code == 0
        for name in ("spectrum", "survival", "density", "moments", "validate-mc"):
            assert name in result.stdout

    def test_unknown_flag(self, cli: CliRunner):
        """argparse rejects unknown flags with exit 2"""
        result = cli.invoke(["spectrum", *POST_FLAGS, "--bogus"])
        assert result.exit_code == 2

    def test_missing_subcommand(self, cli: CliRunner):
        """A subcommand is required"""
        assert cli.invoke([]).exit_code == 2

    def test_invalid_theta(self, cli: CliRunner):
        """theta outside {0, 1} is a validation error"""
        result = cli.invoke(["spectrum", "--mu", "1", "--threshold", "10", "--theta", "2"])
        assert result.exit_code == 2
        error = last_error(result.stderr)
        assert error["error_code"] == "VALIDATION_ERROR"
        assert any(e["field"] == "theta" for e in error["validation_errors"])

    def test_zero_drift(self, cli: CliRunner):
        """mu = 0 is a validation error"""
        result = cli.invoke(["spectrum", "--mu", "0", "--threshold", "10", "--theta", "0"])
        assert result.exit_code == 2
        assert last_error(result.stderr)["error_code"] == "VALIDATION_ERROR"

    def test_headstart_beyond_threshold(self, cli: CliRunner):
        """r > A exits 2"""
        result = cli.invoke(["survival", *POST_FLAGS, "--headstart", "150", "--tgrid", "1:2:2"])
        assert result.exit_code == 2

    def test_malformed_grid(self, cli: CliRunner):
        """A grid that does not parse is a domain error"""
        result = cli.invoke(["survival", *POST_FLAGS, "--tgrid", "1:2"])
        assert result.exit_code == 2
        assert last_error(result.stderr)["error_code"] == "DOMAIN_ERROR"

    def test_too_few_paths(self, cli: CliRunner):
        """validate-mc refuses tiny runs before any simulation"""
        result = cli.invoke(["validate-mc", *POST_FLAGS, "--paths", "10"])
        assert result.exit_code == 2

    def test_invalid_environment(self, cli: CliRunner):
        """Configuration errors surface before any work"""
        runner = CliRunner(extra_env={"GSR_DIST_MC_DT": "0.5"})
        result = runner.invoke(["spectrum", *POST_FLAGS])
        assert result.exit_code == 1
        assert "GSR_DIST_MC_DT" in result.stderr


@pytest.mark.integration
class TestSpectrumCommand:

    def test_json_to_stdout(self, cli: CliRunner):
        """stdout carries only the spectrum; the summary goes to stderr"""
        result = cli.invoke(["spectrum", *PRE_FLAGS])
        assert result.exit_code == 0
        data = json.loads(result.stdout)
        assert data["n_modes"] == 20
        assert data["theta"] == 0
        assert len(data["betas"]) == 20
        assert "residual_max:" in result.stderr
        assert "alpha0:" in result.stderr

    def test_file_output(self, cli: CliRunner, tmp_path):
        """With --out the summary lines go to stdout"""
        out = tmp_path / "spec.json"
        result = cli.invoke(["spectrum", *POST_FLAGS, "--out", str(out)])
        assert result.exit_code == 0
        assert json.loads(out.read_text())["alpha0"] is None
        assert "alpha0: absent" in result.stdout

    def test_spectrum_file_reused(self, cli: CliRunner, tmp_path):
        """Curves from a saved spectrum match curves from inline flags"""
        spec = tmp_path / "spec.json"
        assert cli.invoke(["spectrum", *POST_FLAGS, "--out", str(spec)]).exit_code == 0
        grid = ["--tgrid", "1:10:4", "--headstart", "25"]
        from_file = cli.invoke(["survival", "--spectrum", str(spec), *grid])
        inline = cli.invoke(["survival", *POST_FLAGS, *grid])
        assert from_file.exit_code == 0
        assert from_file.stdout == inline.stdout


@pytest.mark.integration
class TestCurveCommands:

    def test_survival_at_time_zero(self, cli: CliRunner):
        """Every t = 0 row is exactly 1"""
        result = cli.invoke(
            ["survival", *POST_FLAGS, "--headstart", "0:100:3", "--tgrid", "0:10:6", "--allow-preconv"]
        )
        assert result.exit_code == 0
        rows = read_rows(result.stdout)
        assert list(rows[0]) == ["r", "t", "value", "flag"]
        assert len(rows) == 18
        zero_rows = [row for row in rows if float(row["t"]) == 0.0]
        assert len(zero_rows) == 3
        assert all(row["value"] == "1.0" for row in zero_rows)

    def test_density_json(self, cli: CliRunner):
        """JSON output is one curve object per headstart"""
        result = cli.invoke(
            ["density", *PRE_FLAGS, "--headstart", "10", "--headstart", "60", "--tgrid", "1:20:5", "--format", "json"]
        )
        assert result.exit_code == 0
        curves = json.loads(result.stdout)
        assert [c["meta"]["r"] for c in curves] == [10.0, 60.0]
        assert all(c["kind"] == "density_pre" for c in curves)
        assert all(v >= 0 for c in curves for v in c["values"])

    def test_preconvergence_exit(self, cli: CliRunner):
        """Grid points below t_conv exit 4 unless allowed"""
        args = ["survival", *POST_FLAGS, "--modes", "5", "--tgrid", "0.0001:0.001:3"]
        result = cli.invoke(args)
        assert result.exit_code == 4
        assert last_error(result.stderr)["error_code"] == "PRECONVERGENCE"

        allowed = cli.invoke([*args, "--allow-preconv"])
        assert allowed.exit_code == 0
        assert all(row["flag"] == "preconv" for row in read_rows(allowed.stdout))

    def test_classical_start_early_grid(self, cli: CliRunner):
        """Early r = 0 points are a preconvergence condition, never a validation error"""
        args = ["survival", "--mu", "0.5", "--threshold", "100", "--theta", "0"]
        args += ["--modes", "100", "--tgrid", "0.08:0.5:5"]
        result = cli.invoke(args)
        assert result.exit_code == 4
        assert last_error(result.stderr)["error_code"] == "PRECONVERGENCE"

        allowed = cli.invoke([*args, "--allow-preconv"])
        assert allowed.exit_code == 0, allowed.stderr
        rows = read_rows(allowed.stdout)
        assert rows[0]["flag"] == "preconv"
        assert all(0.0 <= float(row["value"]) <= 1.0 for row in rows)

    def test_sidecar(self, cli: CliRunner, tmp_path):
        """CSV files get a metadata sidecar"""
        out = tmp_path / "curves" / "survival.csv"
        result = cli.invoke(["survival", *POST_FLAGS, "--tgrid", "1:5:3", "--out", str(out)])
        assert result.exit_code == 0
        meta = json.loads((tmp_path / "curves" / "survival.csv.meta.json").read_text())
        assert meta["command"] == "survival"
        assert meta["n_modes"] == 20
        assert meta["curves"][0]["r"] == 0.0

    def test_byte_identical_reruns(self, cli: CliRunner, tmp_path):
        """Identical inputs give identical bytes across runs and thread counts"""
        args = ["survival", *POST_FLAGS, "--headstart", "0:100:5", "--tgrid", "0.5:20:8"]
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        assert cli.invoke([*args, "--out", str(first)]).exit_code == 0
        threaded = CliRunner(extra_env={"GSR_DIST_THREADS": "4"})
        assert threaded.invoke([*args, "--out", str(second)]).exit_code == 0
        assert first.read_bytes() == second.read_bytes()
        assert b"\r\n" not in first.read_bytes()


@pytest.mark.integration
class TestMomentsCommand:

    def test_classical_start_passes(self, cli: CliRunner, tmp_path):
        """r = 0 and r = A/2 reproduce the closed form at 100 modes"""
        out = tmp_path / "moments.csv"
        result = cli.invoke(
            ["moments", *POST_FLAGS, "--modes", "100", "--headstart", "0", "--headstart", "50", "--out", str(out)]
        )
        assert result.exit_code == 0, result.stderr
        rows = read_rows(out.read_text())
        assert list(rows[0]) == ["r", "closed_form", "series_reconstruction", "rel_error"]
        assert [float(row["r"]) for row in rows] == [0.0, 50.0]
        assert all(float(row["rel_error"]) <= 5e-3 for row in rows)
        assert "verdict: PASS" in result.stdout

    def test_json_format(self, cli: CliRunner):
        """JSON carries rows with the effective lower limit, t_star and the verdict"""
        args = ["--modes", "100", "--headstart", "0", "--headstart", "25", "--tstar", "0.01", "--format", "json"]
        result = cli.invoke(["moments", *PRE_FLAGS, *args])
        assert result.exit_code == 0, result.stderr
        payload = json.loads(result.stdout)
        assert payload["t_star"] == 0.01
        assert payload["verdict"] == "PASS"
        classical, later = payload["rows"]
        assert later["closed_form"] == 75.0
        assert later["t_star_eff"] >= 0.01
        assert classical["t_star_eff"] > 0.01
        assert "verdict: PASS" in result.stderr

    def test_failed_identity_exits_5(self, cli: CliRunner):
        """A t* far past the mean passage time breaks the identity: FAIL with exit 5"""
        result = cli.invoke(["moments", *POST_FLAGS, "--headstart", "50", "--tstar", "50", "--format", "json"])
        assert result.exit_code == 5
        assert json.loads(result.stdout)["verdict"] == "FAIL"
