import io
import json
import math

import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner

from app.main import cli
from app.services import validation

TINY = ["--nmax", "4", "--population", "8", "--generations", "5", "--local-iters", "10", "--restarts", "1"]


@pytest.fixture
def runner():
    return CliRunner(mix_stderr=False)


def read_csv(text):
    return pd.read_csv(io.StringIO(text))


class TestQfiCommand:
    def test_fock_single_gamma(self, runner):
        result = runner.invoke(cli, ["qfi", "--probe", "fock:2", "--gamma", "0.5"])
        assert result.exit_code == 0, result.stderr
        frame = read_csv(result.stdout)
        assert list(frame.columns) == ["gamma", "probe_id", "nbar", "qfi", "fi_pn"]
        assert frame.loc[0, "qfi"] == pytest.approx(4.0, rel=1e-12)
        assert frame.loc[0, "fi_pn"] == pytest.approx(4.0, rel=1e-9)

    def test_grid_rows(self, runner):
        result = runner.invoke(cli, ["qfi", "--probe", "fock:2,coherent", "--nbar", "2",
                                     "--gamma-count", "3", "--gamma-min", "0.1", "--gamma-max", "0.5"])
        assert result.exit_code == 0, result.stderr
        frame = read_csv(result.stdout)
        assert len(frame) == 6
        assert list(frame["probe_id"][:2]) == ["fock:2", "coherent"]

    def test_json_output(self, runner):
        result = runner.invoke(cli, ["qfi", "--probe", "fock:3", "--gamma", "0.2", "--format", "json"])
        assert result.exit_code == 0, result.stderr
        records = json.loads(result.stdout)
        assert records[0]["probe_id"] == "fock:3"

    def test_empty_grid_is_usage_error(self, runner):
        result = runner.invoke(cli, ["qfi", "--probe", "fock:2", "--gamma-count", "0"])
        assert result.exit_code == 2

    def test_unknown_probe_is_usage_error(self, runner):
        result = runner.invoke(cli, ["qfi", "--probe", "thermal", "--gamma", "0.5"])
        assert result.exit_code == 2

    def test_missing_mean_is_usage_error(self, runner):
        result = runner.invoke(cli, ["qfi", "--probe", "coherent", "--gamma", "0.5"])
        assert result.exit_code == 2

    def test_gamma_one_is_usage_error(self, runner):
        result = runner.invoke(cli, ["qfi", "--probe", "fock:2", "--gamma", "1.0"])
        assert result.exit_code == 2

    def test_dv_coefficients_from_file(self, runner, tmp_path):
        coefficients = tmp_path / "coeffs.json"
        coefficients.write_text(json.dumps({"coefficients": [0, 0, 1]}))
        result = runner.invoke(cli, ["qfi", "--probe", f"dv:{coefficients}", "--gamma", "0.5"])
        assert result.exit_code == 0, result.stderr
        assert read_csv(result.stdout).loc[0, "qfi"] == pytest.approx(4.0, rel=1e-12)

    def test_dv_coefficients_from_csv(self, runner, tmp_path):
        coefficients = tmp_path / "coeffs.csv"
        coefficients.write_text("0\n0\n1\n")
        result = runner.invoke(cli, ["qfi", "--probe", f"dv:{coefficients}", "--gamma", "0.5"])
        assert result.exit_code == 0, result.stderr
        assert read_csv(result.stdout).loc[0, "nbar"] == pytest.approx(2.0)

    def test_missing_coefficient_file(self, runner, tmp_path):
        result = runner.invoke(cli, ["qfi", "--probe", f"dv:{tmp_path / 'absent.json'}", "--gamma", "0.5"])
        assert result.exit_code == 2


class TestOptimizeCommand:
    def test_infeasible_mean(self, runner):
        result = runner.invoke(cli, ["optimize", "--nbar", "11", "--nmax", "10", "--gamma", "0.5"])
        assert result.exit_code == 2

    def test_reproducible_files(self, runner, tmp_path):
        outputs = []
        for name in ("first.csv", "second.csv"):
            out = tmp_path / name
            result = runner.invoke(cli, ["optimize", "--nbar", "1.5", "--gamma-count", "2", "--gamma-min", "0.2",
                                         "--gamma-max", "0.6", "--seed", "7", "--out", str(out), *TINY])
            assert result.exit_code == 0, result.stderr
            outputs.append(out)
        assert outputs[0].read_text() == outputs[1].read_text()

        frame = pd.read_csv(outputs[0])
        assert list(frame.columns) == ["gamma", "j", "p_j"]
        assert len(frame) == 2 * 5
        for _, group in frame.groupby("gamma"):
            assert group["p_j"].sum() == pytest.approx(1.0, abs=1e-9)
            assert np.dot(group["j"], group["p_j"]) == pytest.approx(1.5, abs=1e-9)

        archive = json.loads((tmp_path / "first.archive.json").read_text())
        assert len(archive) == 2
        assert {"qfi", "converged", "local_optima", "seed"} <= set(archive[0])
        assert archive[0]["seed"] == 7


class TestRatioCommands:
    def test_efficiency_of_fock(self, runner):
        result = runner.invoke(cli, ["efficiency", "--probe", "fock:3", "--nbar", "3", "--gamma", "0.5"])
        assert result.exit_code == 0, result.stderr
        frame = read_csv(result.stdout)
        assert frame.loc[0, "eta_pn"] == pytest.approx(1.0, rel=1e-9)

    def test_advantage_columns(self, runner):
        result = runner.invoke(cli, ["advantage", "--probe", "fock:2", "--nbar", "2", "--gamma", "0.5"])
        assert result.exit_code == 0, result.stderr
        frame = read_csv(result.stdout)
        assert list(frame.columns) == ["gamma", "probe_id", "nbar", "qfi", "fi_pn", "qa", "eta_pn"]
        assert math.isfinite(frame.loc[0, "qa"]) and frame.loc[0, "qa"] > -1

    def test_advantage_needs_mean(self, runner):
        result = runner.invoke(cli, ["advantage", "--probe", "fock:2", "--gamma", "0.5"])
        assert result.exit_code == 2

    def test_scaling_odd_on_saturates(self, runner):
        result = runner.invoke(cli, ["scaling", "--probe", "on:3", "--gamma", "0.01", "--nbar-min", "0.5",
                                     "--nbar-max", "2", "--nbar-count", "3"])
        assert result.exit_code == 0, result.stderr
        frame = read_csv(result.stdout)
        assert len(frame) == 3
        assert np.allclose(frame["fi_pn"], frame["qfi"], rtol=1e-6)

    def test_scaling_infeasible_mean(self, runner):
        result = runner.invoke(cli, ["scaling", "--probe", "on:3", "--nbar-min", "1", "--nbar-max", "4",
                                     "--nbar-count", "2"])
        assert result.exit_code == 2


class TestValidateCommand:
    def test_quick_passes(self, runner):
        result = runner.invoke(cli, ["validate", "--level", "quick"])
        assert result.exit_code == 0, result.stdout
        assert "checks passed" in result.stdout

    def test_missing_module_fails(self, runner, monkeypatch):
        monkeypatch.setattr(validation, "REQUIRED_MODULES", ["app.services.no_such_module"])
        result = runner.invoke(cli, ["validate"])
        assert result.exit_code == 1
        assert "cannot import" in result.stdout


class TestConfigFile:
    def test_config_supplies_defaults(self, runner, tmp_path):
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"probe": "fock:2", "gamma": 0.5}))
        result = runner.invoke(cli, ["--config", str(config), "qfi"])
        assert result.exit_code == 0, result.stderr
        frame = read_csv(result.stdout)
        assert list(frame["probe_id"]) == ["fock:2"]
        assert frame.loc[0, "gamma"] == pytest.approx(0.5)

    def test_flag_overrides_config(self, runner, tmp_path):
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"probe": "fock:2", "gamma": 0.5}))
        result = runner.invoke(cli, ["--config", str(config), "qfi", "--gamma", "0.25"])
        assert result.exit_code == 0, result.stderr
        assert read_csv(result.stdout).loc[0, "gamma"] == pytest.approx(0.25)

    def test_unknown_key_rejected(self, runner, tmp_path):
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"colour": "blue"}))
        result = runner.invoke(cli, ["--config", str(config), "qfi"])
        assert result.exit_code == 2


class TestStateCommands:
    def test_probe_json(self, runner):
        result = runner.invoke(cli, ["probe", "on:4", "--nbar", "2"])
        assert result.exit_code == 0, result.stderr
        state = json.loads(result.stdout)
        assert state["dim"] == 5
        assert state["amplitudes_re"][0] == pytest.approx(math.sqrt(0.5))
        assert state["amplitudes_re"][4] == pytest.approx(math.sqrt(0.5))

    def test_evolve_distribution(self, runner):
        result = runner.invoke(cli, ["evolve", "fock:2", "--gamma", "0.5", "--format", "csv"])
        assert result.exit_code == 0, result.stderr
        frame = read_csv(result.stdout)
        assert list(frame.columns) == ["n", "p_n"]
        assert frame["p_n"].tolist() == pytest.approx([0.5, 0.0, 0.5], abs=1e-14)

    def test_evolve_density_matrix(self, runner):
        result = runner.invoke(cli, ["evolve", "fock:2", "--gamma", "0.5"])
        assert result.exit_code == 0, result.stderr
        rho = json.loads(result.stdout)
        assert rho["elements_re"][0][0] == pytest.approx(0.5)
