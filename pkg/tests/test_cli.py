import json

import pytest
from click.testing import CliRunner

from absf.cli import main


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def planned_dir(runner, tmp_path_factory):
    out = tmp_path_factory.mktemp("cli_plan")
    result = runner.invoke(main, ["plan", "--scenario", "S1", "--seed", "1",
                                  "--out-dir", str(out)])
    assert result.exit_code == 0, result.output
    return out


def _stderr(result):
    return getattr(result, "stderr", "") or result.output


class TestPlanAndCheck:
    def test_plan_writes_file(self, planned_dir):
        doc = json.loads((planned_dir / "plan.json").read_text())
        assert doc["format"] == "absf-plan/1"
        assert 105.0 <= doc["theta_deg"] <= 115.0

    def test_check_passes_on_solved_plan(self, runner, planned_dir):
        result = runner.invoke(main, ["check", "--scenario", "S1",
                                      "--plan", str(planned_dir / "plan.json")])
        assert result.exit_code == 0, result.output
        assert "feasible" in result.output

    def test_missing_scenario_file_exits_2(self, runner):
        result = runner.invoke(main, ["plan", "--scenario", "/no/such/scenario.json",
                                      "--seed", "0"])
        assert result.exit_code == 2
        assert "/no/such/scenario.json" in _stderr(result)

    def test_missing_plan_file_exits_2(self, runner):
        result = runner.invoke(main, ["check", "--scenario", "S1",
                                      "--plan", "/no/such/plan.json"])
        assert result.exit_code == 2
        assert "/no/such/plan.json" in _stderr(result)

    def test_scenario_with_missing_model_exits_2(self, runner, tmp_path):
        bad = tmp_path / "broken.json"
        bad.write_text(json.dumps({
            "format": "absf-scenario/1", "name": "broken",
            "model": "missing_model.json", "bmd": "missing_bmd.json",
            "sides": {}, "injection": {"tube_inner_radius_mm": 0.5,
                                       "tube_length_mm": 100.0},
        }))
        result = runner.invoke(main, ["plan", "--scenario", str(bad), "--seed", "0"])
        assert result.exit_code == 2
        assert "missing_model.json" in _stderr(result)


class TestSimulateInjectEvaluate:
    def test_simulate_writes_traces(self, runner, planned_dir, tmp_path):
        out = tmp_path / "sim"
        result = runner.invoke(main, [
            "simulate", "--scenario", "S1", "--plan", str(planned_dir / "plan.json"),
            "--seed", "2", "--out-dir", str(out),
        ])
        assert result.exit_code == 0, result.output
        files = sorted(p.name for p in out.glob("trace_*.csv"))
        assert files == [
            "trace_left_1.csv", "trace_left_2.csv", "trace_left_3.csv",
            "trace_right_1.csv", "trace_right_2.csv", "trace_right_3.csv",
        ]

    def test_inject_reports_bridged(self, runner, planned_dir, tmp_path):
        out = tmp_path / "fill"
        result = runner.invoke(main, [
            "inject", "--scenario", "S1", "--plan", str(planned_dir / "plan.json"),
            "--out-dir", str(out),
        ])
        assert result.exit_code == 0, result.output
        assert "bridged: True" in result.output
        assert (out / "fill.csv").exists()

    def test_evaluate_with_params(self, runner, tmp_path):
        import math

        alpha_s = (110.0 - math.degrees(42.5 / 25.0)) - 6.3
        params = tmp_path / "params.json"
        params.write_text(json.dumps({
            "sides": {
                "left": {"kind": "curved", "corridor": 0, "alpha_deg": 6.3,
                         "slide": 2.413539, "l_ot": 28.5, "l_it": 42.5, "r": 25.0},
                "right": {"kind": "straight", "corridor": 1, "alpha_deg": alpha_s,
                          "slide": 3.190357, "l_ot": 49.4},
            }
        }))
        result = runner.invoke(main, ["evaluate", "--scenario", "S1",
                                      "--params", str(params)])
        assert result.exit_code == 0, result.output
        assert "meeting angle 110.00" in result.output
        assert "feasible True" in result.output

    def test_evaluate_requires_input(self, runner):
        result = runner.invoke(main, ["evaluate", "--scenario", "S1"])
        assert result.exit_code == 2
