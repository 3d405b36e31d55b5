import json

import pytest

from czreach.pipeline import run_scenario
from czreach.scenario import load_scenario
from czreach.verify import Verdict
from helpers import SCENARIO_DIR

pytestmark = pytest.mark.slow


def test_double_integrator_is_safe(tmp_path):
    outcome = run_scenario(
        load_scenario(SCENARIO_DIR / "double_integrator.json"),
        out_dir=tmp_path, plot_dims=(0, 1), samples=200,
    )
    assert outcome.report.verdict is Verdict.SAFE
    assert outcome.exit_code == 0
    assert outcome.containment.all_contained
    assert outcome.report.lp_count == sum(outcome.result.member_counts[1:])
    assert set(outcome.artifacts) == {"result", "report", "samples", "plot"}
    assert json.loads((tmp_path / "report.json").read_text())["wall_ms"] > 0.0


def test_double_integrator_over_agrees(tmp_path):
    s = load_scenario(SCENARIO_DIR / "double_integrator.json")
    over = run_scenario(s, method="over", samples=200)
    assert over.result.member_counts == [1] * 6
    assert over.containment.all_contained
    # A Safe over-approximate verdict implies the exact one.
    if over.report.is_safe:
        exact = run_scenario(load_scenario(SCENARIO_DIR / "double_integrator.json"))
        assert exact.report.is_safe


@pytest.mark.parametrize("method, samples", [("nonlinear-exact-controller", 1000), ("nonlinear-over-controller", 300)])
def test_duffing_contains_trajectories(tmp_path, method, samples):
    outcome = run_scenario(load_scenario(SCENARIO_DIR / "duffing.json"), out_dir=tmp_path, method=method, samples=samples)
    assert outcome.containment.all_contained, outcome.containment.misses
    assert outcome.exit_code == 0
    steps = json.loads((tmp_path / "result.json").read_text())["steps"]
    assert [s["t"] for s in steps] == [0, 1, 2]
