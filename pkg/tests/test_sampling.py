import numpy as np
import pytest

from czreach.czono import ConstrainedZonotope, SetUnion
from czreach.sampling import sample_trajectories, sample_union, simulate
from czreach.scenario import compute_reach, scenario_from_dict
from helpers import SCENARIO_DIR


def di_scenario(network, horizon=2, method="exact"):
    return scenario_from_dict({
        "model": {"kind": "linear", "A_d": [[1.0, 1.0], [0.0, 1.0]], "B_d": [[0.5], [1.0]]},
        "network": network,
        "initial_set": {"lo": [2.5, -0.25], "hi": [3.0, 0.25]},
        "horizon": horizon,
        "method": method,
        "seed": 7,
    })


def test_no_samples_gives_empty_report():
    s = di_scenario(str(SCENARIO_DIR / "di_network.json"))
    report = sample_trajectories(s, 0, result=compute_reach(s, method="over"))
    assert report.samples == 0
    assert report.contained == [0, 0, 0]
    assert report.fractions == [1.0, 1.0, 1.0]
    assert report.trajectories.shape == (0, 3, 2)


@pytest.mark.parametrize("method", ["exact", "over"])
def test_di_trajectories_stay_inside(method):
    s = di_scenario(str(SCENARIO_DIR / "di_network.json"), horizon=3, method=method)
    report = sample_trajectories(s, 60)
    assert report.all_contained, report.misses
    assert report.seed == 7
    assert report.trajectories.shape == (60, 4, 2)


def test_seed_is_reproducible(di_model, di_initial_set, di_net):
    a = simulate(di_model, di_net, di_initial_set, 3, 20, np.random.default_rng(3))
    b = simulate(di_model, di_net, di_initial_set, 3, 20, np.random.default_rng(3))
    assert np.array_equal(a, b)


def test_misses_are_reported():
    s = di_scenario(str(SCENARIO_DIR / "di_network.json"), horizon=1)
    result = compute_reach(s)
    # Replace step 1 with a set far from every trajectory.
    result.steps[1] = SetUnion([ConstrainedZonotope.from_box([50.0, 50.0], [51.0, 51.0])])
    report = sample_trajectories(s, 10, result=result)
    assert report.contained == [10, 0]
    assert not report.all_contained
    assert report.misses == [(1, k) for k in range(10)]
    assert report.to_dict()["misses"][0] == {"t": 1, "sample": 0}


def test_union_sampling_uses_every_member(rng):
    union = SetUnion([
        ConstrainedZonotope.from_box([0.0, 0.0], [1.0, 1.0]),
        ConstrainedZonotope.from_box([5.0, 5.0], [6.0, 6.0]),
    ])
    pts = sample_union(union, 400, rng)
    assert pts.shape == (400, 2)
    assert 100 < np.sum(pts[:, 0] < 2.0) < 300
    assert all(union.contains_point(p) for p in pts[:50])
