import numpy as np
import pytest

from czreach.czono import ConstrainedZonotope, SetUnion
from czreach.errors import (
    DimensionMismatch,
    EmptySet,
    GammaOutsideHull,
    MemberExplosion,
    PrefixViolation,
    SchemaError,
)
from czreach.exprdyn import NonlinearModel
from czreach.nnet import FeedforwardNetwork, ReduceBudget, eval_network
from czreach.reach import (
    LinearModel,
    ReachResult,
    _check_prefix,
    approximation_error,
    closed_loop_exact_step,
    closed_loop_nonlinear_step,
    closed_loop_over_step,
    naive_closed_loop_step,
    nonlinear_enclosure,
    reach_exact,
    reach_nonlinear,
    reach_over,
    remainder_box,
)
from czreach.sampling import sample_union, simulate
from helpers import assert_same_set, random_cz

GAIN = [[-0.5, -1.0]]


@pytest.fixture
def gain_net():
    """u = K x as a single linear layer."""
    return FeedforwardNetwork([(GAIN, [0.0])])


def assert_paths_contained(result, paths):
    for t in range(result.horizon + 1):
        for x in paths[:, t]:
            assert result.steps[t].contains_point(x), f"state at t={t} escaped"


def hull_area(union):
    lo, hi = union.interval_hull()
    return float(np.prod(hi - lo))


class TestLinearModel:
    def test_shapes_checked(self):
        with pytest.raises(DimensionMismatch):
            LinearModel([[1.0, 0.0]], [[1.0]])
        with pytest.raises(DimensionMismatch):
            LinearModel(np.eye(2), [[1.0]])

    def test_step(self, di_model):
        assert di_model.step([1.0, 2.0], [2.0]) == pytest.approx(np.array([4.0, 4.0]))

    def test_network_must_fit_model(self, di_model, di_initial_set, abs_net):
        with pytest.raises(DimensionMismatch):
            closed_loop_exact_step(di_initial_set, di_model, abs_net)


class TestExactStep:
    def test_constant_controller(self, di_model, di_initial_set, zero_net):
        out = closed_loop_exact_step(di_initial_set, di_model, zero_net)
        assert len(out) == 1
        assert_same_set(out[0], di_initial_set.linear_map(di_model.A_d))

    def test_linear_controller(self, di_model, di_initial_set, gain_net):
        out = closed_loop_exact_step(di_initial_set, di_model, gain_net)
        closed = di_model.A_d + di_model.B_d @ np.array(GAIN)
        assert len(out) == 1
        assert_same_set(out[0], di_initial_set.linear_map(closed), tol=1e-8)

    def test_bundled_net_contains_sampled_states(self, rng, di_model, di_initial_set, di_net):
        out = closed_loop_exact_step(di_initial_set, di_model, di_net)
        paths = simulate(di_model, di_net, di_initial_set, 1, 1000, rng)
        for x in paths[:, 1]:
            assert out.contains_point(x)

    def test_members_share_state_factors(self, di_model, di_initial_set, di_net):
        for member in closed_loop_exact_step(di_initial_set, di_model, di_net):
            assert member.n_gen >= di_initial_set.n_gen
            assert not member.is_empty()

    def test_naive_sum_is_looser(self, rng, di_model, di_initial_set, di_net):
        exact = closed_loop_exact_step(di_initial_set, di_model, di_net)
        naive = naive_closed_loop_step(di_initial_set, di_model, di_net)
        for x in sample_union(exact, 300, rng):
            assert naive.contains_point(x)
        assert hull_area(naive) >= hull_area(exact) - 1e-9

    def test_member_cap(self, di_model, di_initial_set, di_net):
        with pytest.raises(MemberExplosion):
            closed_loop_exact_step(di_initial_set, di_model, di_net, max_members=1)

    def test_prefix_check(self, rng):
        X = random_cz(rng, n_gen=3, n_con=1)
        _check_prefix(X, X.minkowski_sum(random_cz(rng, n_gen=2, n_con=1)))
        with pytest.raises(PrefixViolation):
            _check_prefix(X, random_cz(rng, n_gen=5, n_con=2))


class TestReachExact:
    def test_single_step(self, di_model, di_initial_set, di_net):
        result = reach_exact(di_initial_set, di_model, di_net, 1)
        step = closed_loop_exact_step(di_initial_set, di_model, di_net)
        assert result.member_counts == [1, len(step)]
        for a, b in zip(result.steps[1], step):
            assert a.same_fields(b)

    def test_constant_controller_hulls(self, di_model, di_initial_set, zero_net):
        result = reach_exact(di_initial_set, di_model, zero_net, 3)
        lo, hi = result.steps[2].interval_hull()
        assert lo == pytest.approx([2.0, -0.25])
        assert hi == pytest.approx([3.5, 0.25])
        lo, hi = result.steps[3].interval_hull()
        assert lo == pytest.approx([1.75, -0.25])
        assert hi == pytest.approx([3.75, 0.25])

    def test_metadata(self, di_model, di_initial_set, zero_net):
        result = reach_exact(di_initial_set, di_model, zero_net, 2)
        assert result.method == "exact" and not result.over_approximate
        assert result.horizon == 2
        assert len(result.timings_ms) == 3 and result.timings_ms[0] == 0.0
        assert result.steps[0][0] is di_initial_set

    def test_bundled_net_trajectories(self, rng, di_model, di_initial_set, di_net):
        result = reach_exact(di_initial_set, di_model, di_net, 5)
        assert_paths_contained(result, simulate(di_model, di_net, di_initial_set, 5, 100, rng))

    @pytest.mark.slow
    def test_bundled_net_thousand_trajectories(self, rng, di_model, di_initial_set, di_net):
        result = reach_exact(di_initial_set, di_model, di_net, 5)
        assert_paths_contained(result, simulate(di_model, di_net, di_initial_set, 5, 1000, rng))

    def test_reduction_flags_result(self, rng, di_model, di_initial_set, di_net):
        result = reach_exact(di_initial_set, di_model, di_net, 3, reduce_budget=ReduceBudget(8, 2))
        assert result.over_approximate
        assert_paths_contained(result, simulate(di_model, di_net, di_initial_set, 3, 100, rng))

    def test_horizon_must_be_positive(self, di_model, di_initial_set, di_net):
        with pytest.raises(ValueError):
            reach_exact(di_initial_set, di_model, di_net, 0)

    def test_empty_initial_set(self, di_model, di_net):
        with pytest.raises(EmptySet):
            reach_exact(ConstrainedZonotope.empty(2), di_model, di_net, 1)


class TestOverApproximation:
    def test_constant_controller_matches_exact(self, di_model, di_initial_set, zero_net):
        over = closed_loop_over_step(di_initial_set, di_model, zero_net)
        exact = closed_loop_exact_step(di_initial_set, di_model, zero_net)
        assert over.same_fields(exact[0])

    def test_linear_controller_is_tight(self, di_model, di_initial_set, gain_net):
        over = closed_loop_over_step(di_initial_set, di_model, gain_net)
        exact = closed_loop_exact_step(di_initial_set, di_model, gain_net)
        assert_same_set(over, exact[0], tol=1e-8)

    def test_contains_exact_step(self, rng, di_model, di_initial_set, di_net):
        over = closed_loop_over_step(di_initial_set, di_model, di_net)
        exact = closed_loop_exact_step(di_initial_set, di_model, di_net)
        for x in sample_union(exact, 300, rng):
            assert over.contains_point(x)

    def test_single_step_recursion(self, di_model, di_initial_set, di_net):
        result = reach_over(di_initial_set, di_model, di_net, 1)
        assert result.single(1).same_fields(closed_loop_over_step(di_initial_set, di_model, di_net))
        assert result.method == "over" and result.over_approximate

    def test_constant_controller_recursion_matches_exact(self, di_model, di_initial_set, zero_net):
        over = reach_over(di_initial_set, di_model, zero_net, 5)
        exact = reach_exact(di_initial_set, di_model, zero_net, 5)
        for t in range(6):
            assert over.single(t).same_fields(exact.single(t))

    def test_bundled_net_recursion(self, rng, di_model, di_initial_set, di_net):
        over = reach_over(di_initial_set, di_model, di_net, 5)
        exact = reach_exact(di_initial_set, di_model, di_net, 5)
        assert over.member_counts == [1] * 6
        for t in range(1, 6):
            lo_e, hi_e = exact.steps[t].interval_hull()
            lo_o, hi_o = over.steps[t].interval_hull()
            assert np.all(lo_o <= lo_e + 1e-7) and np.all(hi_e <= hi_o + 1e-7)
        assert approximation_error(exact, over) >= -1e-7
        assert_paths_contained(over, simulate(di_model, di_net, di_initial_set, 5, 100, rng))

    def test_linear_closed_loop_agrees_with_closed_form(self, di_model, di_initial_set, gain_net):
        closed = di_model.A_d + di_model.B_d @ np.array(GAIN)
        exact = reach_exact(di_initial_set, di_model, gain_net, 4)
        over = reach_over(di_initial_set, di_model, gain_net, 4)
        for t in range(5):
            direct = di_initial_set.linear_map(np.linalg.matrix_power(closed, t))
            assert_same_set(exact.single(t), direct)
            assert_same_set(over.single(t), direct)

    def test_union_start_rejected(self, di_model, di_initial_set, di_net):
        start = SetUnion([di_initial_set, di_initial_set.translate([0.1, 0.0])])
        with pytest.raises(ValueError):
            reach_over(start, di_model, di_net, 1)


class TestNonlinearEnclosure:
    def test_affine_map_has_no_remainder(self, rng):
        model = NonlinearModel.from_strings(["x1 + 0.3*x2", "2*x2 - x1"], [[0.0], [1.0]])
        Z = random_cz(rng, n_gen=3, n_con=1)
        out = nonlinear_enclosure(model, Z)
        assert out.n_gen == Z.n_gen
        assert_same_set(out, Z.linear_map([[1.0, 0.3], [-1.0, 2.0]]))

    def test_square(self, rng):
        model = NonlinearModel.from_strings(["x1^2"], [[0.0]])
        Z = ConstrainedZonotope.from_box([1.0], [2.0])
        out = nonlinear_enclosure(model, Z, gamma=[1.5])
        lo, hi = out.interval_hull()
        assert lo[0] <= 1.0 and hi[0] >= 4.0
        for x in Z.sample(1000, rng):
            assert out.contains_point(x ** 2)

    def test_remainder_radius(self):
        model = NonlinearModel.from_strings(["x1^2"], [[0.0]])
        center, radius = remainder_box(model, np.array([1.0]), np.array([2.0]), np.array([1.5]))
        assert center == pytest.approx([0.125])
        assert radius == pytest.approx([0.125])

    def test_duffing_map(self, rng, duffing_model):
        Z = ConstrainedZonotope.from_box([2.45, 1.45], [2.55, 1.55])
        out = nonlinear_enclosure(duffing_model, Z)
        for x in Z.sample(500, rng):
            assert out.contains_point(duffing_model.evaluate(x))

    def test_any_expansion_point_is_sound(self, rng, duffing_model):
        Z = ConstrainedZonotope.from_box([2.5, -0.25], [3.0, 0.25])
        xs = Z.sample(200, rng)
        for gamma in rng.uniform([2.5, -0.25], [3.0, 0.25], size=(5, 2)):
            out = nonlinear_enclosure(duffing_model, Z, gamma)
            for x in xs:
                assert out.contains_point(duffing_model.evaluate(x))

    def test_expansion_point_outside_hull(self, duffing_model):
        Z = ConstrainedZonotope.from_box([2.5, -0.25], [3.0, 0.25])
        with pytest.raises(GammaOutsideHull):
            nonlinear_enclosure(duffing_model, Z, gamma=[0.0, 0.0])


class TestNonlinearStep:
    @pytest.fixture
    def affine_model(self, di_model):
        return NonlinearModel.from_strings(["x1 + x2", "x2"], di_model.B_d)

    def test_affine_model_with_constant_controller(self, affine_model, di_model, di_initial_set, zero_net):
        out = closed_loop_nonlinear_step(di_initial_set, affine_model, zero_net)
        assert len(out) == 1
        assert_same_set(out[0], di_initial_set.linear_map(di_model.A_d))

    def test_affine_model_matches_linear_path(self, affine_model, di_model, di_initial_set, di_net):
        nonlinear = closed_loop_nonlinear_step(di_initial_set, affine_model, di_net)
        linear = closed_loop_exact_step(di_initial_set, di_model, di_net)
        assert len(nonlinear) == len(linear)
        for a, b in zip(nonlinear, linear):
            assert_same_set(a, b, tol=1e-8)

    def test_duffing_step(self, rng, duffing_model, duffing_net):
        X0 = ConstrainedZonotope.from_box([2.45, 1.45], [2.55, 1.55])
        out = closed_loop_nonlinear_step(X0, duffing_model, duffing_net)
        for x in simulate(duffing_model, duffing_net, X0, 1, 500, rng)[:, 1]:
            assert out.contains_point(x)

    def test_relaxed_controller_is_single_set(self, duffing_model, duffing_net):
        X0 = ConstrainedZonotope.from_box([2.45, 1.45], [2.55, 1.55])
        assert len(closed_loop_nonlinear_step(X0, duffing_model, duffing_net, approx_controller=True)) == 1


class TestReachNonlinear:
    X0 = ConstrainedZonotope.from_box([2.45, 1.45], [2.55, 1.55])

    def test_duffing_trajectories(self, rng, duffing_model, duffing_net):
        result = reach_nonlinear(self.X0, duffing_model, duffing_net, 2)
        assert result.method == "nonlinear" and result.controller == "exact"
        assert result.over_approximate
        assert result.horizon == 2
        assert_paths_contained(result, simulate(duffing_model, duffing_net, self.X0, 2, 300, rng))

    @pytest.mark.slow
    def test_duffing_thousand_trajectories(self, rng, duffing_model, duffing_net):
        result = reach_nonlinear(self.X0, duffing_model, duffing_net, 2)
        assert_paths_contained(result, simulate(duffing_model, duffing_net, self.X0, 2, 1000, rng))

    def test_relaxed_controller_contains_exact_controller(self, rng, duffing_model, duffing_net):
        exact = reach_nonlinear(self.X0, duffing_model, duffing_net, 2)
        relaxed = reach_nonlinear(self.X0, duffing_model, duffing_net, 2, approx_controller=True)
        assert relaxed.controller == "over"
        assert relaxed.member_counts == [1, 1, 1]
        # Both expand around the same point at t = 1, so the relaxation nests there.
        for x in sample_union(exact.steps[1], 100, rng):
            assert relaxed.steps[1].contains_point(x)

    def test_affine_model_reduces_to_linear_path(self, di_model, di_initial_set, di_net):
        affine = NonlinearModel.from_strings(["x1 + x2", "x2"], di_model.B_d)
        nonlinear = reach_nonlinear(di_initial_set, affine, di_net, 1)
        linear = reach_exact(di_initial_set, di_model, di_net, 1)
        for a, b in zip(nonlinear.steps[1], linear.steps[1]):
            assert_same_set(a, b, tol=1e-8)


class TestReachResult:
    @pytest.fixture
    def result(self, di_model, di_initial_set, di_net):
        return reach_exact(di_initial_set, di_model, di_net, 2)

    def test_json_round_trip(self, result):
        again = ReachResult.from_json(result.to_json())
        assert again.method == result.method
        assert again.member_counts == result.member_counts
        for a, b in zip(again.steps, result.steps):
            assert all(x.same_fields(y) for x, y in zip(a, b))

    def test_timings_can_be_left_out(self, result):
        data = result.to_dict(include_timings=False)
        assert "timings_ms" not in data
        assert [entry["t"] for entry in data["steps"]] == [0, 1, 2]

    def test_single_needs_one_member(self):
        result = ReachResult("exact", [SetUnion([ConstrainedZonotope.point([0.0])] * 2)])
        with pytest.raises(ValueError):
            result.single(0)

    @pytest.mark.parametrize(
        "patch",
        [
            {"method": "sideways"},
            {"schema_version": 99},
            {"steps": [{"t": 1, "sets": []}]},
            {"steps": [{"sets": []}]},
        ],
    )
    def test_malformed_results(self, result, patch):
        data = result.to_dict()
        data.update(patch)
        with pytest.raises(SchemaError):
            ReachResult.from_dict(data)

    def test_error_measure(self, di_model, di_initial_set, di_net):
        exact = reach_exact(di_initial_set, di_model, di_net, 2)
        assert approximation_error(exact, exact) == 0.0


def test_sampled_controls_match_network(rng, di_model, di_net, di_initial_set):
    paths = simulate(di_model, di_net, di_initial_set, 1, 10, rng)
    u = eval_network(di_net, paths[:, 0])
    assert paths[:, 1] == pytest.approx(paths[:, 0] @ di_model.A_d.T + u @ di_model.B_d.T)
