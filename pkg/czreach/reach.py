# reach.py
"""Closed-loop reachable sets x(t+1) = f(x(t)) + B_d pi(x(t)).

The controller output sets share their leading generator columns (and
constraint rows) with the state set they were computed from. Assembling the
next state set on that shared factor block keeps the state/control coupling,
which a Minkowski sum of the two images would lose.
"""
import json
import logging
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np

from czreach import config
from czreach.czono import ConstrainedZonotope, SetUnion
from czreach.errors import (
    DimensionMismatch,
    EmptySet,
    GammaOutsideHull,
    MemberExplosion,
    PrefixViolation,
    SchemaError,
)
from czreach.exprdyn import NonlinearModel, as_box, eval_interval
from czreach.interval import Interval
from czreach.nnet import FeedforwardNetwork, ReduceBudget, reach_exact_network, reach_over_network

logger = logging.getLogger(__name__)

METHODS = ("exact", "over", "nonlinear")


@dataclass(frozen=True)
class LinearModel:
    """x(t+1) = A_d x(t) + B_d u(t)."""

    A_d: np.ndarray
    B_d: np.ndarray

    def __post_init__(self):
        A_d = np.atleast_2d(np.asarray(self.A_d, dtype=float))
        B_d = np.atleast_2d(np.asarray(self.B_d, dtype=float))
        if A_d.shape[0] != A_d.shape[1]:
            raise DimensionMismatch(f"A_d must be square, got shape {A_d.shape}")
        if B_d.shape[0] != A_d.shape[0]:
            raise DimensionMismatch(f"B_d must have {A_d.shape[0]} rows, got {B_d.shape[0]}")
        object.__setattr__(self, "A_d", A_d)
        object.__setattr__(self, "B_d", B_d)

    @property
    def n(self):
        return self.A_d.shape[0]

    @property
    def m(self):
        return self.B_d.shape[1]

    def step(self, x, u):
        return self.A_d @ np.asarray(x, dtype=float) + self.B_d @ np.atleast_1d(np.asarray(u, dtype=float))


Model = Union[LinearModel, NonlinearModel]


@dataclass
class ReachResult:
    """Reachable sets for t = 0..T; steps[0] is the initial set."""

    method: str
    steps: List[SetUnion]
    timings_ms: List[float] = field(default_factory=list)
    over_approximate: bool = False
    controller: Optional[str] = None

    @property
    def horizon(self):
        return len(self.steps) - 1

    @property
    def member_counts(self):
        return [len(s) for s in self.steps]

    def single(self, t) -> ConstrainedZonotope:
        step = self.steps[t]
        if len(step) != 1:
            raise ValueError(f"step {t} holds {len(step)} sets, not one")
        return step[0]

    def to_dict(self, include_timings=True):
        data = {
            "schema_version": config.SCHEMA_VERSION,
            "method": self.method,
            "controller": self.controller,
            "over_approximate": self.over_approximate,
            "member_counts": self.member_counts,
            "steps": [
                {"t": t, "sets": [m.to_dict() for m in step]}
                for t, step in enumerate(self.steps)
            ],
        }
        if include_timings:
            data["timings_ms"] = list(self.timings_ms)
        return data

    @classmethod
    def from_dict(cls, data):
        try:
            if data.get("schema_version", config.SCHEMA_VERSION) != config.SCHEMA_VERSION:
                raise SchemaError(f"unsupported schema_version {data['schema_version']}")
            if data["method"] not in METHODS:
                raise SchemaError(f"unknown method {data['method']!r}")
            steps = []
            for t, entry in enumerate(data["steps"]):
                if entry["t"] != t:
                    raise SchemaError(f"step entries out of order at t={entry['t']}")
                steps.append(SetUnion([ConstrainedZonotope.from_dict(s) for s in entry["sets"]]))
        except (KeyError, TypeError) as e:
            raise SchemaError(f"malformed reach result: {e!r}")
        return cls(
            method=data["method"],
            steps=steps,
            timings_ms=list(data.get("timings_ms", [])),
            over_approximate=bool(data.get("over_approximate", False)),
            controller=data.get("controller"),
        )

    def to_json(self, include_timings=True):
        return json.dumps(self.to_dict(include_timings), indent=2)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _check_dimensions(model, net: FeedforwardNetwork):
    if net.input_dim != model.n:
        raise DimensionMismatch(f"network takes {net.input_dim} inputs, model state has {model.n}")
    if net.output_dim != model.m:
        raise DimensionMismatch(f"network gives {net.output_dim} outputs, model takes {model.m} inputs")


def _check_prefix(X: ConstrainedZonotope, out: ConstrainedZonotope):
    n_gen, n_con = X.n_gen, X.n_con
    ok = (
        out.n_gen >= n_gen
        and out.n_con >= n_con
        and np.array_equal(out.A[:n_con, :n_gen], X.A)
        and not np.any(out.A[:n_con, n_gen:])
        and np.array_equal(out.b[:n_con], X.b)
    )
    if not ok:
        raise PrefixViolation(
            f"controller set ({out.n_gen} generators, {out.n_con} constraints) does not extend "
            f"the state set ({n_gen} generators, {n_con} constraints)"
        )


def _compose(X, out, state_G, state_c, B_d, extra_G=None):
    """Next-state set sharing X's factors with the controller output ``out``."""
    _check_prefix(X, out)
    n = state_G.shape[0]
    pad = np.zeros((n, out.n_gen - X.n_gen))
    G = np.hstack((state_G, pad)) + B_d @ out.G
    A, b = out.A, out.b
    if extra_G is not None and extra_G.shape[1]:
        G = np.hstack((G, extra_G))
        A = np.hstack((A, np.zeros((A.shape[0], extra_G.shape[1]))))
    return ConstrainedZonotope(state_c + B_d @ out.c, G, A, b)


def _as_union(Z) -> SetUnion:
    return Z if isinstance(Z, SetUnion) else SetUnion([Z])


def _cap(max_members):
    return config.MAX_MEMBERS if max_members is None else max_members


def _explosion(cap):
    return MemberExplosion(
        f"exact reachable set exceeded {cap} members; "
        f"use the over-approximating method or raise the cap"
    )


def closed_loop_exact_step(
    Z, model: LinearModel, net: FeedforwardNetwork,
    range_method="lp", max_members=None, reduce_budget: Optional[ReduceBudget] = None,
) -> SetUnion:
    """Exact image of Z under x -> A_d x + B_d net(x)."""
    _check_dimensions(model, net)
    cap = _cap(max_members)
    members = []
    for X in _as_union(Z):
        outputs = reach_exact_network(net, X, range_method, cap - len(members), reduce_budget)
        state_G = model.A_d @ X.G
        state_c = model.A_d @ X.c
        members.extend(_compose(X, out, state_G, state_c, model.B_d) for out in outputs)
        if len(members) > cap:
            raise _explosion(cap)
    return SetUnion(members, dim=model.n)


def closed_loop_over_step(
    Z: ConstrainedZonotope, model: LinearModel, net: FeedforwardNetwork,
    range_method="lp", reduce_budget: Optional[ReduceBudget] = None,
) -> ConstrainedZonotope:
    """One set containing the image of Z under x -> A_d x + B_d net(x)."""
    _check_dimensions(model, net)
    out = reach_over_network(net, Z, range_method, reduce_budget)
    return _compose(Z, out, model.A_d @ Z.G, model.A_d @ Z.c, model.B_d)


def naive_closed_loop_step(Z, model: LinearModel, net: FeedforwardNetwork, range_method="lp") -> SetUnion:
    """A_d Z (+) B_d net(Z), which forgets that both terms share the same state."""
    _check_dimensions(model, net)
    members = []
    for X in _as_union(Z):
        image = X.linear_map(model.A_d)
        for out in reach_exact_network(net, X, range_method):
            members.append(image.minkowski_sum(out.linear_map(model.B_d)))
    return SetUnion(members, dim=model.n)


def _check_start(X0, T):
    if T < 1:
        raise ValueError(f"horizon must be at least 1, got {T}")
    X0 = _as_union(X0)
    if len(X0) == 0 or X0.is_empty():
        raise EmptySet("initial set is empty")
    return X0


def _reduce_state(step: SetUnion, budget: Optional[ReduceBudget]) -> SetUnion:
    if budget is None:
        return step
    return SetUnion(
        [m.reduce_order(max(budget.max_generators, m.dim), budget.max_constraints) for m in step],
        dim=step.dim,
    )


def _run(X0, T, advance, method, over_approximate, controller=None):
    steps = [X0]
    timings = [0.0]
    for t in range(1, T + 1):
        start = time.perf_counter()
        steps.append(advance(steps[-1]))
        timings.append((time.perf_counter() - start) * 1000.0)
        logger.info(
            "%s reach step %d/%d: %d members (%.1f ms)",
            method, t, T, len(steps[-1]), timings[-1],
        )
    return ReachResult(method, steps, timings, over_approximate, controller)


def reach_exact(
    X0, model: LinearModel, net: FeedforwardNetwork, T: int,
    range_method="lp", max_members=None, reduce_budget: Optional[ReduceBudget] = None,
) -> ReachResult:
    """R_0 = X0, R_t = exact closed-loop image of R_{t-1}.

    With ``reduce_budget`` every state member (and every network layer) is
    reduced, and the result is flagged over-approximate.
    """
    X0 = _check_start(X0, T)

    def advance(Z):
        nxt = closed_loop_exact_step(Z, model, net, range_method, max_members, reduce_budget)
        return _reduce_state(nxt, reduce_budget)

    return _run(X0, T, advance, "exact", reduce_budget is not None)


def reach_over(
    X0, model: LinearModel, net: FeedforwardNetwork, T: int,
    range_method="lp", reduce_budget: Optional[ReduceBudget] = None,
) -> ReachResult:
    """R_0 = X0, R_t = relaxed closed-loop image of R_{t-1}, one set per step."""
    X0 = _check_start(X0, T)
    if len(X0) != 1:
        raise ValueError("the relaxed recursion starts from a single constrained zonotope")

    def advance(Z):
        nxt = closed_loop_over_step(Z[0], model, net, range_method, reduce_budget)
        return _reduce_state(SetUnion([nxt]), reduce_budget)

    return _run(X0, T, advance, "over", True)


def approximation_error(exact: ReachResult, over: ReachResult, t: Optional[int] = None) -> float:
    """(area of hull(over) - area of hull(exact)) / area of hull(exact) at step t (default last)."""
    t = exact.horizon if t is None else t
    lo_e, hi_e = exact.steps[t].interval_hull()
    lo_o, hi_o = over.steps[t].interval_hull()
    area_e = float(np.prod(hi_e - lo_e))
    area_o = float(np.prod(hi_o - lo_o))
    if area_e == 0.0:
        return 0.0 if area_o == 0.0 else math.inf
    return (area_o - area_e) / area_e


# --- nonlinear path -----------------------------------------------------

def remainder_box(model: NonlinearModel, lo, hi, gamma):
    """Center and radius of a box holding the second-order Taylor remainder of f around gamma.

    Uses interval bounds of the half Hessians over [lo, hi]; nonzero radii
    get ``config.REMAINDER_SLACK`` added to absorb rounding.
    """
    box = as_box(lo, hi)
    d = [Interval(l - g, h - g) for l, h, g in zip(lo, hi, gamma)]
    n = model.n
    center = np.zeros(n)
    radius = np.zeros(n)
    for q, H in enumerate(model.half_hessians):
        total = Interval(0.0, 0.0)
        for i in range(n):
            for j in range(i, n):
                h = eval_interval(H[i][j], box)
                if h.lo == 0.0 and h.hi == 0.0:
                    continue
                total = total + h * (d[i].square() if i == j else d[i] * d[j])
        center[q] = total.mid
        radius[q] = total.rad + config.REMAINDER_SLACK if total.rad > 0 else 0.0
    return center, radius


def _taylor_parts(model: NonlinearModel, Z: ConstrainedZonotope, gamma=None):
    if Z.dim != model.n:
        raise DimensionMismatch(f"set has dimension {Z.dim}, model state has {model.n}")
    lo, hi = Z.interval_hull()
    if gamma is None:
        gamma = 0.5 * (lo + hi)
    else:
        gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
        if gamma.size != model.n:
            raise DimensionMismatch(f"expansion point has {gamma.size} entries, expected {model.n}")
        tol = config.LP_TOL
        if np.any(gamma < lo - tol) or np.any(gamma > hi + tol):
            raise GammaOutsideHull(f"expansion point {gamma.tolist()} lies outside the interval hull")
    J = model.jacobian(gamma)
    r_center, r_radius = remainder_box(model, lo, hi, gamma)
    c_f = J @ (Z.c - gamma) + model.evaluate(gamma) + r_center
    rows = np.flatnonzero(r_radius)
    G_R = np.zeros((model.n, rows.size))
    G_R[rows, np.arange(rows.size)] = r_radius[rows]
    return J, c_f, G_R


def nonlinear_enclosure(model: NonlinearModel, Z: ConstrainedZonotope, gamma=None) -> ConstrainedZonotope:
    """Set containing f(Z): first-order expansion around gamma plus a remainder box."""
    J, c_f, G_R = _taylor_parts(model, Z, gamma)
    A = np.hstack((Z.A, np.zeros((Z.n_con, G_R.shape[1]))))
    return ConstrainedZonotope(c_f, np.hstack((J @ Z.G, G_R)), A, Z.b)


def closed_loop_nonlinear_step(
    Z, model: NonlinearModel, net: FeedforwardNetwork,
    approx_controller=False, gamma=None,
    range_method="lp", max_members=None, reduce_budget: Optional[ReduceBudget] = None,
) -> SetUnion:
    """Union containing the image of Z under x -> f(x) + B_d net(x).

    Factor layout of every member: the state set's factors, then the
    controller's own factors, then one factor per remainder coordinate.
    """
    _check_dimensions(model, net)
    cap = _cap(max_members)
    members = []
    for X in _as_union(Z):
        J, c_f, G_R = _taylor_parts(model, X, gamma)
        if approx_controller:
            outputs = [reach_over_network(net, X, range_method, reduce_budget)]
        else:
            outputs = reach_exact_network(net, X, range_method, cap - len(members), reduce_budget)
        members.extend(_compose(X, out, J @ X.G, c_f, model.B_d, G_R) for out in outputs)
        if len(members) > cap:
            raise _explosion(cap)
    return SetUnion(members, dim=model.n)


def reach_nonlinear(
    X0, model: NonlinearModel, net: FeedforwardNetwork, T: int,
    approx_controller=False, range_method="lp", max_members=None,
    reduce_budget: Optional[ReduceBudget] = None,
) -> ReachResult:
    """Over-approximate reachable sets of the nonlinear closed loop.

    With ``approx_controller`` the network output is relaxed to one set per
    member, which keeps one member per step for a single initial set.
    """
    X0 = _check_start(X0, T)

    def advance(Z):
        nxt = closed_loop_nonlinear_step(
            Z, model, net, approx_controller, None, range_method, max_members, reduce_budget,
        )
        return _reduce_state(nxt, reduce_budget)

    controller = "over" if approx_controller else "exact"
    return _run(X0, T, advance, "nonlinear", True, controller)
