# lpcore.py
"""Linear-program plumbing shared by every set operation.

All LPs go through :func:`solve_lp`, which wraps ``scipy.optimize.linprog``
(HiGHS). The helpers below build the two LPs the set algebra needs: the
infinity-norm epigraph LP used for emptiness checks and the directional
bound LP used for interval hulls and support values.
"""
import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import linprog

from czreach import config
from czreach.errors import DimensionMismatch, EmptySet, NumericalFailure

logger = logging.getLogger(__name__)


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


def _as_matrix(m, ncols):
    if m is None:
        return np.zeros((0, ncols))
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return np.zeros((0, ncols))
    return np.atleast_2d(m)


def _as_vector(v):
    if v is None:
        return np.zeros(0)
    return np.atleast_1d(np.asarray(v, dtype=float)).ravel()


@dataclass(frozen=True)
class LinearProgram:
    """minimize objective @ x  s.t.  equality_lhs @ x = equality_rhs,
    inequality_lhs @ x <= inequality_rhs,  lower_bounds <= x <= upper_bounds.

    Bounds may be infinite. Inequality rows are optional.
    """

    objective: np.ndarray
    equality_lhs: np.ndarray
    equality_rhs: np.ndarray
    lower_bounds: np.ndarray
    upper_bounds: np.ndarray
    inequality_lhs: Optional[np.ndarray] = None
    inequality_rhs: Optional[np.ndarray] = None

    def __post_init__(self):
        objective = _as_vector(self.objective)
        n = objective.size
        object.__setattr__(self, "objective", objective)
        object.__setattr__(self, "equality_lhs", _as_matrix(self.equality_lhs, n))
        object.__setattr__(self, "equality_rhs", _as_vector(self.equality_rhs))
        object.__setattr__(self, "lower_bounds", _as_vector(self.lower_bounds))
        object.__setattr__(self, "upper_bounds", _as_vector(self.upper_bounds))
        object.__setattr__(self, "inequality_lhs", _as_matrix(self.inequality_lhs, n))
        object.__setattr__(self, "inequality_rhs", _as_vector(self.inequality_rhs))

    @property
    def num_vars(self):
        return self.objective.size

    def validate(self):
        n = self.num_vars
        if self.equality_lhs.shape[1] != n:
            raise DimensionMismatch(
                f"equality_lhs has {self.equality_lhs.shape[1]} columns, expected {n}"
            )
        if self.equality_lhs.shape[0] != self.equality_rhs.size:
            raise DimensionMismatch(
                f"equality_lhs has {self.equality_lhs.shape[0]} rows but equality_rhs has "
                f"{self.equality_rhs.size} entries"
            )
        if self.inequality_lhs.shape[1] != n:
            raise DimensionMismatch(
                f"inequality_lhs has {self.inequality_lhs.shape[1]} columns, expected {n}"
            )
        if self.inequality_lhs.shape[0] != self.inequality_rhs.size:
            raise DimensionMismatch(
                f"inequality_lhs has {self.inequality_lhs.shape[0]} rows but inequality_rhs has "
                f"{self.inequality_rhs.size} entries"
            )
        if self.lower_bounds.size != n or self.upper_bounds.size != n:
            raise DimensionMismatch(
                f"bounds must have {n} entries, got {self.lower_bounds.size} and {self.upper_bounds.size}"
            )
        if np.any(self.lower_bounds > self.upper_bounds):
            raise DimensionMismatch("lower_bounds must not exceed upper_bounds")


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    value: float
    point: Optional[np.ndarray] = None
    eq_duals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    ineq_duals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lower_duals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    upper_duals: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def is_optimal(self):
        return self.status is LpStatus.OPTIMAL

    def dual_value(self, lp: LinearProgram) -> float:
        """Dual objective assembled from the solver's multipliers.

        Matches ``value`` at an optimum (strong duality).
        """
        total = float(self.eq_duals @ lp.equality_rhs) if lp.equality_rhs.size else 0.0
        if lp.inequality_rhs.size:
            total += float(self.ineq_duals @ lp.inequality_rhs)
        for bounds, duals in ((lp.lower_bounds, self.lower_duals), (lp.upper_bounds, self.upper_duals)):
            finite = np.isfinite(bounds)
            if duals.size and np.any(finite):
                total += float(duals[finite] @ bounds[finite])
        return total


def _marginals(res, name, size):
    part = getattr(res, name, None)
    if part is None or getattr(part, "marginals", None) is None:
        return np.zeros(size)
    return np.asarray(part.marginals, dtype=float)


def solve_lp(lp: LinearProgram) -> LpSolution:
    """Solve ``lp`` and report a certified optimum, infeasibility or unboundedness."""
    lp.validate()
    tol = config.LP_TOL
    n = lp.num_vars

    if n == 0:
        # Nothing to optimize; only the constant rows can fail.
        feasible = bool(np.all(np.abs(lp.equality_rhs) <= tol)) and bool(
            np.all(lp.inequality_rhs >= -tol)
        )
        if feasible:
            return LpSolution(LpStatus.OPTIMAL, 0.0, np.zeros(0))
        return LpSolution(LpStatus.INFEASIBLE, math.inf)

    bounds = [
        (lo if np.isfinite(lo) else None, hi if np.isfinite(hi) else None)
        for lo, hi in zip(lp.lower_bounds, lp.upper_bounds)
    ]
    has_eq = lp.equality_lhs.shape[0] > 0
    has_ineq = lp.inequality_lhs.shape[0] > 0

    try:
        res = linprog(
            lp.objective,
            A_ub=lp.inequality_lhs if has_ineq else None,
            b_ub=lp.inequality_rhs if has_ineq else None,
            A_eq=lp.equality_lhs if has_eq else None,
            b_eq=lp.equality_rhs if has_eq else None,
            bounds=bounds,
            method="highs",
            options={
                "primal_feasibility_tolerance": tol,
                "dual_feasibility_tolerance": tol,
                "maxiter": config.LP_MAX_ITER,
            },
        )
    except ValueError as e:
        raise NumericalFailure(f"LP solver rejected the problem: {e}") from e

    if res.status == 0:
        return LpSolution(
            LpStatus.OPTIMAL,
            float(res.fun),
            np.asarray(res.x, dtype=float),
            eq_duals=_marginals(res, "eqlin", lp.equality_rhs.size),
            ineq_duals=_marginals(res, "ineqlin", lp.inequality_rhs.size),
            lower_duals=_marginals(res, "lower", n),
            upper_duals=_marginals(res, "upper", n),
        )
    if res.status == 2:
        return LpSolution(LpStatus.INFEASIBLE, math.inf)
    if res.status == 3:
        return LpSolution(LpStatus.UNBOUNDED, -math.inf)
    raise NumericalFailure(f"LP solver failed (status {res.status}): {res.message}")


def min_inf_norm_solution(A, b) -> LpSolution:
    """Epigraph LP for min ||xi||_inf s.t. A xi = b; variables are (xi, t)."""
    b = _as_vector(b)
    A = np.asarray([] if A is None else A, dtype=float)
    if A.size == 0 and A.ndim != 2:
        A = np.zeros((b.size, 0))
    elif A.ndim == 1:
        A = A.reshape(max(b.size, 1), -1)
    if A.ndim != 2 or A.shape[0] != b.size:
        raise DimensionMismatch(f"A has {A.shape[0]} rows but b has {b.size} entries")
    n_con, n_gen = A.shape

    if n_gen == 0:
        if n_con == 0 or np.all(np.abs(b) <= config.LP_TOL):
            return LpSolution(LpStatus.OPTIMAL, 0.0, np.zeros(0))
        return LpSolution(LpStatus.INFEASIBLE, math.inf)
    if n_con == 0:
        return LpSolution(LpStatus.OPTIMAL, 0.0, np.zeros(n_gen))

    objective = np.zeros(n_gen + 1)
    objective[-1] = 1.0
    eye = np.eye(n_gen)
    ones = np.ones((n_gen, 1))
    lp = LinearProgram(
        objective=objective,
        equality_lhs=np.hstack((A, np.zeros((n_con, 1)))),
        equality_rhs=b,
        lower_bounds=np.r_[np.full(n_gen, -np.inf), 0.0],
        upper_bounds=np.full(n_gen + 1, np.inf),
        inequality_lhs=np.vstack((np.hstack((eye, -ones)), np.hstack((-eye, -ones)))),
        inequality_rhs=np.zeros(2 * n_gen),
    )
    sol = solve_lp(lp)
    if sol.status is LpStatus.UNBOUNDED:
        raise NumericalFailure("infinity-norm LP reported unbounded")
    if sol.is_optimal:
        return LpSolution(LpStatus.OPTIMAL, sol.value, sol.point[:n_gen])
    return sol


def min_inf_norm(A, b) -> float:
    """Smallest infinity norm of a solution of A xi = b; ``math.inf`` when none exists."""
    return min_inf_norm_solution(A, b).value


def bound_along(d, c, G, A, b) -> Tuple[float, float]:
    """Exact [min, max] of d @ (c + G xi) over ||xi||_inf <= 1, A xi = b."""
    d = _as_vector(d)
    c = _as_vector(c)
    G = np.asarray(G, dtype=float)
    G = np.zeros((c.size, 0)) if G.size == 0 else G.reshape(c.size, -1)
    b = _as_vector(b)
    A = _as_matrix(A, G.shape[1])
    if d.size != c.size:
        raise DimensionMismatch(f"direction has {d.size} entries, set has dimension {c.size}")
    if A.shape != (b.size, G.shape[1]):
        raise DimensionMismatch(f"constraints of shape {A.shape} do not match {G.shape[1]} generators")

    offset = float(d @ c)
    n_gen = G.shape[1]
    if n_gen == 0:
        if b.size and np.any(np.abs(b) > config.LP_TOL):
            raise EmptySet("constrained zonotope is empty")
        return offset, offset

    g = G.T @ d
    if A.shape[0] == 0:
        spread = float(np.sum(np.abs(g)))
        return offset - spread, offset + spread

    lower = solve_lp(LinearProgram(g, A, b, -np.ones(n_gen), np.ones(n_gen)))
    if not lower.is_optimal:
        raise EmptySet("constrained zonotope is empty")
    upper = solve_lp(LinearProgram(-g, A, b, -np.ones(n_gen), np.ones(n_gen)))
    if not upper.is_optimal:
        raise EmptySet("constrained zonotope is empty")
    return offset + lower.value, offset - upper.value
