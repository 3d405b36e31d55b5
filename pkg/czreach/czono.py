# czono.py
"""Constrained zonotopes and finite unions of them.

A constrained zonotope is the set ``{c + G xi : ||xi||_inf <= 1, A xi = b}``.
Values are immutable; every operation returns a new object. Generator
columns are only ever appended, never reordered, so callers that need to
track which columns came from an input set can rely on the column prefix.
"""
import logging
from typing import Iterable, Optional, Tuple

import numpy as np
from scipy.linalg import null_space

from czreach import config
from czreach.errors import DimensionMismatch, EmptySet, SamplingStarvation
from czreach.lpcore import LinearProgram, bound_along, min_inf_norm, solve_lp

logger = logging.getLogger(__name__)

# Rejection sampling gives up below this acceptance rate.
MIN_ACCEPTANCE = 1e-4
STARVATION_DRAWS = 100000


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


class ConstrainedZonotope:
    """CZ{c, G, A, b}; ``n_gen == 0`` is the single point {c}."""

    def __init__(self, c, G=None, A=None, b=None):
        c = np.atleast_1d(np.asarray(c, dtype=float)).ravel()
        n = c.size

        G = np.asarray([] if G is None else G, dtype=float)
        if G.size == 0:
            G = np.zeros((n, 0))
        elif G.ndim == 1:
            G = G.reshape(n, -1)
        if G.ndim != 2 or G.shape[0] != n:
            raise DimensionMismatch(f"G must have {n} rows, got shape {G.shape}")
        n_gen = G.shape[1]

        A = np.asarray([] if A is None else A, dtype=float)
        if A.size == 0:
            A = np.zeros((A.shape[0] if A.ndim == 2 else 0, n_gen))
        elif A.ndim == 1:
            A = A.reshape(1, -1)
        b = np.atleast_1d(np.asarray([] if b is None else b, dtype=float)).ravel()
        if A.ndim != 2 or A.shape != (b.size, n_gen):
            raise DimensionMismatch(
                f"A must have shape ({b.size}, {n_gen}) to match b and G, got {A.shape}"
            )
        for name, arr in (("c", c), ("G", G), ("A", A), ("b", b)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must contain only finite values")

        self.c = _frozen(c)
        self.G = _frozen(G)
        self.A = _frozen(A)
        self.b = _frozen(b)
        self._hull = None

    # --- constructors -------------------------------------------------

    @classmethod
    def from_box(cls, lo, hi):
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if lo.shape != hi.shape:
            raise DimensionMismatch("box bounds must have equal length")
        if np.any(lo > hi):
            raise ValueError("box lower bounds must not exceed upper bounds")
        return cls((lo + hi) / 2.0, np.diag((hi - lo) / 2.0))

    @classmethod
    def point(cls, c):
        return cls(c)

    @classmethod
    def empty(cls, n):
        """Canonical empty set: one generator, constraint xi = 2."""
        return cls(np.zeros(n), np.zeros((n, 1)), [[1.0]], [2.0])

    @classmethod
    def from_dict(cls, data):
        return cls(data["c"], data.get("G"), data.get("A"), data.get("b"))

    def to_dict(self):
        return {
            "c": self.c.tolist(),
            "G": self.G.tolist(),
            "A": self.A.tolist(),
            "b": self.b.tolist(),
        }

    # --- shape --------------------------------------------------------

    @property
    def dim(self):
        return self.c.size

    @property
    def n_gen(self):
        return self.G.shape[1]

    @property
    def n_con(self):
        return self.A.shape[0]

    @property
    def is_zonotope(self):
        return self.n_con == 0

    def same_fields(self, other):
        return all(
            np.array_equal(getattr(self, name), getattr(other, name)) and
            getattr(self, name).shape == getattr(other, name).shape
            for name in ("c", "G", "A", "b")
        )

    def __repr__(self):
        return (
            f"ConstrainedZonotope(dim={self.dim}, n_gen={self.n_gen}, n_con={self.n_con})"
        )

    def _check_dim(self, k, what):
        if k != self.dim:
            raise DimensionMismatch(f"{what} has dimension {k}, set has dimension {self.dim}")

    # --- set algebra --------------------------------------------------

    def linear_map(self, R):
        R = np.atleast_2d(np.asarray(R, dtype=float))
        self._check_dim(R.shape[1], "map")
        return ConstrainedZonotope(R @ self.c, R @ self.G, self.A, self.b)

    def affine_map(self, W, v):
        """W Z + v."""
        W = np.atleast_2d(np.asarray(W, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))
        self._check_dim(W.shape[1], "map")
        if v.size != W.shape[0]:
            raise DimensionMismatch(f"offset has {v.size} entries, map has {W.shape[0]} rows")
        return ConstrainedZonotope(W @ self.c + v, W @ self.G, self.A, self.b)

    def translate(self, v):
        v = np.atleast_1d(np.asarray(v, dtype=float))
        self._check_dim(v.size, "offset")
        return ConstrainedZonotope(self.c + v, self.G, self.A, self.b)

    def minkowski_sum(self, other):
        self._check_dim(other.dim, "summand")
        A = np.block([
            [self.A, np.zeros((self.n_con, other.n_gen))],
            [np.zeros((other.n_con, self.n_gen)), other.A],
        ])
        return ConstrainedZonotope(
            self.c + other.c,
            np.hstack((self.G, other.G)),
            A,
            np.concatenate((self.b, other.b)),
        )

    def intersect(self, other):
        self._check_dim(other.dim, "operand")
        A = np.block([
            [self.A, np.zeros((self.n_con, other.n_gen))],
            [np.zeros((other.n_con, self.n_gen)), other.A],
            [self.G, -other.G],
        ])
        b = np.concatenate((self.b, other.b, other.c - self.c))
        G = np.hstack((self.G, np.zeros((self.dim, other.n_gen))))
        return ConstrainedZonotope(self.c, G, A, b)

    def intersect_halfspace(self, h, f):
        """Z ∩ {x : h @ x <= f}, one extra generator and one extra constraint."""
        h = np.atleast_1d(np.asarray(h, dtype=float))
        self._check_dim(h.size, "halfspace normal")
        hG = h @ self.G
        d_m = f - h @ self.c + np.sum(np.abs(hG))
        if d_m < 0:
            # Even the unconstrained zonotope lies strictly outside.
            return ConstrainedZonotope.empty(self.dim)
        A = np.block([
            [self.A, np.zeros((self.n_con, 1))],
            [hG[None, :], np.array([[d_m / 2.0]])],
        ])
        b = np.append(self.b, f - h @ self.c - d_m / 2.0)
        G = np.hstack((self.G, np.zeros((self.dim, 1))))
        return ConstrainedZonotope(self.c, G, A, b)

    # --- LP queries ---------------------------------------------------

    def is_empty(self):
        if self.n_con == 0:
            return False
        return min_inf_norm(self.A, self.b) > 1.0 + config.EMPTY_TOL

    def bound_along(self, d):
        d = np.atleast_1d(np.asarray(d, dtype=float))
        self._check_dim(d.size, "direction")
        return bound_along(d, self.c, self.G, self.A, self.b)

    def support(self, d):
        return self.bound_along(d)[1]

    def interval_hull(self) -> Tuple[np.ndarray, np.ndarray]:
        """Tightest axis-aligned box (lo, hi); computed once per value."""
        if self._hull is None:
            lo = np.empty(self.dim)
            hi = np.empty(self.dim)
            for i in range(self.dim):
                lo[i], hi[i] = self.bound_along(np.eye(self.dim)[i])
            self._hull = (_frozen(lo), _frozen(hi))
        return self._hull

    def zonotope_box(self):
        """Box of the unconstrained zonotope; contains the set, needs no LP."""
        radius = np.sum(np.abs(self.G), axis=1)
        return self.c - radius, self.c + radius

    def contains_point(self, x, tol=None):
        tol = config.MEMBERSHIP_TOL if tol is None else tol
        x = np.atleast_1d(np.asarray(x, dtype=float))
        self._check_dim(x.size, "point")
        lo, hi = self.zonotope_box()
        if np.any(x < lo - tol) or np.any(x > hi + tol):
            return False
        if self._hull is not None:
            lo, hi = self._hull
            if np.any(x < lo - tol) or np.any(x > hi + tol):
                return False

        n_gen = self.n_gen
        if n_gen == 0:
            return bool(np.all(np.abs(x - self.c) <= tol)) and not self.is_empty()

        # minimize t s.t. |xi| <= t, |G xi - (x - c)| <= tol, A xi = b
        eye = np.eye(n_gen)
        ones = np.ones((n_gen, 1))
        zeros = np.zeros((self.dim, 1))
        delta = x - self.c
        lp = LinearProgram(
            objective=np.r_[np.zeros(n_gen), 1.0],
            equality_lhs=np.hstack((self.A, np.zeros((self.n_con, 1)))),
            equality_rhs=self.b,
            lower_bounds=np.r_[np.full(n_gen, -np.inf), 0.0],
            upper_bounds=np.full(n_gen + 1, np.inf),
            inequality_lhs=np.vstack((
                np.hstack((eye, -ones)),
                np.hstack((-eye, -ones)),
                np.hstack((self.G, zeros)),
                np.hstack((-self.G, zeros)),
            )),
            inequality_rhs=np.concatenate((
                np.zeros(2 * n_gen), delta + tol, -delta + tol,
            )),
        )
        sol = solve_lp(lp)
        return sol.is_optimal and sol.value <= 1.0 + tol

    # --- order reduction ----------------------------------------------

    def reduce_order(self, max_generators, max_constraints, keep_generators=0, keep_constraints=0):
        """Return a superset with at most the requested generators and constraints.

        Constraints are eliminated by substitution (pivot on the largest
        coefficient), then the smallest free generators are boxed. The first
        ``keep_generators`` columns and ``keep_constraints`` rows are never
        pivoted on or boxed; with a nonzero keep the budgets are best effort.
        """
        n = self.dim
        if max_generators < n:
            raise ValueError(f"generator budget {max_generators} is below the dimension {n}")
        if max_constraints < 0:
            raise ValueError("constraint budget must be nonnegative")
        if self.n_gen <= max_generators and self.n_con <= max_constraints:
            return self
        if self.is_empty():
            raise EmptySet("cannot reduce an empty constrained zonotope")
        if max_generators == n and keep_generators == 0 and keep_constraints == 0:
            lo, hi = self.interval_hull()
            return ConstrainedZonotope.from_box(lo, hi)

        c, G, A, b = (np.array(arr) for arr in (self.c, self.G, self.A, self.b))
        while A.shape[0] > max_constraints:
            step = _eliminate_constraint(c, G, A, b, keep_generators, keep_constraints)
            if step is None:
                break
            c, G, A, b = step

        def free_columns():
            return [j for j in range(keep_generators, G.shape[1]) if not np.any(A[:, j])]

        excess = G.shape[1] - max_generators
        if excess > 0:
            free = free_columns()
            while len(free) < excess + n and A.shape[0] > 0:
                step = _eliminate_constraint(c, G, A, b, keep_generators, keep_constraints)
                if step is None:
                    break
                c, G, A, b = step
                excess = G.shape[1] - max_generators
                free = free_columns()
            if excess > 0:
                free.sort(key=lambda j: (np.linalg.norm(G[:, j]), j))
                picked = free[: excess + n]
                radius = np.sum(np.abs(G[:, picked]), axis=1)
                rows = np.flatnonzero(radius)
                if len(picked) > rows.size:
                    keep = [j for j in range(G.shape[1]) if j not in set(picked)]
                    box = np.zeros((n, rows.size))
                    box[rows, np.arange(rows.size)] = radius[rows]
                    G = np.hstack((G[:, keep], box))
                    A = np.hstack((A[:, keep], np.zeros((A.shape[0], rows.size))))

        if G.shape[1] > max_generators or A.shape[0] > max_constraints:
            logger.debug(
                "reduce_order stopped at %d generators / %d constraints (budget %d / %d)",
                G.shape[1], A.shape[0], max_generators, max_constraints,
            )
        return ConstrainedZonotope(c, G, A, b)

    # --- sampling -----------------------------------------------------

    def sample_xi(self, count, rng):
        """Draw ``count`` feasible factor vectors xi (rows of the result)."""
        if self.n_gen == 0:
            if self.is_empty():
                raise EmptySet("cannot sample an empty set")
            return np.zeros((count, 0))
        if self.n_con == 0:
            return rng.uniform(-1.0, 1.0, size=(count, self.n_gen))
        try:
            return self._rejection_sample_xi(count, rng)
        except SamplingStarvation as e:
            logger.warning("%s; falling back to LP vertex sampling", e)
            return self._vertex_sample_xi(count, rng)

    def sample(self, count, rng):
        """Draw ``count`` points of the set (rows of the result)."""
        xi = self.sample_xi(count, rng)
        return self.c + xi @ self.G.T

    def _rejection_sample_xi(self, count, rng):
        A, b = self.A, self.b
        xi_p = np.linalg.lstsq(A, b, rcond=None)[0]
        if np.max(np.abs(A @ xi_p - b)) > config.LP_TOL:
            raise EmptySet("constraints A xi = b are inconsistent")
        basis = null_space(A)
        if basis.shape[1] == 0:
            if np.max(np.abs(xi_p)) > 1.0 + config.EMPTY_TOL:
                raise EmptySet("cannot sample an empty set")
            return np.tile(xi_p, (count, 1))

        # xi_p lies in the row space, so z = basis.T @ xi for every feasible xi.
        k = basis.shape[1]
        z_lo = np.empty(k)
        z_hi = np.empty(k)
        for i in range(k):
            z_lo[i], z_hi[i] = bound_along(np.eye(k)[i], np.zeros(k), basis.T, A, b)

        batch = max(1000, 4 * count)
        chunks = []
        got = 0
        drawn = 0
        while got < count:
            z = rng.uniform(z_lo, z_hi, size=(batch, k))
            xi = xi_p + z @ basis.T
            ok = np.all(np.abs(xi) <= 1.0, axis=1)
            ok &= np.max(np.abs(xi @ A.T - b), axis=1) <= config.LP_TOL
            chunks.append(xi[ok])
            got += int(ok.sum())
            drawn += batch
            if drawn >= STARVATION_DRAWS and got < MIN_ACCEPTANCE * drawn:
                raise SamplingStarvation(
                    f"rejection sampling accepted {got} of {drawn} draws"
                )
        return np.vstack(chunks)[:count]

    def _vertex_sample_xi(self, count, rng):
        n_gen = self.n_gen
        out = np.empty((count, n_gen))

        def vertex():
            w = rng.standard_normal(n_gen)
            sol = solve_lp(LinearProgram(w, self.A, self.b, -np.ones(n_gen), np.ones(n_gen)))
            if not sol.is_optimal:
                raise EmptySet("cannot sample an empty set")
            return sol.point

        for k in range(count):
            lam = rng.uniform()
            out[k] = lam * vertex() + (1.0 - lam) * vertex()
        return out


def _eliminate_constraint(c, G, A, b, keep_generators, keep_constraints):
    """Solve one constraint for one factor and substitute it everywhere."""
    block = np.abs(A[keep_constraints:, keep_generators:])
    if block.size == 0:
        return None
    k, j = np.unravel_index(np.argmax(block), block.shape)
    k += keep_constraints
    j += keep_generators
    pivot = A[k, j]
    if abs(pivot) <= 1e-12:
        # Dropping a constraint only enlarges the set.
        return c, G, np.delete(A, k, axis=0), np.delete(b, k)
    row = A[k] / pivot
    rhs = b[k] / pivot
    c = c + G[:, j] * rhs
    G = G - np.outer(G[:, j], row)
    b = b - A[:, j] * rhs
    A = A - np.outer(A[:, j], row)
    G = np.delete(G, j, axis=1)
    A = np.delete(np.delete(A, k, axis=0), j, axis=1)
    b = np.delete(b, k)
    return c, G, A, b


class SetUnion:
    """Finite union of constrained zonotopes of equal dimension."""

    def __init__(self, members: Iterable[ConstrainedZonotope] = (), dim: Optional[int] = None):
        members = tuple(members)
        dims = {m.dim for m in members}
        if len(dims) > 1:
            raise DimensionMismatch(f"union members have differing dimensions {sorted(dims)}")
        if members and dim is not None and dim not in dims:
            raise DimensionMismatch(f"union declared with dimension {dim}, members have {dims.pop()}")
        self.members = members
        self.dim = members[0].dim if members else dim

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, index):
        return self.members[index]

    def __repr__(self):
        return f"SetUnion(dim={self.dim}, members={len(self.members)})"

    def is_empty(self):
        return all(m.is_empty() for m in self.members)

    def interval_hull(self):
        if not self.members:
            raise EmptySet("union has no members")
        hulls = [m.interval_hull() for m in self.members]
        lo = np.min([h[0] for h in hulls], axis=0)
        hi = np.max([h[1] for h in hulls], axis=0)
        return lo, hi

    def contains_point(self, x, tol=None):
        tol = config.MEMBERSHIP_TOL if tol is None else tol
        x = np.atleast_1d(np.asarray(x, dtype=float))
        for member in self.members:
            lo, hi = member.interval_hull()
            if np.any(x < lo - tol) or np.any(x > hi + tol):
                continue
            if member.contains_point(x, tol):
                return True
        return False
