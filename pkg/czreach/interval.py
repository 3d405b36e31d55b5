# interval.py
"""Interval arithmetic and interval-matrix enclosures of constrained zonotopes."""
import operator
from dataclasses import dataclass

import numpy as np

from czreach.czono import ConstrainedZonotope
from czreach.errors import DimensionMismatch, DivisionByZeroInterval


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if np.isnan(lo) or np.isnan(hi):
            raise ValueError("interval bounds must not be NaN")
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, value):
        return cls(value, value)

    @property
    def mid(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def rad(self):
        return 0.5 * (self.hi - self.lo)

    @property
    def mag(self):
        return max(abs(self.lo), abs(self.hi))

    def contains(self, x, tol=0.0):
        return self.lo - tol <= x <= self.hi + tol

    def subset_of(self, other):
        return other.lo <= self.lo and self.hi <= other.hi

    def __add__(self, other):
        other = _coerce(other)
        return Interval(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        return Interval(self.lo - other.hi, self.hi - other.lo)

    def __rsub__(self, other):
        return _coerce(other) - self

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __mul__(self, other):
        other = _coerce(other)
        corners = (
            self.lo * other.lo, self.lo * other.hi,
            self.hi * other.lo, self.hi * other.hi,
        )
        return Interval(min(corners), max(corners))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        if other.lo <= 0.0 <= other.hi:
            raise DivisionByZeroInterval(f"divisor {other} contains zero")
        return self * Interval(1.0 / other.hi, 1.0 / other.lo)

    def __rtruediv__(self, other):
        return _coerce(other) / self

    def __pow__(self, k):
        """Natural extension: repeated multiplication, ``x ** 0 == [1, 1]``."""
        if not isinstance(k, int) or k < 0:
            raise ValueError("interval powers take nonnegative integer exponents")
        result = Interval(1.0, 1.0)
        for _ in range(k):
            result = result * self
        return result

    def square(self):
        """Tight range of x**2."""
        lo2, hi2 = self.lo * self.lo, self.hi * self.hi
        if self.lo <= 0.0 <= self.hi:
            return Interval(0.0, max(lo2, hi2))
        return Interval(min(lo2, hi2), max(lo2, hi2))

    def __repr__(self):
        return f"[{self.lo!r}, {self.hi!r}]"


def _coerce(value):
    if isinstance(value, Interval):
        return value
    return Interval(value, value)


_OPS = {
    "+": operator.add,
    "-": operator.sub,
    "−": operator.sub,
    "*": operator.mul,
    "/": operator.truediv,
    "÷": operator.truediv,
}


def iv_arith(op, a, b):
    """Apply one of ``+ - * /`` to two intervals."""
    try:
        fn = _OPS[op]
    except KeyError:
        raise ValueError(f"unknown interval operator {op!r}")
    return fn(_coerce(a), _coerce(b))


class IntervalMatrix:
    """Elementwise bounds ``lo <= M <= hi``."""

    def __init__(self, lo, hi):
        lo = np.atleast_2d(np.asarray(lo, dtype=float))
        hi = np.atleast_2d(np.asarray(hi, dtype=float))
        if lo.shape != hi.shape:
            raise DimensionMismatch(f"bound shapes differ: {lo.shape} vs {hi.shape}")
        if np.any(lo > hi):
            raise ValueError("interval matrix has lo > hi in some entry")
        self.lo = lo
        self.hi = hi

    @classmethod
    def from_center_radius(cls, center, radius):
        center = np.atleast_2d(np.asarray(center, dtype=float))
        radius = np.abs(np.atleast_2d(np.asarray(radius, dtype=float)))
        return cls(center - radius, center + radius)

    @classmethod
    def from_intervals(cls, rows):
        lo = [[iv.lo for iv in row] for row in rows]
        hi = [[iv.hi for iv in row] for row in rows]
        return cls(lo, hi)

    @property
    def shape(self):
        return self.lo.shape

    @property
    def center(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def radius(self):
        return 0.5 * (self.hi - self.lo)

    def contains(self, M, tol=0.0):
        M = np.asarray(M, dtype=float)
        return bool(np.all(self.lo - tol <= M) and np.all(M <= self.hi + tol))

    def __getitem__(self, index):
        i, j = index
        return Interval(self.lo[i, j], self.hi[i, j])

    def __repr__(self):
        return f"IntervalMatrix(shape={self.shape})"


def im_cz_enclosure(J: IntervalMatrix, Z: ConstrainedZonotope) -> ConstrainedZonotope:
    """Constrained zonotope containing ``{M x : M in J, x in Z}``.

    With J = J_c +- J_r and the hull of Z equal to z_c +- z_r the result is
    ``J_c Z (+) Box(J_r (|z_c| + z_r))``. The box is kept even at zero radius.
    """
    if J.shape[1] != Z.dim:
        raise DimensionMismatch(f"matrix has {J.shape[1]} columns, set has dimension {Z.dim}")
    lo, hi = Z.interval_hull()
    z_c = 0.5 * (lo + hi)
    z_r = 0.5 * (hi - lo)
    r = J.radius @ (np.abs(z_c) + z_r)
    return Z.linear_map(J.center).minkowski_sum(ConstrainedZonotope.from_box(-r, r))
