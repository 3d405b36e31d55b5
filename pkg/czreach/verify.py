# verify.py
"""Avoid-set certification of reachable sets against unsafe sets.

A reachable member Z and an unsafe set O are disjoint iff the stacked system

    [A_z 0; 0 A_o; G_z -G_o] xi = [b_z; b_o; c_o - c_z]

has no solution with ||xi||_inf <= 1. Each (step, member, obstacle) pair is
first screened with interval hulls, which costs no extra emptiness LP when
the hulls are already apart.
"""
import enum
import logging
import time
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from czreach import config
from czreach.czono import ConstrainedZonotope
from czreach.errors import EmptySet, MethodMismatch
from czreach.lpcore import min_inf_norm
from czreach.reach import ReachResult

logger = logging.getLogger(__name__)

# Hulls closer than this are handed to the LP.
HULL_GAP = 1e-7


@dataclass(frozen=True)
class UnsafeSet:
    region: ConstrainedZonotope
    label: str = ""

    def __post_init__(self):
        if self.region.is_empty():
            raise EmptySet(f"unsafe set {self.label!r} is empty")


class Verdict(str, enum.Enum):
    SAFE = "Safe"
    UNSAFE = "Unsafe-Intersection-Found"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class Witness:
    t: int
    member: int
    obstacle: int
    value: float
    label: str = ""

    def to_dict(self):
        return {
            "t": self.t,
            "member": self.member,
            "obstacle": self.obstacle,
            "label": self.label,
            "value": self.value,
        }


@dataclass
class VerificationReport:
    verdict: Verdict
    witnesses: List[Witness] = field(default_factory=list)
    lp_count: int = 0
    lp_solved: int = 0
    prefiltered: int = 0
    wall_ms: float = 0.0
    method: str = ""

    @property
    def is_safe(self):
        return self.verdict is Verdict.SAFE

    def to_dict(self, include_timings=True):
        data = {
            "schema_version": config.SCHEMA_VERSION,
            "verdict": self.verdict.value,
            "method": self.method,
            "witnesses": [w.to_dict() for w in self.witnesses],
            "lp_count": self.lp_count,
            "lp_solved": self.lp_solved,
            "prefiltered": self.prefiltered,
        }
        if include_timings:
            data["wall_ms"] = self.wall_ms
        return data


def intersection_value(Z: ConstrainedZonotope, O: ConstrainedZonotope) -> float:
    """Smallest ||xi||_inf of the stacked system; Z and O meet iff it is <= 1."""
    A = np.block([
        [Z.A, np.zeros((Z.n_con, O.n_gen))],
        [np.zeros((O.n_con, Z.n_gen)), O.A],
        [Z.G, -O.G],
    ])
    b = np.concatenate((Z.b, O.b, O.c - Z.c))
    return min_inf_norm(A, b)


def _hulls_apart(a, b):
    (lo_a, hi_a), (lo_b, hi_b) = a, b
    return bool(np.any(lo_a > hi_b + HULL_GAP) or np.any(lo_b > hi_a + HULL_GAP))


def _check(reach: ReachResult, obstacles: Sequence[UnsafeSet], hit_verdict: Verdict) -> VerificationReport:
    start = time.perf_counter()
    obstacle_hulls = [o.region.interval_hull() for o in obstacles]
    lp_count = len(obstacles) * sum(reach.member_counts[1:])
    witnesses = []
    solved = 0
    skipped = 0
    for t in range(1, len(reach.steps)):
        for i, member in enumerate(reach.steps[t]):
            try:
                hull = member.interval_hull()
            except EmptySet:
                # An empty member meets nothing.
                skipped += len(obstacles)
                continue
            for j, obstacle in enumerate(obstacles):
                if _hulls_apart(hull, obstacle_hulls[j]):
                    skipped += 1
                    continue
                value = intersection_value(member, obstacle.region)
                solved += 1
                logger.debug("t=%d member=%d obstacle=%d value=%.6g", t, i, j, value)
                if not value > 1.0 + config.VERIFY_TOL:
                    witnesses.append(Witness(t, i, j, float(value), obstacle.label))
    verdict = hit_verdict if witnesses else Verdict.SAFE
    wall_ms = (time.perf_counter() - start) * 1000.0
    logger.info(
        "verification %s: %d pairs, %d LPs solved, %d screened by hulls (%.1f ms)",
        verdict.value, lp_count, solved, skipped, wall_ms,
    )
    return VerificationReport(verdict, witnesses, lp_count, solved, skipped, wall_ms, reach.method)


def check_avoid_exact(reach: ReachResult, obstacles: Sequence[UnsafeSet]) -> VerificationReport:
    """Safe iff no exact reachable member at t = 1..T meets an obstacle."""
    if reach.method != "exact" or reach.over_approximate:
        raise MethodMismatch(
            "exact avoidance checks need an exact reach result; use check_avoid_over"
        )
    return _check(reach, obstacles, Verdict.UNSAFE)


def check_avoid_over(reach: ReachResult, obstacles: Sequence[UnsafeSet]) -> VerificationReport:
    """Safe when no over-approximate set meets an obstacle; any contact is Unknown."""
    return _check(reach, obstacles, Verdict.UNKNOWN)


def check_avoid(reach: ReachResult, obstacles: Sequence[UnsafeSet]) -> VerificationReport:
    if reach.method == "exact" and not reach.over_approximate:
        return check_avoid_exact(reach, obstacles)
    return check_avoid_over(reach, obstacles)
