# sampling.py
"""Trajectory sampling used to check reachable sets from the outside."""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from czreach.czono import SetUnion
from czreach.exprdyn import NonlinearModel
from czreach.nnet import eval_network
from czreach.reach import ReachResult
from czreach.scenario import Scenario, compute_reach

logger = logging.getLogger(__name__)

# Misses kept in the report.
MAX_LISTED_MISSES = 20


@dataclass
class ContainmentReport:
    samples: int
    seed: int
    contained: List[int]
    misses: List[Tuple[int, int]] = field(default_factory=list)
    trajectories: Optional[np.ndarray] = None

    @property
    def fractions(self):
        if self.samples == 0:
            return [1.0 for _ in self.contained]
        return [k / self.samples for k in self.contained]

    @property
    def all_contained(self):
        return all(k == self.samples for k in self.contained)

    def to_dict(self):
        return {
            "samples": self.samples,
            "seed": self.seed,
            "contained": list(self.contained),
            "fractions": self.fractions,
            "misses": [{"t": t, "sample": k} for t, k in self.misses],
        }


def sample_union(union: SetUnion, count, rng):
    """``count`` points of the union; each point comes from a uniformly chosen member."""
    if len(union) == 1:
        return union[0].sample(count, rng)
    picks = rng.integers(len(union), size=count)
    out = np.empty((count, union.dim))
    for k, member in enumerate(union):
        rows = np.flatnonzero(picks == k)
        if rows.size:
            out[rows] = member.sample(rows.size, rng)
    return out


def _advance(model, X, U):
    if isinstance(model, NonlinearModel):
        fx = np.array([model.evaluate(x) for x in X]).reshape(X.shape)
    else:
        fx = X @ model.A_d.T
    return fx + U @ model.B_d.T


def simulate(model, net, X0, T, count, rng):
    """States of ``count`` closed-loop trajectories, shape (count, T + 1, n)."""
    X0 = X0 if isinstance(X0, SetUnion) else SetUnion([X0])
    x = sample_union(X0, count, rng)
    states = [x]
    for _ in range(T):
        u = np.atleast_2d(eval_network(net, x)).reshape(count, -1)
        x = _advance(model, x, u)
        states.append(x)
    return np.stack(states, axis=1)


def sample_trajectories(
    scenario: Scenario, count: int, result: Optional[ReachResult] = None, seed: Optional[int] = None,
) -> ContainmentReport:
    """Simulate ``count`` trajectories from the initial set and count how many stay in each step's set."""
    seed = scenario.seed if seed is None else seed
    if result is None:
        result = compute_reach(scenario)
    T = result.horizon
    if count == 0:
        return ContainmentReport(0, seed, [0] * (T + 1), trajectories=np.zeros((0, T + 1, scenario.dim)))

    rng = np.random.default_rng(seed)
    paths = simulate(scenario.model, scenario.network, result.steps[0], T, count, rng)
    contained = []
    misses = []
    for t in range(T + 1):
        hits = 0
        for k in range(count):
            if result.steps[t].contains_point(paths[k, t]):
                hits += 1
            elif len(misses) < MAX_LISTED_MISSES:
                misses.append((t, k))
        contained.append(hits)
        logger.info("t=%d: %d/%d sampled states contained", t, hits, count)
    return ContainmentReport(count, seed, contained, misses, paths)
