"""Reachable sets of ReLU network control loops with constrained zonotopes."""
from czreach.czono import ConstrainedZonotope, SetUnion
from czreach.errors import CzreachError
from czreach.exprdyn import NonlinearModel
from czreach.nnet import FeedforwardNetwork, load_network
from czreach.reach import LinearModel, ReachResult, reach_exact, reach_nonlinear, reach_over
from czreach.verify import UnsafeSet, Verdict, check_avoid_exact, check_avoid_over

__all__ = [
    "ConstrainedZonotope",
    "SetUnion",
    "CzreachError",
    "NonlinearModel",
    "FeedforwardNetwork",
    "load_network",
    "LinearModel",
    "ReachResult",
    "reach_exact",
    "reach_over",
    "reach_nonlinear",
    "UnsafeSet",
    "Verdict",
    "check_avoid_exact",
    "check_avoid_over",
]
