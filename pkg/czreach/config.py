# config.py
import os


def _env_float(name, default):
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"{name} must be a number, got {raw!r}")


def _env_int(name, default):
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}")


# LP feasibility tolerance handed to the solver.
LP_TOL = _env_float("CZREACH_LP_TOL", 1e-8)
LP_MAX_ITER = 10000

# Emptiness test: nonempty iff min ||xi||_inf <= 1 + EMPTY_TOL.
EMPTY_TOL = 1e-9

# A reach/obstacle pair is certified disjoint only when the LP value exceeds 1 + VERIFY_TOL.
VERIFY_TOL = 1e-9

MEMBERSHIP_TOL = 1e-7
REMAINDER_SLACK = 1e-9

MAX_MEMBERS = _env_int("CZREACH_MAX_MEMBERS", 100000)

SCHEMA_VERSION = 1

LOG_LEVEL = os.getenv("CZREACH_LOG_LEVEL", "INFO").strip().upper()
