from pathlib import Path

import numpy as np

from czreach.czono import ConstrainedZonotope

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


def random_cz(rng, n=2, n_gen=4, n_con=1):
    """Random constrained zonotope that is nonempty by construction (xi0 is feasible)."""
    G = rng.uniform(-1.0, 1.0, size=(n, n_gen))
    c = rng.uniform(-1.0, 1.0, size=n)
    A = rng.uniform(-1.0, 1.0, size=(n_con, n_gen))
    xi0 = rng.uniform(-0.8, 0.8, size=n_gen)
    return ConstrainedZonotope(c, G, A, A @ xi0)


def support_directions(count=16):
    angles = 2.0 * np.pi * np.arange(count) / count
    return np.column_stack((np.cos(angles), np.sin(angles)))


def assert_same_set(Z, W, tol=1e-7, count=16):
    for d in support_directions(count):
        assert np.allclose(Z.bound_along(d), W.bound_along(d), atol=tol)


def grid_feasible(A, b, step=1e-2, tol=None):
    """Brute-force: does some xi on a grid of [-1, 1]^k satisfy |A xi - b| <= tol?"""
    k = A.shape[1]
    axis = np.arange(-1.0, 1.0 + step / 2, step)
    tol = step * np.abs(A).sum(axis=1).max() if tol is None else tol
    mesh = np.stack(np.meshgrid(*([axis] * k), indexing="ij"), axis=-1).reshape(-1, k)
    return bool(np.any(np.max(np.abs(mesh @ A.T - b), axis=1) <= tol))
