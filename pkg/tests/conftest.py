"""Shared fixtures: the expensive ground states and solve sweeps are built once
per session and reused by both the unit tests and the acceptance suite."""

import time

import pytest

from prnls.ground_state import solve_limit_equation
from prnls.params import ReducedParams
from prnls.spectral import Grid
from prnls import fixed_point

C5_LADDER = (8.0, 16.0, 32.0, 64.0)


@pytest.fixture(scope="session")
def grid2d():
    return Grid(2, 256, 20.0)


@pytest.fixture(scope="session")
def gs2d(grid2d):
    return solve_limit_equation(ReducedParams(2, 3.0, 8.0), grid2d, tol=1e-12)


@pytest.fixture(scope="session")
def grid2d_small():
    return Grid(2, 128, 20.0)


@pytest.fixture(scope="session")
def gs2d_small(grid2d_small):
    return solve_limit_equation(ReducedParams(2, 3.0, 8.0), grid2d_small, tol=1e-12)


@pytest.fixture(scope="session")
def gs1d():
    import numpy as np

    return solve_limit_equation(
        ReducedParams(1, 3.0, 8.0), Grid(1, 1024, 20.0 * np.pi), tol=1e-12)


@pytest.fixture(scope="session")
def grid3d():
    return Grid(3, 64, 15.0)


@pytest.fixture(scope="session")
def gs3d(grid3d):
    return solve_limit_equation(ReducedParams(3, 1.8, 8.0), grid3d, tol=1e-12)


@pytest.fixture(scope="session")
def uc16_small(grid2d_small, gs2d_small):
    """Baseline converged solution at (n=2, p=3, c=16) on the small grid."""
    return fixed_point.solve(ReducedParams(2, 3.0, 16.0), grid2d_small, gs=gs2d_small)


@pytest.fixture(scope="session")
def c5_runs(grid2d, gs2d):
    """The production-resolution existence sweep shared by criteria 5-7."""
    t0 = time.perf_counter()
    runs = {}
    for c in C5_LADDER:
        u_c, rep = fixed_point.solve(ReducedParams(2, 3.0, c), grid2d, gs=gs2d)
        runs[c] = (u_c, rep)
    return {"elapsed": time.perf_counter() - t0, "runs": runs}
