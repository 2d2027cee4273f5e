import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from divergences import DivergenceKind, make_problem  # noqa: E402
from grids import Density, Potential, ReferenceMeasure, make_uniform_grid, zero_potential  # noqa: E402
from kernels import dense_kernel, make_tridiagonal_kernel, zero_kernel  # noqa: E402

ALL_KINDS = list(DivergenceKind)
SCHEMES = [(kind, shifted) for kind in DivergenceKind for shifted in (False, True)]


def spread_density(rng, n):
    """Random density bounded away from the simplex boundary"""
    return Density.from_weights(1.0 + rng.random(n))


def random_symmetric(rng, n, scale=0.5):
    a = rng.normal(scale=scale, size=(n, n))
    return dense_kernel(a + a.T)


def random_problem(rng, kind, n, shifted=False, alpha=None, dt=1.0, v_scale=1.0):
    """Random small problem: dense kernel in plain mode, tridiagonal in shifted mode"""
    grid = make_uniform_grid(n, periodic=shifted)
    mu = ReferenceMeasure(spread_density(rng, n).values)
    V = Potential(rng.normal(scale=v_scale, size=n))
    if shifted:
        W = make_tridiagonal_kernel(grid, alpha if alpha is not None else rng.uniform(1.0, 10.0))
    else:
        W = random_symmetric(rng, n)
    return make_problem(kind, grid, mu, V, W, shifted=shifted, dt=dt)


def free_problem(kind, mu_values, dt=1.0):
    """V = 0, W = 0 problem with the given reference measure"""
    n = len(mu_values)
    grid = make_uniform_grid(n)
    return make_problem(kind, grid, ReferenceMeasure(mu_values), zero_potential(grid), zero_kernel(n), dt=dt)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(autouse=True)
def quiet_env(monkeypatch):
    monkeypatch.setenv("FREEMIN_PROGRESS", "false")
    monkeypatch.delenv("FREEMIN_OUTPUT_DIR", raising=False)
    monkeypatch.delenv("FREEMIN_PRESET_DIR", raising=False)
    monkeypatch.delenv("FREEMIN_REFERENCE_EXTENSION", raising=False)
