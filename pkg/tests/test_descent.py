from dataclasses import replace

import numpy as np
import pytest

import descent
from conftest import ALL_KINDS, SCHEMES, free_problem, random_problem, spread_density
from descent import (EnergyTrace, IterateState, baseline_md, drift, initial_state, run, stationarity_residual,
                     step)
from divergences import DivergenceKind, absorb_reference, gradient, make_problem
from errors import NormalizationError, SolverError
from grids import Density, ReferenceMeasure, make_power_measure, make_uniform_grid, random_density, zero_potential
from kernels import make_tridiagonal_kernel


def test_drift_for_free_kl_problem():
    n = 4
    spec = replace(free_problem(DivergenceKind.KL, np.full(n, 1 / n)), kl_absorbed=True)
    state = initial_state(spec, Density(np.full(n, 1 / n)))
    np.testing.assert_allclose(state.g, np.full(n, -np.log(n)))
    np.testing.assert_allclose(drift(spec, state), state.g, atol=0)

    unabsorbed = free_problem(DivergenceKind.KL, np.full(n, 1 / n))
    np.testing.assert_allclose(drift(unabsorbed, state), np.zeros(n), atol=1e-15)


def test_shifted_drift_drops_the_diagonal():
    grid = make_uniform_grid(4, periodic=True)
    mu = ReferenceMeasure(np.full(4, 0.25))
    W = make_tridiagonal_kernel(grid, 2.0)
    spec = make_problem(DivergenceKind.HELLINGER, grid, mu, zero_potential(grid), W, shifted=True)
    state = initial_state(spec, Density(np.full(4, 0.25)))
    np.testing.assert_allclose(drift(spec, state) - state.g, np.full(4, 0.5), atol=1e-15)


@pytest.mark.parametrize("kind,shifted", SCHEMES)
def test_drift_is_gradient_without_constant(kind, shifted, rng):
    spec = random_problem(rng, kind, 4, shifted=shifted)
    p = spread_density(rng, 4)
    state = initial_state(spec, p)
    offset = 1.0 if kind is DivergenceKind.KL else 0.0
    np.testing.assert_allclose(drift(spec, state), gradient(spec, p) - offset, rtol=0, atol=1e-12)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_one_step_reaches_free_minimizer(kind):
    grid = make_uniform_grid(16)
    if kind is DivergenceKind.KL:
        mu = np.full(16, 1 / 16)
        target = np.full(16, 1 / 16)
    else:
        mu = make_power_measure(grid, 4).values
        target = mu
    spec = free_problem(kind, mu)
    state = step(spec, initial_state(spec, random_density(16, 3)))
    assert state.k == 1
    np.testing.assert_allclose(state.p.values, target, rtol=0, atol=1e-12)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_free_problem_trace_is_flat_after_one_step(kind):
    spec = free_problem(kind, make_power_measure(make_uniform_grid(8), 2).values)
    state, trace = run(spec, random_density(8, 11), 5)
    assert state.k == 5
    assert len(trace) == 6
    assert trace.energies[0] > trace.energies[1]
    np.testing.assert_allclose(trace.energies[1:], trace.energies[1], rtol=0, atol=1e-14)


@pytest.mark.parametrize("kind,shifted", SCHEMES)
def test_iterates_stay_on_simplex(kind, shifted, rng):
    spec = random_problem(rng, kind, 6, shifted=shifted, alpha=5.0)
    state = initial_state(spec, spread_density(rng, 6))
    for _ in range(30):
        state = step(spec, state)
        assert np.all(state.p.values > 0)
        assert abs(state.p.values.sum() - 1.0) <= 1e-12


def test_run_validates_iteration_count(rng):
    spec = random_problem(rng, DivergenceKind.KL, 3)
    with pytest.raises(ValueError):
        run(spec, spread_density(rng, 3), 0)


def test_run_early_exit(rng):
    spec = free_problem(DivergenceKind.REVERSE_KL, spread_density(rng, 5).values)
    state, trace = run(spec, spread_density(rng, 5), 50, tol=1e-14)
    assert state.k == 2
    assert len(trace) == 3


def test_run_is_deterministic(rng):
    spec = random_problem(rng, DivergenceKind.HELLINGER, 6, shifted=True, alpha=3.0)
    p0 = random_density(6, 5)
    _, first = run(spec, p0, 20)
    _, second = run(spec, p0, 20)
    assert np.array_equal(first.energies, second.energies)
    assert first.reference_energy == second.reference_energy


def test_reference_energy_uses_extension(rng):
    spec = random_problem(rng, DivergenceKind.KL, 6, shifted=True, alpha=2.0)
    p0 = random_density(6, 2)
    _, short = run(spec, p0, 3, reference_extension=0)
    _, extended = run(spec, p0, 3, reference_extension=50)
    assert short.reference_energy == short.energies.min()
    assert extended.reference_energy <= short.reference_energy
    assert np.all(extended.errors >= -1e-12)


def test_solver_failure_carries_last_state(rng, monkeypatch):
    spec = random_problem(rng, DivergenceKind.REVERSE_KL, 4)
    calls = {"n": 0}
    original = descent.normalize_state

    def flaky(r, g_tilde):
        calls["n"] += 1
        if calls["n"] == 3:
            raise NormalizationError("bracket lost")
        return original(r, g_tilde)

    monkeypatch.setattr(descent, "normalize_state", flaky)
    with pytest.raises(SolverError) as excinfo:
        run(spec, spread_density(rng, 4), 10)
    assert isinstance(excinfo.value.state, IterateState)
    assert excinfo.value.state.k == 2


def test_baseline_examples():
    V = np.array([0.0, np.log(2.0)])

    def energy_gradient(p):
        return np.log(p.values) + 1.0 + V

    p = baseline_md(energy_gradient, Density([0.5, 0.5]), 1.0, 1)
    np.testing.assert_allclose(p.values, [2 / 3, 1 / 3], atol=1e-15)

    p0 = random_density(5, 4)
    unchanged = baseline_md(lambda p: np.zeros(5), p0, 0.7, 3)
    np.testing.assert_allclose(unchanged.values, p0.values, atol=1e-15)


def test_baseline_rejects_nonpositive_eta():
    with pytest.raises(ValueError):
        baseline_md(lambda p: np.zeros(2), Density([0.5, 0.5]), 0.0, 1)


def test_baseline_matches_kl_plain_descent(rng):
    for _ in range(10):
        dt = float(rng.uniform(0.2, 1.0))
        spec = random_problem(rng, DivergenceKind.KL, 8, dt=dt)
        reduced = absorb_reference(spec)
        state = initial_state(spec, spread_density(rng, 8))
        p = state.p
        for _ in range(20):
            state = step(spec, state)
            p = baseline_md(lambda q: gradient(reduced, q), p, dt, 1)
            np.testing.assert_allclose(state.p.values, p.values, rtol=0, atol=1e-12)


def test_stationarity_residual_examples(rng):
    kl = free_problem(DivergenceKind.KL, np.full(5, 0.2))
    assert stationarity_residual(kl, np.full(5, 0.2)) <= 1e-12

    mu = spread_density(rng, 5).values
    rkl = free_problem(DivergenceKind.REVERSE_KL, mu)
    assert stationarity_residual(rkl, mu) <= 1e-12


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_fixed_point_is_stationary(kind, rng):
    spec = random_problem(rng, kind, 6, shifted=True, alpha=2.0)
    state, _ = run(spec, spread_density(rng, 6), 400)
    following = step(spec, state)
    assert np.max(np.abs(following.g - state.g)) <= 1e-12
    assert stationarity_residual(spec, state.p) <= 1e-8


def test_trace_csv_format(tmp_path):
    trace = EnergyTrace(np.array([1.5, 0.25, 0.1]), 0.1)
    path = trace.to_csv(tmp_path / "trace.csv")
    raw = path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "iter,energy,error"
    assert lines[1] == "0,1.5,1.3999999999999999"
    assert lines[3] == "2,0.10000000000000001,0"

    loaded = EnergyTrace.from_csv(path)
    np.testing.assert_array_equal(loaded.energies, trace.energies)
    np.testing.assert_array_equal(loaded.errors, trace.errors)


def test_trace_rejects_error_below_reference():
    with pytest.raises(ValueError):
        EnergyTrace(np.array([1.0, 0.5]), 0.75)


def test_trace_from_csv_rejects_foreign_files(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        EnergyTrace.from_csv(path)
