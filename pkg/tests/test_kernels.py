import numpy as np
import pytest

from conftest import random_symmetric
from errors import DomainError
from grids import make_uniform_grid
from kernels import KernelKind, dense_kernel, make_log_kernel, make_tridiagonal_kernel, zero_kernel
from oracle import naive_apply


def test_log_kernel_entries():
    W = make_log_kernel(make_uniform_grid(2), 1.0, 1e-6).to_dense()
    assert W[0, 0] == pytest.approx(-13.815510557964274, abs=1e-12)
    assert W[0, 1] == pytest.approx(np.log(0.5 + 1e-6), abs=1e-15)
    assert W[0, 1] == pytest.approx(-0.693145, abs=1e-6)
    assert W[0, 1] == W[1, 0]


def test_log_kernel_is_not_claimed_definite():
    W = make_log_kernel(make_uniform_grid(8), 1.5, 1e-6)
    assert W.kind is KernelKind.DENSE
    assert not W.claimed_positive_definite


def test_log_kernel_rejects_nonpositive_epsilon():
    with pytest.raises(DomainError):
        make_log_kernel(make_uniform_grid(4), 1.0, 0.0)


def test_tridiagonal_kernel_wraps_around():
    W = make_tridiagonal_kernel(make_uniform_grid(4, periodic=True), 2.0)
    dense = W.to_dense()
    np.testing.assert_array_equal(dense[0], [2.0, 1.0, 0.0, 1.0])
    np.testing.assert_array_equal(dense, dense.T)
    assert W.claimed_positive_definite


def test_tridiagonal_kernel_preconditions():
    with pytest.raises(DomainError):
        make_tridiagonal_kernel(make_uniform_grid(4, periodic=False), 2.0)
    with pytest.raises(DomainError):
        make_tridiagonal_kernel(make_uniform_grid(4, periodic=True), 0.0)
    with pytest.raises(DomainError):
        make_tridiagonal_kernel(make_uniform_grid(2, periodic=True), 1.0)


def test_apply_examples():
    np.testing.assert_array_equal(zero_kernel(3).apply([1.0, -2.0, 5.0]), np.zeros(3))

    W = make_tridiagonal_kernel(make_uniform_grid(4, periodic=True), 2.0)
    np.testing.assert_allclose(W.apply(np.ones(4)), [4.0, 4.0, 4.0, 4.0], rtol=0, atol=0)


def test_apply_matches_naive_loops(rng):
    W = random_symmetric(rng, 3)
    v = rng.normal(size=3)
    expected = naive_apply(W, v)
    np.testing.assert_allclose(W.apply(v), expected, rtol=1e-13, atol=1e-13 * np.abs(expected).max())


def test_tridiagonal_apply_matches_dense(rng):
    W = make_tridiagonal_kernel(make_uniform_grid(9, periodic=True), 3.0)
    v = rng.normal(size=9)
    np.testing.assert_allclose(W.apply(v), W.to_dense() @ v, rtol=1e-13, atol=1e-13)


def test_apply_rejects_wrong_dimension():
    with pytest.raises(DomainError):
        zero_kernel(3).apply(np.ones(4))


def test_diagonal():
    W = make_tridiagonal_kernel(make_uniform_grid(16, periodic=True), 1e3)
    np.testing.assert_array_equal(W.diagonal(), np.full(16, 1e3))
    np.testing.assert_array_equal(zero_kernel(5).diagonal(), np.zeros(5))

    log_W = make_log_kernel(make_uniform_grid(6), 2.0 / 3.0, 1e-6)
    np.testing.assert_allclose(log_W.diagonal(), np.full(6, 2.0 / 3.0 * np.log(1e-6)), rtol=1e-15)


def test_energy_quadratic():
    p = np.full(4, 0.25)
    assert zero_kernel(4).energy_quadratic(p) == 0.0

    W = make_tridiagonal_kernel(make_uniform_grid(4, periodic=True), 2.0)
    assert W.energy_quadratic(p) == pytest.approx(0.5, abs=1e-15)


def test_energy_quadratic_matches_naive_double_sum(rng):
    W = random_symmetric(rng, 4)
    p = rng.random(4)
    dense = W.to_dense()
    expected = 0.5 * sum(p[i] * dense[i, j] * p[j] for i in range(4) for j in range(4))
    assert W.energy_quadratic(p) == pytest.approx(expected, rel=1e-13)
    assert W.energy_quadratic(p) == 0.5 * float(p @ W.apply(p))


def test_apply_is_symmetric(rng):
    for n in (3, 5, 8):
        for W in (random_symmetric(rng, n), make_tridiagonal_kernel(make_uniform_grid(n, periodic=True), 7.0),
                  make_log_kernel(make_uniform_grid(n), 1.5, 1e-6)):
            u = rng.normal(size=n)
            v = rng.normal(size=n)
            lhs = float(u @ W.apply(v))
            rhs = float(v @ W.apply(u))
            assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_tridiagonal_kernel_is_positive_semidefinite(rng):
    W = make_tridiagonal_kernel(make_uniform_grid(32, periodic=True), 100.0)
    for _ in range(50):
        v = rng.normal(size=32)
        assert float(v @ W.apply(v)) >= -1e-9


def test_dense_kernel_requires_exact_symmetry():
    with pytest.raises(DomainError):
        dense_kernel([[1.0, 2.0], [2.0 + 1e-12, 1.0]])
    with pytest.raises(DomainError):
        dense_kernel([[1.0, 2.0, 3.0]])
