"""Brute-force re-evaluations used to cross-check the solver on small instances.

Nothing here is on the solver's code path: energies are re-summed with
explicit loops, c is found by plain bisection on the bracket formulas written
out per scheme, and the reference minimizer is projected gradient descent.
"""
import logging
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from divergences import (DivergenceKind, ProblemSpec, divergence_hessian_diagonal, free_energy,
                         gradient)
from errors import DomainError, NormalizationError, SolverError
from grids import Density, VectorLike, as_vector
from kernels import InteractionKernel
from reparam import Reparameterization

logger = logging.getLogger(__name__)

BRACKET_WIDENING = 1e-9
MAX_REFERENCE_N = 16


@dataclass(frozen=True)
class OracleReport:
    quantity: str
    max_abs_error: float
    max_rel_error: float
    instances: int

    def __post_init__(self):
        for name in ("max_abs_error", "max_rel_error"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and nonnegative, got {value!r}")


def compare(quantity: str, expected: Iterable[VectorLike], actual: Iterable[VectorLike]) -> OracleReport:
    """Worst absolute error, and error relative to max(1, |expected|_inf), over paired instances"""
    max_abs = 0.0
    max_rel = 0.0
    count = 0
    for e, a in zip(expected, actual):
        e = np.atleast_1d(as_vector(e))
        a = np.atleast_1d(as_vector(a))
        err = float(np.max(np.abs(a - e)))
        max_abs = max(max_abs, err)
        max_rel = max(max_rel, err / max(1.0, float(np.max(np.abs(e)))))
        count += 1
    return OracleReport(quantity, max_abs, max_rel, count)


def naive_apply(kernel: InteractionKernel, v: VectorLike) -> np.ndarray:
    """Wv as an explicit double loop"""
    w = kernel.to_dense()
    v = as_vector(v)
    n = v.size
    out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += w[i, j] * v[j]
        out[i] = acc
    return out


def naive_free_energy(spec: ProblemSpec, p: VectorLike) -> float:
    """Term-by-term F(p) with the full divergence formulas"""
    p = as_vector(p)
    mu = spec.mu.values
    V = spec.V.values
    w = spec.W.to_dense()
    n = p.size

    total = 0.0
    for i in range(n):
        if spec.kind is DivergenceKind.KL:
            total += p[i] * np.log(p[i]) if spec.kl_absorbed else p[i] * np.log(p[i] / mu[i])
        elif spec.kind is DivergenceKind.REVERSE_KL:
            total += mu[i] * np.log(mu[i] / p[i])
        else:
            total += (np.sqrt(p[i]) - np.sqrt(mu[i])) ** 2
        total += V[i] * p[i]
        for j in range(n):
            total += 0.5 * p[i] * w[i, j] * p[j]
    return float(total)


def fd_gradient(spec: ProblemSpec, p: VectorLike, h: float) -> np.ndarray:
    """Central differences of F along coordinate directions (no simplex restriction)"""
    if not h > 0:
        raise DomainError(f"finite-difference step must be positive, got {h}")
    p = as_vector(p)
    if np.any(p - h <= 0):
        raise DomainError("finite-difference perturbation leaves the positive orthant")
    grad = np.empty(p.size)
    for i in range(p.size):
        e = np.zeros(p.size)
        e[i] = h
        grad[i] = (free_energy(spec, p + e) - free_energy(spec, p - e)) / (2.0 * h)
    return grad


def explicit_bracket(r: Reparameterization, g_tilde: VectorLike):
    """Bracket endpoints written out per scheme"""
    g = as_vector(g_tilde)
    n = r.n
    mu = r.mu.values
    alpha = r.alpha
    shift_lo = alpha / n
    if r.kind is DivergenceKind.KL:
        lo = np.min(np.log(1.0 / n) + shift_lo - g)
        hi = np.min(alpha - g)
    elif r.kind is DivergenceKind.REVERSE_KL:
        lo = np.min(-g - n * mu + shift_lo)
        hi = np.min(-g - mu + alpha)
    else:
        lo = np.min(-g - np.sqrt(n * mu) + shift_lo)
        hi = np.min(-g - np.sqrt(mu) + alpha)
    lo -= max(1.0, abs(lo), abs(hi)) * BRACKET_WIDENING
    return float(lo), float(hi)


def bisect_c(r: Reparameterization, g_tilde: VectorLike, tol: float) -> float:
    """Pure bisection for sum phi^-1(g~ + c) = 1"""
    g = as_vector(g_tilde)
    lo, hi = explicit_bracket(r, g)

    def excess(c):
        return float(r.inverse(g + c).sum()) - 1.0

    if not (excess(lo) < 0 <= excess(hi)):
        raise NormalizationError(f"bisection bracket ({lo!r}, {hi!r}) has no sign change")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if excess(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def project_simplex(v: VectorLike) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x = 1}"""
    v = as_vector(v)
    u = np.sort(v)[::-1]
    cumsum = np.cumsum(u)
    ks = np.arange(1, v.size + 1)
    rho = ks[u + (1.0 - cumsum) / ks > 0][-1]
    shift = (1.0 - cumsum[rho - 1]) / rho
    return np.maximum(v + shift, 0.0)


def _lipschitz_bound(spec: ProblemSpec, p: np.ndarray, iters: int = 30) -> float:
    hessian = np.diag(divergence_hessian_diagonal(spec.kind, p, spec.mu.values)) + spec.W.to_dense()
    x = np.ones(p.size) / np.sqrt(p.size)
    estimate = 0.0
    for _ in range(iters):
        y = hessian @ x
        norm = np.linalg.norm(y)
        if norm == 0:
            return 0.0
        estimate = norm
        x = y / norm
    return float(estimate)


def reference_minimizer(spec: ProblemSpec, tol: float, max_iters: int = 200_000) -> Density:
    """Projected gradient descent on the simplex for small convex problems"""
    if spec.n > MAX_REFERENCE_N:
        raise DomainError(f"reference minimizer is limited to n <= {MAX_REFERENCE_N}, got {spec.n}")
    eps = np.finfo(float).eps
    p = np.full(spec.n, 1.0 / spec.n)
    energy = free_energy(spec, p)

    for iteration in range(max_iters):
        grad = gradient(spec, p)
        if np.ptp(grad) <= tol:
            logger.debug(f"reference minimizer converged after {iteration} iterations")
            return Density(p / p.sum())

        step = 1.0 / (_lipschitz_bound(spec, p) + 1.0)
        for _ in range(60):
            q = project_simplex(p - step * grad)
            if np.all(q > 0):
                q_energy = free_energy(spec, q)
                if q_energy <= energy + 4 * eps * max(1.0, abs(energy)):
                    break
            step *= 0.5
        else:
            raise SolverError(f"reference minimizer line search failed at iteration {iteration}")
        p, energy = q, q_energy

    raise SolverError(f"reference minimizer did not reach residual {tol} in {max_iters} iterations")
