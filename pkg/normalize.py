"""Lagrange constant c from the normalization condition sum_i phi_i^-1(g~_i + c) = 1.

The mass function c -> sum_i phi_i^-1(g~_i + c) is convex and strictly
increasing, so a Newton iteration started at the right end of the bracket
approaches the root monotonically; bisection takes over whenever a step
leaves the current bracket.
"""
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.special import logsumexp

from divergences import DivergenceKind
from errors import DomainError, NormalizationError
from grids import Density, VectorLike, as_vector
from reparam import Reparameterization

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-12
BRACKET_WIDENING = 1e-9
MAX_ITERS = 200
# Extra Newton steps allowed once the residual is below RESIDUAL_TOL
POLISH_STEPS = 3
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class NormalizationResult:
    c: float
    residual: float
    evaluations: int


def _g_tilde(r: Reparameterization, g_tilde: VectorLike) -> np.ndarray:
    g = as_vector(g_tilde)
    if g.shape != (r.n,):
        raise DomainError(f"expected g~ of length {r.n}, got shape {g.shape}")
    if not np.all(np.isfinite(g)):
        raise DomainError("g~ must be finite")
    return g


def mass(r: Reparameterization, g_tilde: np.ndarray, c: float) -> Tuple[float, float]:
    """Mass sum phi^-1(g~ + c) and its derivative sum 1/phi'(p)"""
    p = r.inverse(g_tilde + c)
    positive = p > 0
    slope = 1.0 / r.derivative(np.where(positive, p, 1.0))
    return float(p.sum()), float(np.sum(slope[positive]))


def bracket(r: Reparameterization, g_tilde: VectorLike) -> Tuple[float, float]:
    """Interval (lo, hi) with mass(lo) < 1 <= mass(hi).

    lo = min_i(phi_i(1/n) - g~_i) puts every p_i at or below 1/n and
    hi = min_i(phi_i(1) - g~_i) puts one p_i at 1.  lo is widened downwards
    to break the equality that symmetric inputs produce; hi is the edge of
    the mass function's domain and is kept as is.
    """
    g = _g_tilde(r, g_tilde)
    n = r.n
    lo = float(np.min(r.phi(np.full(n, 1.0 / n)) - g))
    hi = float(np.min(r.sup_g() - g))
    lo -= max(1.0, abs(lo), abs(hi)) * BRACKET_WIDENING

    mass_lo, _ = mass(r, g, lo)
    mass_hi, _ = mass(r, g, hi)
    if not (mass_lo < 1.0 <= mass_hi):
        raise NormalizationError(f"bracket ({lo!r}, {hi!r}) does not enclose the root: "
                                 f"mass(lo) = {mass_lo!r}, mass(hi) = {mass_hi!r}")
    return lo, hi


def _closed_form(g: np.ndarray) -> NormalizationResult:
    c = -float(logsumexp(g))
    residual = abs(float(np.exp(g + c).sum()) - 1.0)
    return NormalizationResult(c, residual, 1)


def solve_c(r: Reparameterization, g_tilde: VectorLike, closed_form: bool = True) -> NormalizationResult:
    """Lagrange constant c with sum phi^-1(g~ + c) = 1"""
    g = _g_tilde(r, g_tilde)
    if closed_form and r.kind is DivergenceKind.KL and not r.mode.is_shifted:
        return _closed_form(g)

    lo, hi = bracket(r, g)
    x = hi
    m, slope = mass(r, g, x)
    f = m - 1.0
    evaluations = 1
    polish = 0

    for _ in range(MAX_ITERS):
        if f == 0.0:
            break
        if abs(f) <= RESIDUAL_TOL:
            polish += 1
            if polish > POLISH_STEPS:
                break

        x_new = x - f / slope if slope > 0 else lo
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)

        m, slope = mass(r, g, x_new)
        f_new = m - 1.0
        evaluations += 1
        if f_new < 0:
            lo = x_new
        else:
            hi = x_new

        converged = abs(x_new - x) <= 2.0 * _EPS * max(1.0, abs(x))
        x, f = x_new, f_new
        if converged or hi - lo <= 2.0 * _EPS * max(1.0, abs(x)):
            break
    else:
        raise NormalizationError(f"root finder did not converge in {MAX_ITERS} iterations "
                                 f"(c = {x!r}, residual = {abs(f)!r})")

    residual = abs(f)
    if residual > RESIDUAL_TOL:
        raise NormalizationError(f"normalization residual {residual!r} exceeds {RESIDUAL_TOL}")
    return NormalizationResult(float(x), residual, evaluations)


def normalize_state(r: Reparameterization, g_tilde: VectorLike) -> Tuple[np.ndarray, Density, float]:
    """Shift g~ by c and map back to a density on the simplex"""
    g = _g_tilde(r, g_tilde)
    result = solve_c(r, g)
    g_new = g + result.c
    p = r.inverse(g_new)
    if not np.all(p > 0):
        raise NormalizationError("normalized density underflowed to zero in some component")
    logger.debug(f"c = {result.c:.17g}, residual = {result.residual:.3e}, evaluations = {result.evaluations}")
    return g_new, Density(p / p.sum()), result.c
