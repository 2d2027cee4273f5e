"""Monotone reparameterizations g = phi(p) for the six (divergence, metric) schemes.

Each phi_i maps (0, 1) onto (-inf, sup_g(i)) and its derivative is the metric
diagonal of the scheme, so the metric gradient flow becomes
g' = -(g + V + (W - alpha) p + c).
"""
import logging
from dataclasses import dataclass

import numpy as np

from divergences import DivergenceKind, MetricMode, ProblemSpec, divergence_hessian_diagonal
from errors import DomainError, SolverError
from grids import ReferenceMeasure, VectorLike, as_vector

logger = logging.getLogger(__name__)

# Lower end of the bracket used by the numerical inverses
TINY = 1e-300
MAX_INVERSE_ITERS = 200
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Reparameterization:
    kind: DivergenceKind
    mode: MetricMode
    mu: ReferenceMeasure

    def __post_init__(self):
        if self.mode.is_shifted and self.mode.alpha.shape != self.mu.values.shape:
            raise DomainError("alpha and mu must have the same dimension")

    @property
    def n(self) -> int:
        return self.mu.n

    @property
    def alpha(self) -> np.ndarray:
        return self.mode.alpha if self.mode.is_shifted else np.zeros(self.n)

    @property
    def has_closed_form_inverse(self) -> bool:
        return not self.mode.is_shifted or self.kind is DivergenceKind.REVERSE_KL

    def _phi_raw(self, p: np.ndarray) -> np.ndarray:
        mu = self.mu.values
        if self.kind is DivergenceKind.KL:
            g = np.log(p)
        elif self.kind is DivergenceKind.REVERSE_KL:
            g = -mu / p
        else:
            g = -np.sqrt(mu / p)
        if self.mode.is_shifted:
            g = g + self.mode.alpha * p
        return g

    def phi(self, p: VectorLike) -> np.ndarray:
        """g = phi(p) componentwise"""
        arr = as_vector(p)
        if arr.shape != (self.n,):
            raise DomainError(f"expected a vector of length {self.n}, got shape {arr.shape}")
        if not np.all((arr > 0) & (arr < 1)):
            raise DomainError("phi is defined on the open interval (0, 1) only")
        return self._phi_raw(arr)

    def derivative(self, p: VectorLike) -> np.ndarray:
        """phi'(p), the metric diagonal of the scheme"""
        d = divergence_hessian_diagonal(self.kind, p, self.mu.values)
        if self.mode.is_shifted:
            d = d + self.mode.alpha
        return d

    def sup_g(self) -> np.ndarray:
        """phi_i(1), the supremum of the image of (0, 1)"""
        mu = self.mu.values
        if self.kind is DivergenceKind.KL:
            sup = np.zeros(self.n)
        elif self.kind is DivergenceKind.REVERSE_KL:
            sup = -mu
        else:
            sup = -np.sqrt(mu)
        if self.mode.is_shifted:
            sup = sup + self.mode.alpha
        return sup

    def phi_inv(self, g: VectorLike) -> np.ndarray:
        """Componentwise preimage of g; the result is not normalized"""
        arr = as_vector(g)
        if arr.shape != (self.n,):
            raise DomainError(f"expected a vector of length {self.n}, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("phi_inv requires finite g")
        sup = self.sup_g()
        if np.any(arr >= sup):
            bad = int(np.argmax(arr - sup))
            raise DomainError(f"g[{bad}] = {arr[bad]!r} is not below its supremum {sup[bad]!r}")
        return self.inverse(arr)

    def inverse(self, g: np.ndarray) -> np.ndarray:
        """phi^-1 on the closed range up to sup_g, where it equals 1.

        No domain checks; values above the supremum are treated as the
        supremum itself.
        """
        g = np.minimum(np.asarray(g, dtype=float), self.sup_g())
        mu = self.mu.values
        if not self.mode.is_shifted:
            if self.kind is DivergenceKind.KL:
                return np.exp(g)
            if self.kind is DivergenceKind.REVERSE_KL:
                return -mu / g
            return mu / g ** 2
        if self.kind is DivergenceKind.REVERSE_KL:
            alpha = self.mode.alpha
            root = np.sqrt(g ** 2 + 4.0 * alpha * mu)
            # Two algebraically equal roots; pick the one without cancellation
            with np.errstate(divide="ignore", invalid="ignore"):
                negative = 2.0 * mu / (root - g)
                positive = (g + root) / (2.0 * alpha)
            return np.where(g < 0, negative, positive)
        return self._solve_monotone(g)

    def _initial_guess(self, g: np.ndarray) -> np.ndarray:
        # Both guesses lie above the root since alpha * p > 0
        with np.errstate(over="ignore", divide="ignore"):
            if self.kind is DivergenceKind.KL:
                guess = np.exp(g)
            else:
                guess = np.where(g < 0, self.mu.values / np.where(g < 0, g, -1.0) ** 2, 1.0)
        return np.clip(guess, TINY, 1.0)

    def _solve_monotone(self, g: np.ndarray) -> np.ndarray:
        """Safeguarded Newton on phi(p) = g over the bracket (TINY, 1]"""
        lo = np.full(g.shape, TINY)
        hi = np.ones(g.shape)
        x = self._initial_guess(g)
        done = np.zeros(g.shape, dtype=bool)

        for iteration in range(1, MAX_INVERSE_ITERS + 1):
            f = self._phi_raw(x) - g
            done |= f == 0
            lo = np.where(f < 0, x, lo)
            hi = np.where(f > 0, x, hi)

            newton = x - f / self.derivative(x)
            inside = (newton > lo) & (newton < hi)
            # Bisect geometrically so tiny roots converge in relative terms
            x_new = np.where(inside, newton, np.sqrt(lo * hi))

            done |= np.abs(x_new - x) <= 4.0 * _EPS * x
            done |= hi - lo <= 4.0 * _EPS * hi
            x = np.where(done, x, x_new)
            if done.all():
                break
        else:
            raise SolverError(f"numerical phi inverse did not converge in {MAX_INVERSE_ITERS} iterations "
                              f"({int((~done).sum())} components left)")

        logger.debug(f"phi inverse converged in {iteration} iterations, "
                     f"max |phi(p) - g| = {np.max(np.abs(self._phi_raw(x) - g)):.3e}")
        return x


def make_reparameterization(spec: ProblemSpec) -> Reparameterization:
    """Reparameterization matching a problem's divergence and metric mode"""
    return Reparameterization(spec.kind, spec.mode, spec.mu)
