"""Free energies F(p) = D(p||mu) + <V, p> + 1/2 <p, Wp> for the three divergence families.

Energies and gradients are evaluated on any strictly positive vector, not only
on the simplex, so that coordinate finite differences are meaningful.  On the
simplex every form below agrees with the textbook divergence.
"""
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from errors import DomainError
from grids import Grid, Potential, ReferenceMeasure, VectorLike, as_vector
from kernels import InteractionKernel

logger = logging.getLogger(__name__)


class DivergenceKind(str, Enum):
    KL = "KL"
    REVERSE_KL = "reverseKL"
    HELLINGER = "Hellinger"


class MetricTag(str, Enum):
    PLAIN = "plain"
    SHIFTED = "shifted"


@dataclass(frozen=True)
class MetricMode:
    """Plain metric or the metric shifted by the kernel diagonal alpha"""
    tag: MetricTag = MetricTag.PLAIN
    alpha: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.tag is MetricTag.PLAIN:
            if self.alpha is not None:
                raise DomainError("plain metric mode carries no alpha")
            return
        if self.alpha is None:
            raise DomainError("shifted metric mode requires alpha")
        alpha = np.array(self.alpha, dtype=float)
        if not np.all(np.isfinite(alpha)) or not np.all(alpha > 0):
            raise DomainError("shifted metric mode requires alpha_i > 0 for all i")
        alpha.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def plain(cls) -> "MetricMode":
        return cls(MetricTag.PLAIN)

    @classmethod
    def shifted(cls, alpha) -> "MetricMode":
        return cls(MetricTag.SHIFTED, alpha)

    @property
    def is_shifted(self) -> bool:
        return self.tag is MetricTag.SHIFTED


@dataclass(frozen=True)
class ProblemSpec:
    """Ingredients of F together with the metric choice and step size"""
    kind: DivergenceKind
    mu: ReferenceMeasure
    V: Potential
    W: InteractionKernel
    mode: MetricMode
    dt: float
    grid: Grid
    # V already holds V - ln(mu) and F is the reduced KL energy
    kl_absorbed: bool = field(default=False)

    def __post_init__(self):
        n = self.grid.n
        for name, size in (("mu", self.mu.n), ("V", self.V.n), ("W", self.W.n)):
            if size != n:
                raise DomainError(f"{name} has dimension {size}, grid has {n}")
        if not self.dt > 0:
            raise DomainError(f"step size dt must be positive, got {self.dt}")
        if self.mode.is_shifted:
            if not self.W.claimed_positive_definite:
                raise DomainError("shifted metric mode requires a kernel claimed positive-definite")
            if not np.array_equal(self.mode.alpha, self.W.diagonal()):
                raise DomainError("shifted metric alpha must equal diag(W)")
        if self.kl_absorbed and self.kind is not DivergenceKind.KL:
            raise DomainError("reference absorption only applies to the KL divergence")

    @property
    def n(self) -> int:
        return self.grid.n


def make_problem(kind: DivergenceKind, grid: Grid, mu: ReferenceMeasure, V: Potential,
                 W: InteractionKernel, shifted: bool = False, dt: float = 1.0) -> ProblemSpec:
    """Assemble a ProblemSpec; shifted takes alpha from the kernel diagonal"""
    mode = MetricMode.shifted(W.diagonal()) if shifted else MetricMode.plain()
    return ProblemSpec(DivergenceKind(kind), mu, V, W, mode, float(dt), grid)


def absorb_reference(spec: ProblemSpec) -> ProblemSpec:
    """Fold -sum p ln(mu) into the potential: V~ = V - ln(mu)"""
    if spec.kind is not DivergenceKind.KL:
        raise DomainError("reference absorption only applies to the KL divergence")
    if spec.kl_absorbed:
        return spec
    return replace(spec, V=Potential(effective_potential(spec)), kl_absorbed=True)


def effective_potential(spec: ProblemSpec) -> np.ndarray:
    """Potential seen by the descent drift"""
    if spec.kind is DivergenceKind.KL and not spec.kl_absorbed:
        return spec.V.values - np.log(spec.mu.values)
    return spec.V.values.copy()


def _positive(p: VectorLike, n: Optional[int] = None) -> np.ndarray:
    arr = as_vector(p)
    if n is not None and arr.shape != (n,):
        raise DomainError(f"expected a vector of length {n}, got shape {arr.shape}")
    if not np.all(arr > 0):
        raise DomainError("density must be strictly positive")
    return arr


def divergence_value(kind: DivergenceKind, p: VectorLike, mu: VectorLike) -> float:
    """D(p||mu) in its full form (Hellinger keeps its additive constant)"""
    arr = _positive(p)
    m = as_vector(mu)
    kind = DivergenceKind(kind)
    if kind is DivergenceKind.KL:
        value = np.sum(arr * np.log(arr / m))
    elif kind is DivergenceKind.REVERSE_KL:
        value = np.sum(m * np.log(m / arr))
    else:
        value = np.sum((np.sqrt(arr) - np.sqrt(m)) ** 2)
    if not np.isfinite(value):
        raise DomainError(f"{kind.value} divergence is not finite; the density is invalid")
    return float(value)


def _divergence_extended(spec: ProblemSpec, arr: np.ndarray) -> float:
    mu = spec.mu.values
    if spec.kind is DivergenceKind.KL:
        if spec.kl_absorbed:
            return float(np.sum(arr * np.log(arr)))
        return float(np.sum(arr * np.log(arr / mu)))
    if spec.kind is DivergenceKind.REVERSE_KL:
        return float(np.sum(mu * np.log(mu / arr)))
    # Equals sum (sqrt(p) - sqrt(mu))^2 whenever p and mu both sum to 1
    return float(2.0 - 2.0 * np.sum(np.sqrt(mu * arr)))


def free_energy(spec: ProblemSpec, p: VectorLike) -> float:
    """F(p) = D(p || mu) + <V, p> + 1/2 <p, Wp>"""
    arr = _positive(p, spec.n)
    value = _divergence_extended(spec, arr) + float(spec.V.values @ arr) + spec.W.energy_quadratic(arr)
    if not np.isfinite(value):
        raise DomainError("free energy is not finite")
    return value


def gradient(spec: ProblemSpec, p: VectorLike) -> np.ndarray:
    """Exact variational derivative dF/dp (the KL form keeps its +1)"""
    arr = _positive(p, spec.n)
    mu = spec.mu.values
    if spec.kind is DivergenceKind.KL:
        log_term = np.log(arr) if spec.kl_absorbed else np.log(arr / mu)
        d = log_term + 1.0
    elif spec.kind is DivergenceKind.REVERSE_KL:
        d = -mu / arr
    else:
        d = -np.sqrt(mu / arr)
    grad = d + spec.V.values + spec.W.apply(arr)
    if not np.all(np.isfinite(grad)):
        raise DomainError("gradient is not finite; the density touches the simplex boundary")
    return grad


def divergence_hessian_diagonal(kind: DivergenceKind, p: VectorLike, mu: VectorLike) -> np.ndarray:
    """Diagonal Hessian of the divergence term alone"""
    arr = _positive(p)
    m = as_vector(mu)
    kind = DivergenceKind(kind)
    if kind is DivergenceKind.KL:
        return 1.0 / arr
    if kind is DivergenceKind.REVERSE_KL:
        return m / arr ** 2
    return np.sqrt(m) / (2.0 * arr ** 1.5)


def metric_diagonal(spec: ProblemSpec, p: VectorLike) -> np.ndarray:
    """Diagonal of the scheme metric, plus alpha when shifted"""
    metric = divergence_hessian_diagonal(spec.kind, _positive(p, spec.n), spec.mu.values)
    if spec.mode.is_shifted:
        metric = metric + spec.mode.alpha
    return metric
