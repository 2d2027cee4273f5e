"""Symmetric interaction kernels W"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from errors import DomainError
from grids import Grid, VectorLike, as_vector

logger = logging.getLogger(__name__)


class KernelKind(str, Enum):
    DENSE = "dense"
    TRIDIAGONAL_PERIODIC = "tridiagonal-periodic"
    ZERO = "zero"


@dataclass(frozen=True)
class InteractionKernel:
    """Symmetric kernel W in one of three storage forms.

    Dense kernels keep the full matrix; the tridiagonal-periodic kernel keeps
    only its diagonal value `a` and off-diagonal value `b` with wrap-around
    coupling between the first and last index; the zero kernel stores nothing.
    `claimed_positive_definite` is supplied by the constructor and is not
    verified.
    """
    kind: KernelKind
    n: int
    matrix: Optional[np.ndarray] = None
    a: float = 0.0
    b: float = 0.0
    claimed_positive_definite: bool = False

    def _check(self, v: VectorLike) -> np.ndarray:
        arr = as_vector(v)
        if arr.shape != (self.n,):
            raise DomainError(f"kernel of dimension {self.n} applied to vector of shape {arr.shape}")
        return arr

    def apply(self, v: VectorLike) -> np.ndarray:
        """Matrix-vector product Wv"""
        arr = self._check(v)
        if self.kind is KernelKind.ZERO:
            return np.zeros(self.n)
        if self.kind is KernelKind.TRIDIAGONAL_PERIODIC:
            return self.a * arr + self.b * (np.roll(arr, 1) + np.roll(arr, -1))
        return self.matrix @ arr

    def diagonal(self) -> np.ndarray:
        """alpha = diag(W)"""
        if self.kind is KernelKind.ZERO:
            return np.zeros(self.n)
        if self.kind is KernelKind.TRIDIAGONAL_PERIODIC:
            return np.full(self.n, self.a)
        return np.diag(self.matrix).copy()

    def energy_quadratic(self, p: VectorLike) -> float:
        """1/2 <p, Wp>"""
        arr = self._check(p)
        return 0.5 * float(arr @ self.apply(arr))

    def to_dense(self) -> np.ndarray:
        """Materialize W as an n x n array"""
        if self.kind is KernelKind.DENSE:
            return self.matrix.copy()
        if self.kind is KernelKind.ZERO:
            return np.zeros((self.n, self.n))
        w = self.a * np.eye(self.n)
        idx = np.arange(self.n)
        w[idx, (idx + 1) % self.n] = self.b
        w[idx, (idx - 1) % self.n] = self.b
        return w


def dense_kernel(matrix, claimed_positive_definite: bool = False) -> InteractionKernel:
    """Wrap an explicit symmetric matrix"""
    m = np.array(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"kernel matrix must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError("kernel matrix has non-finite entries")
    if not np.array_equal(m, m.T):
        raise DomainError("kernel matrix must be exactly symmetric")
    m.setflags(write=False)
    return InteractionKernel(KernelKind.DENSE, m.shape[0], matrix=m,
                             claimed_positive_definite=claimed_positive_definite)


def zero_kernel(n: int) -> InteractionKernel:
    """Kernel W = 0 (no interaction)"""
    return InteractionKernel(KernelKind.ZERO, n)


def make_log_kernel(grid: Grid, scale: float, epsilon: float) -> InteractionKernel:
    """Keller-Segel kernel W_ij = scale * ln(|x_i - x_j| + epsilon)"""
    if not epsilon > 0:
        raise DomainError(f"log-kernel epsilon must be positive, got {epsilon}")
    x = grid.points
    matrix = scale * np.log(np.abs(x[:, None] - x[None, :]) + epsilon)
    logger.debug(f"Built dense log kernel n={grid.n} scale={scale} epsilon={epsilon}")
    return dense_kernel(matrix, claimed_positive_definite=False)


def make_tridiagonal_kernel(grid: Grid, alpha: float) -> InteractionKernel:
    """Circulant kernel with alpha on the diagonal and alpha/2 on the wrapped off-diagonals"""
    if not alpha > 0:
        raise DomainError(f"tridiagonal kernel alpha must be positive, got {alpha}")
    if not grid.periodic:
        raise DomainError("the tridiagonal kernel wraps around and needs a periodic grid")
    if grid.n < 3:
        raise DomainError(f"the tridiagonal kernel needs n >= 3, got {grid.n}")
    return InteractionKernel(KernelKind.TRIDIAGONAL_PERIODIC, grid.n, a=float(alpha), b=alpha / 2.0,
                             claimed_positive_definite=True)
