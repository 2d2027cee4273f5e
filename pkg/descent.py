"""Explicit-Euler mirror descent in g-space and the classical multiplicative-weights baseline"""
import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Tuple, Union

import numpy as np
from tqdm import tqdm

from divergences import ProblemSpec, effective_potential, free_energy, gradient
from errors import DomainError, SolverError
from grids import Density, VectorLike, as_vector
from normalize import normalize_state
from reparam import Reparameterization, make_reparameterization

logger = logging.getLogger(__name__)

DEFAULT_REFERENCE_EXTENSION = 50
# Tolerated negative energy error (the reference is the minimum of the run)
ERROR_FLOOR = -1e-12


@dataclass(frozen=True)
class IterateState:
    k: int
    g: np.ndarray
    p: Density
    c: float = 0.0

    def __post_init__(self):
        g = np.array(self.g, dtype=float)
        g.setflags(write=False)
        object.__setattr__(self, "g", g)


@dataclass
class EnergyTrace:
    """Free energy per recorded iteration and its error against F_ref"""
    energies: np.ndarray
    reference_energy: float
    errors: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        self.energies = np.asarray(self.energies, dtype=float)
        if self.errors is None:
            self.errors = self.energies - self.reference_energy
        else:
            self.errors = np.asarray(self.errors, dtype=float)
        if self.errors.shape != self.energies.shape:
            raise ValueError("energies and errors must have the same length")
        if self.errors.size and self.errors.min() < ERROR_FLOOR:
            raise ValueError(f"energy error {self.errors.min()!r} is below the reference floor")

    def __len__(self) -> int:
        return int(self.energies.size)

    def to_csv(self, path: Union[str, Path]) -> Path:
        """Write `iter,energy,error` rows with 17 significant digits"""
        path = Path(path)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["iter", "energy", "error"])
            for k, (energy, error) in enumerate(zip(self.energies, self.errors)):
                writer.writerow([k, f"{energy:.17g}", f"{error:.17g}"])
        return path

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "EnergyTrace":
        """Read a trace written by to_csv"""
        energies, errors = [], []
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames != ["iter", "energy", "error"]:
                raise ValueError(f"{path} is not an energy trace (header {reader.fieldnames})")
            for row in reader:
                energies.append(float(row["energy"]))
                errors.append(float(row["error"]))
        if not energies:
            raise ValueError(f"{path} contains no trace rows")
        return cls(np.array(energies), energies[0] - errors[0], np.array(errors))


def initial_state(spec: ProblemSpec, p0: Density, r: Optional[Reparameterization] = None) -> IterateState:
    """g^0 = phi(p^0) at k = 0"""
    r = r or make_reparameterization(spec)
    if p0.n != spec.n:
        raise DomainError(f"initial density has {p0.n} entries, problem has {spec.n}")
    return IterateState(0, r.phi(p0), p0, 0.0)


def drift(spec: ProblemSpec, state: IterateState) -> np.ndarray:
    """g + V + (W - alpha) p, without the constant c"""
    p = state.p.values
    interaction = spec.W.apply(p)
    if spec.mode.is_shifted:
        interaction = interaction - spec.mode.alpha * p
    return state.g + effective_potential(spec) + interaction


def step(spec: ProblemSpec, state: IterateState, r: Optional[Reparameterization] = None) -> IterateState:
    """One explicit Euler step in g followed by normalization"""
    r = r or make_reparameterization(spec)
    g_tilde = state.g - spec.dt * drift(spec, state)
    g_new, p_new, c = normalize_state(r, g_tilde)
    return IterateState(state.k + 1, g_new, p_new, c)


def _energy(spec: ProblemSpec, state: IterateState) -> float:
    try:
        return free_energy(spec, state.p)
    except DomainError as e:
        raise SolverError(f"free energy failed at iteration {state.k}: {e}", state) from e


def _advance(spec: ProblemSpec, state: IterateState, r: Reparameterization) -> IterateState:
    try:
        return step(spec, state, r)
    except SolverError as e:
        if e.state is None:
            e.state = state
        raise
    except DomainError as e:
        raise SolverError(f"step {state.k + 1} failed: {e}", state) from e


def run(spec: ProblemSpec, p0: Density, max_iters: int, tol: float = 0.0, *,
        reference_extension: int = DEFAULT_REFERENCE_EXTENSION, progress: bool = False,
        desc: str = "descent") -> Tuple[IterateState, EnergyTrace]:
    """Iterate `step` from p0 and record F(p^k) for k = 0, 1, ...

    Stops after `max_iters` steps, or earlier when tol > 0 and the energy
    change falls below tol * max(1, |F|).  The reference energy is the
    minimum over the recorded energies and `reference_extension` further
    steps.
    """
    if max_iters < 1:
        raise ValueError(f"max_iters must be at least 1, got {max_iters}")
    r = make_reparameterization(spec)
    state = initial_state(spec, p0, r)
    energies = [_energy(spec, state)]
    logger.info(f"Starting {desc}: {spec.kind.value} {spec.mode.tag.value}, n={spec.n}, "
                f"dt={spec.dt}, max_iters={max_iters}")

    with tqdm(total=max_iters, desc=desc, disable=not progress) as pbar:
        while state.k < max_iters:
            state = _advance(spec, state, r)
            energy = _energy(spec, state)
            logger.debug(f"iter {state.k}: F = {energy:.17g}, c = {state.c:.17g}")
            pbar.update(1)
            change = abs(energy - energies[-1])
            energies.append(energy)
            if tol > 0 and change <= tol * max(1.0, abs(energy)):
                logger.info(f"Energy change {change:.3e} below tolerance at iteration {state.k}")
                break

    reference = min(energies)
    extended = state
    for _ in range(reference_extension):
        extended = _advance(spec, extended, r)
        reference = min(reference, _energy(spec, extended))

    trace = EnergyTrace(np.array(energies), reference)
    logger.info(f"Finished {desc} after {state.k} iterations: F = {energies[-1]:.17g}, "
                f"error = {trace.errors[-1]:.3e}")
    return state, trace


def baseline_md(energy_gradient: Callable[[Density], VectorLike], p0: Density, eta: float,
                iters: int) -> Density:
    """Classical mirror descent p <- p * exp(-eta * dE/dp) / Z"""
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    p = p0
    for k in range(iters):
        grad = as_vector(energy_gradient(p))
        if not np.all(np.isfinite(grad)):
            raise SolverError(f"energy gradient is not finite at iteration {k}")
        y = -eta * grad
        u = p.values * np.exp(y - y.max())
        p = Density(u / u.sum())
    return p


def stationarity_residual(spec: ProblemSpec, p: VectorLike) -> float:
    """max_i dF/dp_i - min_i dF/dp_i, zero at an interior stationary point"""
    return float(np.ptp(gradient(spec, p)))
