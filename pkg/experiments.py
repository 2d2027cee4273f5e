"""Experiment configs, presets, runs and output files for the freemin CLI"""
import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Annotated, Dict, List, Literal, Tuple, Union

import matplotlib
matplotlib.use("Agg")
from matplotlib.figure import Figure
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from config import DEFAULT_PRESET_DIR
from descent import DEFAULT_REFERENCE_EXTENSION, EnergyTrace, IterateState, run, stationarity_residual
from divergences import (DivergenceKind, MetricMode, MetricTag, ProblemSpec, effective_potential,
                         make_problem)
from errors import ConfigError, DomainError, SolverError
from grids import (Density, Grid, make_power_measure, make_sine_potential, make_uniform_grid,
                   random_density, uniform_measure, write_columns, zero_potential)
from kernels import make_log_kernel, make_tridiagonal_kernel, zero_kernel
from normalize import normalize_state
from reparam import Reparameterization

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4

# Display floor for nonpositive errors on log-scale plots
ERROR_CLAMP = 1e-16

Finite = Annotated[float, Field(allow_inf_nan=False)]
PositiveFinite = Annotated[float, Field(gt=0, allow_inf_nan=False)]
NonNegativeFinite = Annotated[float, Field(ge=0, allow_inf_nan=False)]


class ZeroPotential(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")
    kind: Literal["zero"] = "zero"


class SinePotential(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")
    kind: Literal["sine"] = "sine"
    frequency: Finite
    amplitude: Finite


class UniformMeasure(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")
    kind: Literal["uniform"] = "uniform"


class PowerMeasure(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")
    kind: Literal["power"] = "power"
    exponent: NonNegativeFinite


class ZeroKernel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")
    kind: Literal["zero"] = "zero"


class LogKernel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")
    kind: Literal["log"] = "log"
    scale: Finite
    epsilon: PositiveFinite


class TridiagonalKernel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")
    kind: Literal["tridiagonal"] = "tridiagonal"
    alpha: PositiveFinite


PotentialSpec = Annotated[Union[ZeroPotential, SinePotential], Field(discriminator="kind")]
MeasureSpec = Annotated[Union[UniformMeasure, PowerMeasure], Field(discriminator="kind")]
KernelSpec = Annotated[Union[ZeroKernel, LogKernel, TridiagonalKernel], Field(discriminator="kind")]

# Positional parameter names of the composite `kind(args)` values
COMPOSITE_PARAMS: Dict[str, Dict[str, Tuple[str, ...]]] = {
    "potential": {"zero": (), "sine": ("frequency", "amplitude")},
    "mu": {"uniform": (), "power": ("exponent",)},
    "kernel": {"zero": (), "log": ("scale", "epsilon"), "tridiagonal": ("alpha",)},
}

_DIVERGENCE_ALIASES = {
    "kl": DivergenceKind.KL,
    "reversekl": DivergenceKind.REVERSE_KL,
    "rkl": DivergenceKind.REVERSE_KL,
    "hellinger": DivergenceKind.HELLINGER,
}


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: Annotated[str, Field(pattern=r"^[A-Za-z0-9_.-]+$")]
    divergence: DivergenceKind
    metric_mode: MetricTag
    n: Annotated[int, Field(ge=2)]
    periodic: bool
    potential: PotentialSpec
    mu: MeasureSpec
    kernel: KernelSpec
    dt: PositiveFinite
    iterations: Annotated[int, Field(ge=1)]
    seed: Annotated[int, Field(ge=0)]
    output_dir: Path = Path("./out")

    @field_validator("divergence", mode="before")
    @classmethod
    def _divergence_alias(cls, value):
        if isinstance(value, str):
            return _DIVERGENCE_ALIASES.get(value.strip().lower(), value)
        return value

    @model_validator(mode="after")
    def _consistent(self) -> "ExperimentConfig":
        tridiagonal = isinstance(self.kernel, TridiagonalKernel)
        if self.metric_mode is MetricTag.SHIFTED and not tridiagonal:
            raise ValueError("metric_mode = shifted requires kernel = tridiagonal(alpha)")
        if tridiagonal and not self.periodic:
            raise ValueError("kernel = tridiagonal(alpha) requires periodic = true")
        if tridiagonal and self.n < 3:
            raise ValueError("kernel = tridiagonal(alpha) requires n >= 3")
        return self


REQUIRED_KEYS = tuple(k for k in ExperimentConfig.model_fields if k != "output_dir")
_CALL = re.compile(r"^([A-Za-z_]+)\s*(?:\((.*)\))?$")


def _number(token: str, key: str, line: int) -> float:
    try:
        value = float(Fraction(token.strip()))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{key}: {token.strip()!r} is not a finite number", line)
    return value


def _parse_composite(key: str, text: str, line: int) -> dict:
    match = _CALL.match(text)
    if not match:
        raise ConfigError(f"{key}: cannot parse {text!r}, expected kind or kind(arg, ...)", line)
    kind, args = match.group(1), match.group(2)
    params = COMPOSITE_PARAMS[key]
    if kind not in params:
        raise ConfigError(f"{key}: unknown kind {kind!r} (expected one of {', '.join(params)})", line)
    tokens = args.split(",") if args is not None and args.strip() else []
    names = params[kind]
    if len(tokens) != len(names):
        raise ConfigError(f"{key}: {kind} takes {len(names)} argument(s) ({', '.join(names) or 'none'}), "
                          f"got {len(tokens)}", line)
    return {"kind": kind, **{name: _number(tok, key, line) for name, tok in zip(names, tokens)}}


def _validation_message(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        loc = ".".join(str(x) for x in item["loc"]) or "config"
        parts.append(f"{loc}: {item['msg']}")
    return "; ".join(parts)


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat `key = value` format (`#` starts a comment)"""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in ExperimentConfig.model_fields:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        if not value:
            raise ConfigError(f"{key}: missing value", lineno)
        values[key] = _parse_composite(key, value, lineno) if key in COMPOSITE_PARAMS else value

    missing = [k for k in REQUIRED_KEYS if k not in values]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    try:
        return ExperimentConfig.model_validate(values)
    except ValidationError as e:
        raise ConfigError(_validation_message(e)) from e


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read and parse an experiment file"""
    with open(path) as f:
        return parse_config(f.read())


def _format_composite(spec: BaseModel) -> str:
    data = spec.model_dump()
    kind = data.pop("kind")
    if not data:
        return kind
    return f"{kind}({', '.join(repr(float(v)) for v in data.values())})"


def format_config(config: ExperimentConfig) -> str:
    """Serialize a config back to the key = value format"""
    lines = [
        f"name = {config.name}",
        f"divergence = {config.divergence.value}",
        f"metric_mode = {config.metric_mode.value}",
        f"n = {config.n}",
        f"periodic = {'true' if config.periodic else 'false'}",
        f"potential = {_format_composite(config.potential)}",
        f"mu = {_format_composite(config.mu)}",
        f"kernel = {_format_composite(config.kernel)}",
        f"dt = {config.dt!r}",
        f"iterations = {config.iterations}",
        f"seed = {config.seed}",
        f"output_dir = {config.output_dir}",
    ]
    return "\n".join(lines) + "\n"


def list_presets(preset_dir: Union[str, Path] = DEFAULT_PRESET_DIR) -> List[Tuple[str, str]]:
    """(name, description) for every preset file; the description is its first comment line"""
    presets = []
    for path in sorted(Path(preset_dir).glob("*.cfg")):
        description = ""
        with open(path) as f:
            for line in f:
                if line.startswith("#"):
                    description = line.lstrip("#").strip()
                    break
        presets.append((path.stem, description))
    return presets


def load_preset(name: str, preset_dir: Union[str, Path] = DEFAULT_PRESET_DIR) -> ExperimentConfig:
    """Load a shipped preset by name"""
    path = Path(preset_dir) / f"{name}.cfg"
    if not path.exists():
        known = ", ".join(n for n, _ in list_presets(preset_dir))
        raise ConfigError(f"unknown preset {name!r} (available: {known})")
    return load_config(path)


def build_problem(config: ExperimentConfig) -> ProblemSpec:
    """Build the ProblemSpec described by a config"""
    try:
        return _build_problem(config)
    except DomainError as e:
        raise ConfigError(str(e)) from e


def _build_problem(config: ExperimentConfig) -> ProblemSpec:
    grid = make_uniform_grid(config.n, config.periodic)

    if isinstance(config.mu, PowerMeasure):
        mu = make_power_measure(grid, config.mu.exponent)
    else:
        mu = uniform_measure(grid)

    if isinstance(config.potential, SinePotential):
        V = make_sine_potential(grid, config.potential.frequency, config.potential.amplitude)
    else:
        V = zero_potential(grid)

    if isinstance(config.kernel, LogKernel):
        W = make_log_kernel(grid, config.kernel.scale, config.kernel.epsilon)
    elif isinstance(config.kernel, TridiagonalKernel):
        W = make_tridiagonal_kernel(grid, config.kernel.alpha)
    else:
        W = zero_kernel(grid.n)

    return make_problem(config.divergence, grid, mu, V, W,
                        shifted=config.metric_mode is MetricTag.SHIFTED, dt=config.dt)


def reference_density(spec: ProblemSpec) -> Density:
    """Minimizer of F without the interaction term.

    With W = 0 the plain scheme at dt = 1 lands on the minimizer in one step:
    g~ = -V (the absorbed potential for KL), followed by normalization.
    """
    r = Reparameterization(spec.kind, MetricMode.plain(), spec.mu)
    _, p, _ = normalize_state(r, -effective_potential(spec))
    return p


@dataclass
class ExperimentOutcome:
    config: ExperimentConfig
    spec: ProblemSpec
    state: IterateState
    trace: EnergyTrace
    stationarity_residual: float
    paths: Dict[str, Path] = field(default_factory=dict)

    @property
    def final_error(self) -> float:
        return float(self.trace.errors[-1])


def _save_svg(fig: Figure, path: Union[str, Path]) -> Path:
    path = Path(path)
    # Fixed hash salt and no date keep the SVG byte-identical across runs
    with matplotlib.rc_context({"svg.hashsalt": "freemin"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    return path


def emit_svg_plot(trace: EnergyTrace, kind: Literal["energy", "error"], path: Union[str, Path]) -> Path:
    """Line chart of the energy, or of the energy error on a log axis"""
    if len(trace) == 0:
        raise ValueError("cannot plot an empty trace")
    if kind not in ("energy", "error"):
        raise ValueError(f"plot kind must be 'energy' or 'error', got {kind!r}")

    iterations = np.arange(len(trace))
    fig = Figure(figsize=(6, 4), tight_layout=True)
    ax = fig.add_subplot()
    if kind == "error":
        values = np.where(trace.errors > 0, trace.errors, ERROR_CLAMP)
        ax.set_yscale("log")
        ax.set_ylabel("free energy error")
    else:
        values = trace.energies
        ax.set_ylabel("free energy")
    ax.plot(iterations, values, "-o", markersize=2)
    ax.set_xlabel("iteration")
    ax.grid(True, alpha=0.3)
    return _save_svg(fig, path)


def emit_density_plot(grid: Grid, p: Density, reference: Density, path: Union[str, Path]) -> Path:
    """Final density (solid) against the interaction-free minimizer (dashed)"""
    fig = Figure(figsize=(6, 4), tight_layout=True)
    ax = fig.add_subplot()
    ax.plot(grid.points, p.values, "-", label="p")
    ax.plot(grid.points, reference.values, "--", label="minimizer with W = 0")
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.legend()
    return _save_svg(fig, path)


def _write_meta(path: Path, config: ExperimentConfig, state: IterateState, trace: EnergyTrace,
                residual: float) -> Path:
    results = [
        "# results",
        f"iterations_run = {state.k}",
        f"final_energy = {trace.energies[-1]:.17g}",
        f"reference_energy = {trace.reference_energy:.17g}",
        f"final_error = {trace.errors[-1]:.17g}",
        f"stationarity_residual = {residual:.17g}",
    ]
    with open(path, "w", newline="\n") as f:
        f.write("# configuration\n")
        f.write(format_config(config))
        f.write("\n".join(results) + "\n")
    return path


def execute(config: ExperimentConfig, *, progress: bool = False,
            reference_extension: int = DEFAULT_REFERENCE_EXTENSION, plots: bool = False) -> ExperimentOutcome:
    """Build the problem, run the descent from the seeded start and write all outputs"""
    spec = build_problem(config)
    p0 = random_density(config.n, config.seed)
    state, trace = run(spec, p0, config.iterations, reference_extension=reference_extension,
                       progress=progress, desc=config.name)
    residual = stationarity_residual(spec, state.p)
    reference = reference_density(spec)

    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = config.name
    paths = {
        "trace": trace.to_csv(out / f"{name}_trace.csv"),
        "final": write_columns(out / f"{name}_final.txt", spec.grid,
                               {"p": state.p, "mu": spec.mu, "reference": reference}),
        "meta": _write_meta(out / f"{name}_meta.txt", config, state, trace, residual),
    }
    if plots:
        paths["energy_plot"] = emit_svg_plot(trace, "energy", out / f"{name}_energy.svg")
        paths["error_plot"] = emit_svg_plot(trace, "error", out / f"{name}_error.svg")
        paths["density_plot"] = emit_density_plot(spec.grid, state.p, reference, out / f"{name}_density.svg")

    logger.info(f"Experiment {name}: final error {trace.errors[-1]:.3e}, "
                f"stationarity residual {residual:.3e}, outputs in {out}")
    return ExperimentOutcome(config, spec, state, trace, residual, paths)


def exit_code_for(error: BaseException) -> int:
    """Map a failure to the CLI exit code"""
    if isinstance(error, ConfigError):
        return EXIT_CONFIG
    if isinstance(error, SolverError):
        return EXIT_SOLVER
    if isinstance(error, OSError):
        return EXIT_IO
    raise error


def run_experiment(config: ExperimentConfig, **kwargs) -> int:
    """Run `execute` and translate failures into exit codes"""
    try:
        execute(config, **kwargs)
    except (ConfigError, SolverError, OSError) as e:
        logger.error(f"Experiment {config.name} failed: {e}")
        return exit_code_for(e)
    return EXIT_OK


def read_meta(path: Union[str, Path]) -> Dict[str, str]:
    """Parse the key = value lines of a meta file"""
    values = {}
    with open(path) as f:
        for line in f:
            line = line.split("#", 1)[0].strip()
            if "=" in line:
                key, value = (part.strip() for part in line.split("=", 1))
                values[key] = value
    return values


def summarize_outputs(output_dir: Union[str, Path]) -> List[Dict[str, str]]:
    """One summary per `<name>_meta.txt` found in the output directory"""
    summaries = []
    for path in sorted(Path(output_dir).glob("*_meta.txt")):
        try:
            meta = read_meta(path)
        except OSError as e:
            logger.warning(f"Could not read {path}: {e}")
            continue
        meta.setdefault("name", path.name[: -len("_meta.txt")])
        meta["meta_path"] = str(path)
        summaries.append(meta)
    return summaries
