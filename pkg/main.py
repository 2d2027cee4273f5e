#!/usr/bin/env python3
import logging
import sys
from pathlib import Path

import click

from config import get_config
from descent import EnergyTrace
from errors import ConfigError, SolverError
from experiments import (EXIT_CONFIG, EXIT_IO, EXIT_SOLVER, emit_svg_plot, execute, list_presets,
                         load_config, load_preset, summarize_outputs)

logger = logging.getLogger(__name__)


def setup_logging(log_level: str):
    """Setup logging configuration"""
    level = getattr(logging, log_level.upper(), None)
    if not isinstance(level, int):
        raise click.BadParameter(f"unknown log level {log_level!r}", param_hint="--log-level")
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )


def _run_config(ctx, experiment, plots: bool):
    """Execute one experiment and report the outcome"""
    config = ctx.obj['config']

    click.echo(f"🚀 Running {experiment.name}: {experiment.divergence.value} {experiment.metric_mode.value}, "
               f"n={experiment.n}, {experiment.iterations} iterations")
    try:
        outcome = execute(experiment, progress=config.progress,
                          reference_extension=config.reference_extension, plots=plots)
    except ConfigError as e:
        click.echo(f"❌ Invalid configuration: {e}")
        ctx.exit(EXIT_CONFIG)
    except SolverError as e:
        logger.error(f"Experiment {experiment.name} failed: {e}")
        click.echo(f"❌ Solver failed: {e}")
        if e.state is not None:
            click.echo(f"   Last good iterate: k={e.state.k}, c={e.state.c!r}")
        ctx.exit(EXIT_SOLVER)
    except OSError as e:
        click.echo(f"❌ Could not write outputs: {e}")
        ctx.exit(EXIT_IO)

    click.echo(f"✅ {experiment.name} finished after {outcome.state.k} iterations")
    click.echo(f"   - Final energy: {outcome.trace.energies[-1]:.17g}")
    click.echo(f"   - Final error: {outcome.final_error:.3e}")
    click.echo(f"   - Stationarity residual: {outcome.stationarity_residual:.3e}")
    click.echo("📁 Outputs:")
    for path in outcome.paths.values():
        click.echo(f"   - {path}")


@click.group()
@click.option('--log-level', default=None, help='Logging level (DEBUG, INFO, WARNING, ERROR)')
@click.pass_context
def cli(ctx, log_level):
    """freemin - mirror descent for interacting free energies on the probability simplex"""
    ctx.ensure_object(dict)

    try:
        config = get_config()
    except ValueError as e:
        click.echo(f"Error loading configuration: {e}")
        click.echo("Please check your .env file and the FREEMIN_* environment variables.")
        ctx.exit(EXIT_CONFIG)

    setup_logging(log_level or config.log_level)
    ctx.obj['config'] = config


@cli.command()
@click.argument('config_path', type=click.Path(exists=True, dir_okay=False))
@click.option('--out', 'output_dir', type=click.Path(file_okay=False), help='Override the output directory')
@click.option('--plots', is_flag=True, help='Also write energy, error and density SVG plots')
@click.pass_context
def run(ctx, config_path, output_dir, plots):
    """Run the experiment described by a config file"""
    try:
        experiment = load_config(config_path)
    except ConfigError as e:
        click.echo(f"❌ {config_path}: {e}")
        ctx.exit(EXIT_CONFIG)
    except OSError as e:
        click.echo(f"❌ Could not read {config_path}: {e}")
        ctx.exit(EXIT_IO)

    if output_dir:
        experiment = experiment.model_copy(update={'output_dir': Path(output_dir)})
    _run_config(ctx, experiment, plots)


@cli.command()
@click.argument('name')
@click.option('--out', 'output_dir', type=click.Path(file_okay=False), help='Output directory (default: FREEMIN_OUTPUT_DIR)')
@click.option('--plots', is_flag=True, help='Also write energy, error and density SVG plots')
@click.pass_context
def preset(ctx, name, output_dir, plots):
    """Run one of the shipped preset experiments"""
    config = ctx.obj['config']
    try:
        experiment = load_preset(name, config.preset_dir)
    except ConfigError as e:
        click.echo(f"❌ {e}")
        ctx.exit(EXIT_CONFIG)

    experiment = experiment.model_copy(update={'output_dir': Path(output_dir or config.output_dir)})
    _run_config(ctx, experiment, plots)


@cli.command()
@click.pass_context
def presets(ctx):
    """List the shipped preset experiments"""
    config = ctx.obj['config']
    found = list_presets(config.preset_dir)
    if not found:
        click.echo(f"No presets found in {config.preset_dir}")
        return
    for name, description in found:
        click.echo(f"{name:<10} {description}")


@cli.command()
@click.argument('trace_path', type=click.Path(exists=True, dir_okay=False))
@click.option('--kind', type=click.Choice(['energy', 'error']), default='error', help='Quantity to plot')
@click.option('--out', 'out_path', required=True, type=click.Path(dir_okay=False), help='SVG file to write')
@click.pass_context
def plot(ctx, trace_path, kind, out_path):
    """Plot a trace CSV as an SVG line chart"""
    try:
        trace = EnergyTrace.from_csv(trace_path)
    except (ValueError, OSError) as e:
        click.echo(f"❌ Not a trace file: {e}")
        ctx.exit(EXIT_IO)

    try:
        path = emit_svg_plot(trace, kind, out_path)
    except OSError as e:
        click.echo(f"❌ Could not write {out_path}: {e}")
        ctx.exit(EXIT_IO)
    click.echo(f"✅ Wrote {kind} plot of {len(trace)} iterations to {path}")


@cli.command()
@click.option('--out', 'output_dir', type=click.Path(file_okay=False), help='Output directory to inspect')
@click.pass_context
def status(ctx, output_dir):
    """Show the experiments found in an output directory"""
    output_dir = Path(output_dir or ctx.obj['config'].output_dir)

    if not output_dir.exists():
        click.echo("No experiment outputs found.")
        return

    summaries = summarize_outputs(output_dir)
    if not summaries:
        click.echo(f"No experiment outputs found in {output_dir}")
        return

    click.echo(f"📊 Experiments in {output_dir} ({len(summaries)}):")
    click.echo("=" * 72)
    for meta in summaries:
        name = meta.get('name', '?')
        scheme = f"{meta.get('divergence', '?')} {meta.get('metric_mode', '?')}"
        if 'final_error' not in meta:
            click.echo(f"   ⚠️  {name:<12} {scheme:<20} (incomplete metadata)")
            continue
        click.echo(f"   ✅ {name:<12} {scheme:<20} iters {meta.get('iterations_run', '?'):>4}  "
                   f"error {float(meta['final_error']):.2e}  "
                   f"residual {float(meta.get('stationarity_residual', 'nan')):.2e}")


if __name__ == '__main__':
    sys.exit(cli())
