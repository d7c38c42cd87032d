"""
The train / evaluate / tables / benchmark pipeline behind `manage.py pinn`.

Files in the output directory are the record of a run. The database row
(TrainingRun) is a convenience for the admin: failing to write it is logged
and never stops a command.
"""
import json
import logging
import uuid
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from django.core.exceptions import ValidationError
from django.core.serializers.json import DjangoJSONEncoder
from django.db import DatabaseError
from django.utils import timezone

import pinnlab
from core.exceptions import AcceptanceError, ExportError, PinnError, UsageError
from evaluation.baselines import published_timing
from evaluation.benchmark import timing_benchmark
from evaluation.export import export_csv, export_norms_csv
from evaluation.fields import gradient_field
from evaluation.metrics import absolute_error_grid
from evaluation.tables import published_comparison
from networks.checkpoint import load_checkpoint, save_checkpoint
from networks.mlp import init_glorot
from sampling.points import dump_csv, make_grid, sample_uniform
from training.trainer import train, write_history_csv

from .config import config_sections, dump_config
from .models import TrainingRun

logger = logging.getLogger(__name__)

MANIFEST = 'manifest.json'
CHECKPOINT = 'checkpoint.bin'
HISTORY = 'history.csv'
SAMPLES = 'samples.csv'
ERRORS = 'errors.csv'
NORMS = 'norms.csv'
GRADIENTS = 'gradients.csv'
SURFACE = 'surface.csv'
TIMING = 'timing.csv'
TABLES_TEXT = 'tables.txt'
TABLES_CSV = 'tables.csv'


def write_manifest(directory, payload):
    path = Path(directory) / MANIFEST
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, cls=DjangoJSONEncoder, indent=2) + '\n')
    except OSError as e:
        logger.error(f"Error writing manifest {path}: {e}")
        raise ExportError(path, e) from e
    return path


def read_manifest(directory):
    """The manifest of a run directory, or None when there is none."""
    path = Path(directory) / MANIFEST
    if not path.exists():
        return None
    try:
        return json.loads(path.read_text())
    except (OSError, ValueError) as e:
        raise UsageError(f"cannot read run manifest {path}: {e}") from e


# Run records

def _start_run(config, net):
    try:
        return TrainingRun.objects.create(
            problem=config.problem.name,
            profile=config.profile,
            seed=config.seed,
            layer_sizes=' '.join(str(size) for size in net.layer_sizes),
            activation=net.activation,
            parameter_count=net.parameter_count,
            iterations=config.training.iterations,
            output_dir=config.output_dir,
            config=config_sections(config),
        )
    except DatabaseError as e:
        logger.error(f"Could not record the training run: {e}")
        return None


def _finish_run(run, final_loss=None, wall_seconds=None, error=None):
    if run is None:
        return
    try:
        if error is None:
            run.mark_done(final_loss, wall_seconds)
        else:
            run.mark_error(error)
    except DatabaseError as e:
        logger.error(f"Could not update training run {run.uuid}: {e}")


def _record_error(run_uuid, max_abs_error):
    try:
        updated = TrainingRun.objects.filter(uuid=run_uuid).update(
            max_abs_error=max_abs_error, modified_date=timezone.now())
    except (DatabaseError, ValidationError) as e:
        logger.error(f"Could not record the evaluation of run {run_uuid}: {e}")
        return
    if not updated:
        logger.warning(f"No training run {run_uuid} in the database")


# Checkpoints

def checkpoint_path(config, checkpoint=None):
    return Path(checkpoint) if checkpoint else config.output_path / CHECKPOINT


def _check_trained_on(manifest, problem, path):
    if manifest is not None and manifest.get('problem') != problem:
        raise UsageError(
            f"checkpoint {path} was trained on {manifest.get('problem')!r}, not {problem!r}")


def _load(config, checkpoint, expect_sizes=True):
    path = checkpoint_path(config, checkpoint)
    manifest = read_manifest(path.parent)
    _check_trained_on(manifest, config.problem.name, path)
    expected = config.network.layer_sizes if expect_sizes else None
    return load_checkpoint(path, expected), manifest


# Commands

@dataclass
class TrainOutcome:
    run_uuid: uuid.UUID
    result: object
    directory: Path
    summary: str


def cmd_train(config):
    """Sample, initialize, train and write checkpoint, history, samples and manifest."""
    pde = config.pde()
    directory = config.output_path
    net = init_glorot(config.network.layer_sizes, config.network.activation, config.seed)
    samples = sample_uniform(pde, config.sampling.n0, config.sampling.nb, config.sampling.nc,
                             config.seed)
    run = _start_run(config, net)
    run_uuid = run.uuid if run is not None else uuid.uuid4()

    try:
        result = train(pde, net, samples, config.training)
        save_checkpoint(result.network, directory / CHECKPOINT)
        write_history_csv(result.history, directory / HISTORY)
        dump_csv(samples, directory / SAMPLES)
        final_loss = result.final.total if result.final is not None else None
        write_manifest(directory, {
            'run_uuid': run_uuid,
            'version': pinnlab.__version__,
            'created': timezone.now(),
            'problem': config.problem.name,
            'profile': config.profile,
            'seed': config.seed,
            'layer_sizes': net.layer_sizes,
            'activation': net.activation,
            'parameter_count': net.parameter_count,
            'iterations': config.training.iterations,
            'final_loss': final_loss,
            'wall_seconds': result.wall_seconds,
            'config': config_sections(config),
            'config_ini': dump_config(config),
        })
    except PinnError as e:
        _finish_run(run, error=str(e))
        raise

    _finish_run(run, final_loss, result.wall_seconds)
    loss = 'n/a' if final_loss is None else f"{final_loss:.3e}"
    summary = (f"{config.problem.name}: trained {net.parameter_count} parameters for "
               f"{config.training.iterations} iterations in {result.wall_seconds:.1f}s, "
               f"final loss {loss}; wrote {directory}")
    logger.info(summary)
    return TrainOutcome(run_uuid, result, directory, summary)


@dataclass
class EvaluationOutcome:
    report: object
    gated_error: float
    summary: str
    surface: object = None


def cmd_evaluate(config, checkpoint=None):
    """Error grid, norms, gradient field and optional error surface; gated on ``max_error``."""
    net, manifest = _load(config, checkpoint)
    pde = config.pde()
    evaluation = config.evaluation
    grid = make_grid(evaluation.h, evaluation.dt, pde)
    report = absolute_error_grid(net, pde, grid)

    directory = config.output_path
    export_csv(report, directory / ERRORS)
    export_norms_csv(report, directory / NORMS)
    export_csv(gradient_field(net, pde, grid), directory / GRADIENTS)
    surface_grid = evaluation.surface_grid(pde)
    surface = None
    if surface_grid is not None:
        surface = absolute_error_grid(net, pde, surface_grid)
        export_csv(surface, directory / SURFACE)

    if evaluation.gate == 'table':
        gated = float(np.max(published_comparison(net, config.problem.name, config.problem.lam).pinn))
        where = 'comparison grid'
    else:
        gated = report.max_abs_error
        where = 'evaluation grid'
    summary = (f"{config.problem.name}: max_abs_error {report.max_abs_error:.3e} over "
               f"{grid.size} points; {where} error {gated:.3e} (limit {evaluation.max_error:.1e})")
    logger.info(summary)

    if manifest is not None and manifest.get('run_uuid'):
        _record_error(manifest['run_uuid'], gated)
    if not gated <= evaluation.max_error:
        raise AcceptanceError(summary)
    return EvaluationOutcome(report, gated, summary, surface)


def cmd_tables(config, checkpoint=None):
    """Comparison table for the configured problem, written as text and CSV."""
    net, manifest = _load(config, checkpoint, expect_sizes=False)
    trained_on = manifest.get('problem') if manifest is not None else None
    table = published_comparison(net, config.problem.name, config.problem.lam, trained_on=trained_on)

    directory = config.output_path
    path = directory / TABLES_TEXT
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(table.render() + '\n')
    except OSError as e:
        logger.error(f"Error writing {path}: {e}")
        raise ExportError(path, e) from e
    export_csv(table, directory / TABLES_CSV)
    return table


@dataclass
class BenchmarkOutcome:
    record: object
    summary: str


def cmd_benchmark(config, checkpoint=None):
    """Point-by-point inference timing with a linear fit; gated on ``min_r_squared``."""
    net, _ = _load(config, checkpoint)
    evaluation = config.evaluation
    record = timing_benchmark(net, config.pde(), evaluation.benchmark_counts,
                              seed=config.seed, repeats=evaluation.benchmark_repeats)
    export_csv(record, config.output_path / TIMING)

    fit = record.fit
    summary = (f"{config.problem.name}: {fit.slope:.3e} s/point + {fit.intercept:.3e} s, "
               f"r^2 {fit.r_squared:.4f} (limit {evaluation.min_r_squared})")
    counts, seconds = published_timing(config.problem.name)
    summary += f"; published {seconds[-1]:g}s at {counts[-1]} points"
    logger.info(summary)
    if not record.is_monotone():
        logger.warning("Timings do not grow with the point count")
    if fit.r_squared < evaluation.min_r_squared:
        raise AcceptanceError(summary)
    return BenchmarkOutcome(record, summary)
