"""
hand-retarget command line

Subcommands: synth, retarget, eval, report, export-demos, sweep, pose-sweep.
Errors are written to stderr as one JSON line; exit code 2 for toolkit
errors, 1 for anything unexpected.
"""

import functools
import json
import logging
from pathlib import Path
from typing import List, Optional, Sequence

import click
from dotenv import load_dotenv

from .config import MODES, RunConfig, default_workers, load_run_config
from .demo_recorder import export_demos
from .errors import ReportValidationError, RetargetError
from .evaluator import evaluate_trajectory, is_success
from .hand_kinematics import HandModelSpec
from .logging_setup import setup_logging
from .orchestrators import BatchOrchestrator
from .report import metrics_document, report as build_report, write_json
from .retargeters import RetargeterFactory
from .scene import SceneState
from .synth import synth_generate
from .trajectory_io import InputTrajectory, read_input_trajectory, read_records, write_input_trajectory

logger = logging.getLogger(__name__)

EXIT_RETARGET_ERROR = 2
EXIT_UNEXPECTED = 1

MODE_HELP = "; ".join(f"{mode}: {text}" for mode, text in RetargeterFactory.describe().items())


def handle_errors(command):
    """Report failures as a JSON line on stderr and set the exit code"""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except RetargetError as e:
            click.echo(json.dumps(e.to_dict()), err=True)
            click.get_current_context().exit(EXIT_RETARGET_ERROR)
        except (click.exceptions.Exit, click.ClickException):
            raise
        except Exception as e:
            logger.debug("Unexpected failure", exc_info=True)
            click.echo(json.dumps({'error': type(e).__name__, 'message': str(e), 'details': {}}), err=True)
            click.get_current_context().exit(EXIT_UNEXPECTED)
    return wrapper


def _expand(paths: Sequence[str], pattern: str) -> List[Path]:
    """Files as given, directories expanded to their sorted matching files"""
    expanded: List[Path] = []
    for raw in paths:
        path = Path(raw)
        expanded.extend(sorted(path.glob(pattern)) if path.is_dir() else [path])
    return expanded


def _load_inputs(paths: Sequence[str]) -> List[InputTrajectory]:
    return [read_input_trajectory(p) for p in _expand(paths, '*.jsonl')]


def _config(path: Optional[str]) -> RunConfig:
    return load_run_config(path)


@click.group()
@click.option('--log-level', default=None, help='DEBUG, INFO, WARNING or ERROR (default: $HAND_RETARGET_LOG_LEVEL or INFO)')
def cli(log_level):
    """Hand motion retargeting toolkit"""
    load_dotenv('.env')
    setup_logging(log_level)


@cli.command()
@click.option('--n', 'n', default=10, show_default=True, help='Number of trajectories')
@click.option('--sigma', default=0.0, show_default=True, help='Noise std per coordinate (m)')
@click.option('--seed', default=0, show_default=True, help='Base seed')
@click.option('--scene', 'scene_path', type=click.Path(exists=True, dir_okay=False), default=None)
@click.option('--spec', 'spec_path', type=click.Path(exists=True, dir_okay=False), default=None)
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False), default=None)
@click.option('--out', required=True, type=click.Path(file_okay=False), help='Output directory')
@handle_errors
def synth(n, sigma, seed, scene_path, spec_path, config_path, out):
    """Generate noisy synthetic grasp trajectories"""
    config = _config(config_path)
    scene = SceneState.load(scene_path) if scene_path else config.load_scene()
    spec = HandModelSpec.load(spec_path) if spec_path else config.load_spec()

    trajectories = synth_generate(scene, spec, n, sigma, seed, config.synth, config.contact)
    for trajectory in trajectories:
        write_input_trajectory(trajectory, Path(out) / f"{trajectory.traj_id}.jsonl")
    click.echo(f"Wrote {len(trajectories)} trajectories to {out}")


@cli.command()
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False), default=None)
@click.option('--mode', type=click.Choice(MODES), default=None, help=MODE_HELP)
@click.option('--input', 'inputs', multiple=True, required=True, type=click.Path(exists=True),
              help='Input trajectory file or directory (repeatable)')
@click.option('--out', required=True, type=click.Path(file_okay=False), help='Output directory')
@click.option('--seed', type=int, default=None)
@click.option('--omega-task', type=float, default=None)
@click.option('--swarm', type=int, default=None, help='Swarm size')
@click.option('--iterations', type=int, default=None)
@click.option('--workers', type=int, default=None, help='Worker processes (default: $HAND_RETARGET_WORKERS or 1)')
@handle_errors
def retarget(config_path, mode, inputs, out, seed, omega_task, swarm, iterations, workers):
    """Retarget input trajectories and write records plus metrics"""
    config = _config(config_path).with_overrides(mode=mode, seed=seed, omega_task=omega_task,
                                                 swarm_size=swarm, iterations=iterations)
    orchestrator = BatchOrchestrator(config, workers or default_workers())
    recorded = orchestrator.run(_load_inputs(inputs))
    document = orchestrator.export_results(recorded, Path(out))
    summary = document['summary']
    click.echo(click.style(
        f"{config.mode}: {summary['success_rate']:.0%} success, lifting ratio {summary['lifting_ratio']:.3f}",
        fg='green' if summary['success_rate'] > 0 else 'yellow',
    ))


@cli.command(name='eval')
@click.option('--records', 'records', multiple=True, required=True, type=click.Path(exists=True))
@click.option('--out', required=True, type=click.Path(dir_okay=False), help='Metrics JSON path')
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False), default=None)
@handle_errors
def evaluate(records, out, config_path):
    """Evaluate records files of one run"""
    config = _config(config_path)
    recorded = [read_records(p) for p in _expand(records, '*.jsonl')]
    runs = {json.dumps(r.header.get('run'), sort_keys=True) for r in recorded}
    if len(runs) != 1:
        raise ReportValidationError("Records come from different runs", {'runs': sorted(runs)})
    run = recorded[0].header.get('run')
    if run is None:
        raise ReportValidationError("Records header has no run description")

    evaluated = [(r.traj_id, evaluate_trajectory(r.frames, config.evaluation)) for r in recorded]
    document = metrics_document(run, evaluated)
    write_json(document, out)
    click.echo(f"{len(evaluated)} trajectories, success rate {document['summary']['success_rate']:.2f}")


@cli.command()
@click.option('--metrics', 'metrics', multiple=True, required=True, type=click.Path(exists=True))
@click.option('--csv', 'csv_path', required=True, type=click.Path(dir_okay=False))
@click.option('--out', default=None, type=click.Path(dir_okay=False), help='Aggregate JSON path')
@handle_errors
def report(metrics, csv_path, out):
    """Aggregate metrics files per configuration"""
    rows = build_report(_expand(metrics, '*.json'), csv_path, out)
    for row in rows:
        click.echo(f"{row['mode']:>14} w_task={row['omega_task']:.2f} swarm={row['swarm']:>3} "
                   f"iters={row['iterations']:>3}  success={row['success_rate']:.2f} "
                   f"lifting={row['lifting_ratio']:.3f}")


@cli.command(name='export-demos')
@click.option('--records', 'records', multiple=True, required=True, type=click.Path(exists=True))
@click.option('--out', required=True, type=click.Path(dir_okay=False), help='Dataset JSONL path')
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False), default=None)
@click.option('--successful-only', is_flag=True, help='Skip unsuccessful trajectories instead of failing')
@handle_errors
def export_demos_command(records, out, config_path, successful_only):
    """Export successful trajectories as a demonstration dataset"""
    config = _config(config_path)
    recorded = [read_records(p) for p in _expand(records, '*.jsonl')]
    if successful_only:
        recorded = [r for r in recorded if is_success(r.frames, config.evaluation)]

    hashes = {r.header.get('model_spec_hash') for r in recorded}
    if len(hashes) > 1:
        raise ReportValidationError("Records come from different hand models", {'hashes': sorted(map(str, hashes))})
    model_hash = hashes.pop() if hashes else config.load_spec().source_hash
    run = recorded[0].header.get('run', {}) if recorded else config.run_header()

    export_demos(recorded, out, model_hash, {'run': run, 'fps': config.fps}, config.evaluation)
    click.echo(f"Exported {len(recorded)} demonstrations to {out}")


@cli.command()
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False), default=None)
@click.option('--input', 'inputs', multiple=True, required=True, type=click.Path(exists=True))
@click.option('--out', required=True, type=click.Path(file_okay=False))
@click.option('--seeds', type=int, multiple=True, help='Seeds to pool (repeatable; default: config seed)')
@click.option('--workers', type=int, default=None)
@handle_errors
def sweep(config_path, inputs, out, seeds, workers):
    """omega_task ablation and swarm/iteration grid against the IK baseline"""
    orchestrator = BatchOrchestrator(_config(config_path), workers or default_workers())
    rows = orchestrator.sweep(_load_inputs(inputs), Path(out), seeds)
    click.echo(f"Sweep finished: {len(rows)} configurations, report in {out}")


@cli.command(name='pose-sweep')
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False), default=None)
@click.option('--input', 'inputs', multiple=True, required=True, type=click.Path(exists=True))
@click.option('--out', required=True, type=click.Path(file_okay=False))
@click.option('--workers', type=int, default=None)
@handle_errors
def pose_sweep(config_path, inputs, out, workers):
    """Pose-only swarm retargeting over (omega_p, omega_a) pairs"""
    orchestrator = BatchOrchestrator(_config(config_path), workers or default_workers())
    rows = orchestrator.pose_sweep(_load_inputs(inputs), Path(out))
    for row in rows:
        click.echo(f"w_p={row['omega_p']:.2f} w_a={row['omega_a']:.2f}  "
                   f"fingertip={row['fingertip_error']:.4f} m  E_p={row['e_position']:.5f}  E_a={row['e_angle']:.5f}")


def main():
    cli(prog_name='hand-retarget')


if __name__ == '__main__':
    main()
