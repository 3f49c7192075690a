"""
Metrics files and aggregate reports

A metrics file holds the run identity, one entry per evaluated trajectory and
a summary. report() groups any number of metrics files by configuration
(mode, omega_task, swarm, iterations), pooling seeds, and emits the aggregate
as JSON and CSV. Output is sorted and written with sorted keys so identical
inputs give byte-identical files.
"""

import csv
import json
import logging
from collections import defaultdict
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from marshmallow import Schema, ValidationError, fields, validate

from .config import MODES
from .energy import EnergyWeights, e_angle, e_position
from .errors import ReportValidationError
from .evaluator import TrajectoryMetrics
from .hand_kinematics import scale_factor
from .trajectory_io import RecordedTrajectory

logger = logging.getLogger(__name__)

METRICS_KIND = 'metrics'
CSV_COLUMNS = ['mode', 'omega_task', 'swarm', 'iterations', 'success_rate', 'lifting_ratio']
POSE_CSV_COLUMNS = ['omega_p', 'omega_a', 'fingertip_error', 'e_position', 'e_angle', 'n_frames']

PathLike = Union[str, Path]


class RunSchema(Schema):
    mode = fields.String(required=True, validate=validate.OneOf(MODES))
    omega_task = fields.Float(required=True, validate=validate.Range(min=0, max=1))
    swarm = fields.Integer(required=True, validate=validate.Range(min=1))
    iterations = fields.Integer(required=True, validate=validate.Range(min=0))
    seed = fields.Integer(required=True)


class TrajectoryMetricsSchema(Schema):
    traj_id = fields.String(required=True)
    soi_start = fields.Integer(required=True, allow_none=True)
    lifting_ratio = fields.Float(required=True, validate=validate.Range(min=0, max=1))
    success = fields.Boolean(required=True)
    max_lift_height = fields.Float(required=True)
    n_frames = fields.Integer(required=True, validate=validate.Range(min=1))
    lifting_frames = fields.Integer(required=True, validate=validate.Range(min=0))


class MetricsFileSchema(Schema):
    kind = fields.String(required=True, validate=validate.Equal(METRICS_KIND))
    run = fields.Nested(RunSchema, required=True)
    trajectories = fields.List(fields.Nested(TrajectoryMetricsSchema), required=True)
    summary = fields.Dict(keys=fields.String())


def summarize(metrics: Sequence[TrajectoryMetrics]) -> Dict[str, Any]:
    n = len(metrics)
    return {
        'n_trajectories': n,
        'success_rate': sum(m.success for m in metrics) / n if n else 0.0,
        'lifting_ratio': float(np.mean([m.lifting_ratio for m in metrics])) if n else 0.0,
    }


def metrics_document(run: Dict[str, Any], evaluated: Iterable[Tuple[str, TrajectoryMetrics]]) -> Dict[str, Any]:
    evaluated = list(evaluated)
    return {
        'kind': METRICS_KIND,
        'run': dict(run),
        'trajectories': [dict(m.to_dict(), traj_id=traj_id) for traj_id, m in evaluated],
        'summary': summarize([m for _, m in evaluated]),
    }


def write_json(document: Any, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(document, f, indent=2, sort_keys=True)
        f.write('\n')
    return path


def load_metrics(path: PathLike) -> Dict[str, Any]:
    """
    Read and validate a metrics file.

    Raises:
        ReportValidationError: unreadable file or schema mismatch
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ReportValidationError(f"Cannot read metrics {path}: {e}")
    try:
        return MetricsFileSchema().load(data)
    except ValidationError as e:
        raise ReportValidationError(f"{path} does not match the metrics schema", {'fields': e.messages})


def _config_key(run: Dict[str, Any]) -> Tuple:
    return run['mode'], run['omega_task'], run['swarm'], run['iterations']


def aggregate(documents: Sequence[Dict[str, Any]]) -> List[Dict[str, Any]]:
    """One row per configuration; seeds of the same configuration are pooled"""
    if not documents:
        raise ReportValidationError("report needs at least one metrics file")
    grouped: Dict[Tuple, List[Dict]] = defaultdict(list)
    seeds: Dict[Tuple, set] = defaultdict(set)
    for doc in documents:
        key = _config_key(doc['run'])
        grouped[key].extend(doc['trajectories'])
        seeds[key].add(doc['run']['seed'])

    rows = []
    for key in sorted(grouped):
        trajectories = grouped[key]
        n = len(trajectories)
        mode, omega_task, swarm, iterations = key
        rows.append({
            'mode': mode,
            'omega_task': omega_task,
            'swarm': swarm,
            'iterations': iterations,
            'success_rate': sum(t['success'] for t in trajectories) / n if n else 0.0,
            'lifting_ratio': float(np.mean([t['lifting_ratio'] for t in trajectories])) if n else 0.0,
            'n_trajectories': n,
            'seeds': sorted(seeds[key]),
        })
    return rows


def write_csv(rows: Sequence[Dict[str, Any]], path: PathLike, columns: Sequence[str] = CSV_COLUMNS) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=list(columns), extrasaction='ignore', lineterminator='\n')
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    return path


def report(metrics_paths: Sequence[PathLike], csv_path: PathLike,
           out_path: Optional[PathLike] = None) -> List[Dict[str, Any]]:
    """
    Aggregate metrics files into a CSV table and, optionally, a JSON report.

    Raises:
        ReportValidationError: no input files, or one fails validation
    """
    documents = [load_metrics(p) for p in metrics_paths]
    rows = aggregate(documents)
    write_csv(rows, csv_path)
    if out_path is not None:
        write_json({'configs': rows}, out_path)
    logger.info(f"Report over {len(documents)} metrics files, {len(rows)} configurations -> {csv_path}")
    return rows


def pose_errors(recorded: Sequence[RecordedTrajectory], weights: EnergyWeights) -> Dict[str, float]:
    """
    Mean fingertip error (m), E_p and E_a over every frame of the given
    trajectories, each frame's source skeleton scaled onto its realised one
    """
    tip_errors, e_p, e_a = [], [], []
    for trajectory in recorded:
        for frame in trajectory.frames:
            x_prime = frame.x.scaled(scale_factor(frame.x, frame.y))
            tip_errors.append(float(np.mean(np.linalg.norm(x_prime.fingertips - frame.y.fingertips, axis=1))))
            e_p.append(e_position(x_prime, frame.y, weights.omega_joint))
            e_a.append(e_angle(frame.x, frame.y))
    return {
        'fingertip_error': float(np.mean(tip_errors)),
        'e_position': float(np.mean(e_p)),
        'e_angle': float(np.mean(e_a)),
        'n_frames': len(tip_errors),
    }
