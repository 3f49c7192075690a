"""
Batch Orchestrator

Runs trajectories in parallel worker processes, exports records and metrics,
and drives the weight and swarm-size sweeps.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from itertools import repeat
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from ..config import RunConfig
from ..evaluator import evaluate_trajectory
from ..logging_setup import PACKAGE_LOGGER, setup_logging
from ..report import POSE_CSV_COLUMNS, aggregate, metrics_document, pose_errors, write_csv, write_json
from ..trajectory_io import InputTrajectory, RecordedTrajectory, write_records
from .base_orchestrator import BaseOrchestrator

logger = logging.getLogger(__name__)

OMEGA_TASK_GRID = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
SWARM_GRID = ((25, 25), (25, 50), (50, 50), (100, 100))
SWEEP_SWARM = (25, 50)
SWEEP_OMEGA_TASK = 0.8
POSE_WEIGHT_PAIRS = ((1.0, 0.0), (0.75, 0.25), (0.5, 0.5), (0.25, 0.75), (0.0, 1.0))


def _parent_log_level() -> Optional[str]:
    """Console level of the package logger in this process, None if it is not configured"""
    handlers = logging.getLogger(PACKAGE_LOGGER).handlers
    return logging.getLevelName(handlers[0].level) if handlers else None


def _retarget_worker(config: RunConfig, trajectory: InputTrajectory, index: int) -> RecordedTrajectory:
    """Process-pool entry point: one trajectory, with its own orchestrator"""
    return BatchOrchestrator(config).run_retarget(trajectory, index)


def metrics_name(run: Dict[str, Any]) -> str:
    return f"{run['mode']}_w{run['omega_task']:.2f}_s{run['swarm']}_i{run['iterations']}_seed{run['seed']}.json"


class BatchOrchestrator(BaseOrchestrator):
    """Batch orchestrator with a process pool for independent trajectories"""

    def __init__(self, config: RunConfig, num_workers: int = 1):
        super().__init__("batch", config)
        self.num_workers = max(1, num_workers)

    def run(self, trajectories: Sequence[InputTrajectory]) -> List[RecordedTrajectory]:
        """
        Retarget a batch. Trajectory i is seeded by (seed, i), so results do
        not depend on the number of workers or their scheduling.
        """
        logger.info(f"Processing batch of {len(trajectories)} trajectories "
                    f"(mode={self.config.mode}, workers={self.num_workers})")
        if self.num_workers == 1 or len(trajectories) <= 1:
            return [self.run_retarget(t, i) for i, t in enumerate(trajectories)]

        with ProcessPoolExecutor(max_workers=self.num_workers, initializer=setup_logging,
                                 initargs=(_parent_log_level(),)) as pool:
            return list(pool.map(_retarget_worker, repeat(self.config), trajectories, range(len(trajectories))))

    def evaluate(self, recorded: Sequence[RecordedTrajectory]) -> Dict[str, Any]:
        evaluated = [(r.traj_id, evaluate_trajectory(r.frames, self.config.evaluation)) for r in recorded]
        document = metrics_document(self.config.run_header(), evaluated)
        summary = document['summary']
        logger.info(f"{self.config.mode}: success {summary['success_rate']:.2f}, "
                    f"lifting ratio {summary['lifting_ratio']:.3f} over {summary['n_trajectories']} trajectories")
        return document

    def export_results(self, recorded: Sequence[RecordedTrajectory], output_dir: Path,
                       metrics_path: Optional[Path] = None) -> Dict[str, Any]:
        """Write one records file per trajectory, the metrics file and a summary"""
        output_dir = Path(output_dir)
        records_paths = [write_records(r, output_dir / f"{r.traj_id}.jsonl") for r in recorded]
        document = self.evaluate(recorded)
        metrics_path = write_json(document, metrics_path or output_dir / 'metrics.json')

        summary = {
            'run': self.config.run_header(),
            'total_trajectories': len(recorded),
            'records': [p.name for p in records_paths],
            'metrics': metrics_path.name,
            'summary': document['summary'],
        }
        write_json(summary, output_dir / 'summary.json')
        logger.info(f"Results exported to: {output_dir}")
        return document

    def _run_config(self, config: RunConfig, trajectories: Sequence[InputTrajectory],
                    metrics_dir: Path) -> Tuple[Path, Dict[str, Any]]:
        orchestrator = BatchOrchestrator(config, self.num_workers)
        document = orchestrator.evaluate(orchestrator.run(trajectories))
        path = write_json(document, metrics_dir / metrics_name(document['run']))
        return path, document

    def sweep_configs(self, seeds: Sequence[int]) -> List[RunConfig]:
        """IK baseline, the omega_task ablation, and the swarm/iteration grid, per seed"""
        base = self.config
        configs: Dict[Tuple, RunConfig] = {}
        for seed in seeds:
            candidates = [base.with_overrides(mode='ik', seed=seed, omega_task=SWEEP_OMEGA_TASK,
                                              swarm_size=SWEEP_SWARM[0], iterations=SWEEP_SWARM[1])]
            candidates += [base.with_overrides(mode='hybrid', seed=seed, omega_task=w,
                                               swarm_size=SWEEP_SWARM[0], iterations=SWEEP_SWARM[1])
                           for w in OMEGA_TASK_GRID]
            candidates += [base.with_overrides(mode='hybrid', seed=seed, omega_task=SWEEP_OMEGA_TASK,
                                               swarm_size=s, iterations=n)
                           for s, n in SWARM_GRID]
            for config in candidates:
                run = config.run_header()
                configs.setdefault(tuple(sorted(run.items())), config)
        return list(configs.values())

    def sweep(self, trajectories: Sequence[InputTrajectory], output_dir: Path,
              seeds: Optional[Sequence[int]] = None) -> List[Dict[str, Any]]:
        """
        Run every sweep configuration over the same trajectories and write
        one metrics file per configuration plus report.json / report.csv.

        Returns:
            The aggregated report rows
        """
        output_dir = Path(output_dir)
        seeds = list(seeds) if seeds else [self.config.seed]
        configs = self.sweep_configs(seeds)
        logger.info(f"Sweep over {len(configs)} configurations, seeds {seeds}")

        documents = [self._run_config(config, trajectories, output_dir / 'metrics')[1] for config in configs]
        rows = aggregate(documents)
        write_csv(rows, output_dir / 'report.csv')
        write_json({'configs': rows}, output_dir / 'report.json')
        return rows

    def pose_sweep(self, trajectories: Sequence[InputTrajectory], output_dir: Path,
                   pairs: Sequence[Tuple[float, float]] = POSE_WEIGHT_PAIRS) -> List[Dict[str, Any]]:
        """
        Pose-only retargeting for each (omega_p, omega_a) pair; writes
        pose_sweep.csv with the mean fingertip, position and angle errors
        """
        output_dir = Path(output_dir)
        rows = []
        for omega_p, omega_a in pairs:
            weights = replace(self.config.weights, omega_p=omega_p, omega_a=omega_a).normalized()
            config = replace(self.config, mode='pose', weights=weights)
            recorded = BatchOrchestrator(config, self.num_workers).run(trajectories)
            errors = pose_errors(recorded, weights)
            rows.append(dict(errors, omega_p=weights.omega_p, omega_a=weights.omega_a))
            logger.info(f"Pose sweep ({weights.omega_p:.2f}, {weights.omega_a:.2f}): "
                        f"fingertip error {errors['fingertip_error']:.4f} m")

        write_csv(rows, output_dir / 'pose_sweep.csv', POSE_CSV_COLUMNS)
        write_json({'pairs': rows}, output_dir / 'pose_sweep.json')
        return rows
