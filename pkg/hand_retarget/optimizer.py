"""
Particle swarm optimisation over the 29-D action space

Inertia-weight PSO with per-dimension velocity clamping. The hybrid variant
seeds the swarm around the IK pose and scores particles on the combined pose
and task fitness; task_refine reuses the same machinery on the task energy
alone between input frames.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from .energy import EnergyWeights, e_pose_batch, fitness_batch
from .errors import ConfigurationError
from .hand_kinematics import (
    ACTION_DIM, N_GLOBAL, ActuatorVector, HandModelSpec, Skeleton,
    forward_kinematics_batch, normalize_skeleton, scale_factor,
)
from .ik_baseline import IkConfig, ik_retarget
from .scene import SceneState

logger = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], np.ndarray]

DEFAULT_GLOBAL_SPAN = (0.04, 0.04, 0.04, 0.35, 0.35, 0.35)

# Uninformed search box for pose-only PSO: translation half-width (m) around the wrist, rotation half-width (rad)
POSE_TRANSLATION_BOX = 0.05
POSE_ROTATION_BOX = np.pi


@dataclass(frozen=True)
class SwarmConfig:
    swarm_size: int = 25
    iterations: int = 50
    c1: float = 1.5
    c2: float = 1.5
    inertia: float = 0.7
    v_max_fraction: float = 0.10
    init_noise_fraction: float = 0.05
    min_fitness_step: float = 1e-4
    stall_patience: int = 1
    global_span: Tuple[float, ...] = DEFAULT_GLOBAL_SPAN
    rng_seed: Optional[int] = None

    def __post_init__(self):
        if self.swarm_size < 1:
            raise ConfigurationError(f"swarm_size must be >= 1, got {self.swarm_size}")
        if self.iterations < 0:
            raise ConfigurationError(f"iterations must be >= 0, got {self.iterations}")
        if self.min_fitness_step <= 0:
            raise ConfigurationError("min_fitness_step must be > 0")
        if self.stall_patience < 1:
            raise ConfigurationError("stall_patience must be >= 1")
        if self.v_max_fraction < 0 or self.init_noise_fraction < 0:
            raise ConfigurationError("v_max_fraction and init_noise_fraction must be >= 0")
        if len(self.global_span) != N_GLOBAL or any(v < 0 for v in self.global_span):
            raise ConfigurationError(f"global_span needs {N_GLOBAL} non-negative entries")
        object.__setattr__(self, 'global_span', tuple(float(v) for v in self.global_span))

    def ranges(self, spec: HandModelSpec) -> np.ndarray:
        """Per-dimension range: the global search span, then each actuator's limit width"""
        return np.concatenate([np.array(self.global_span), spec.upper - spec.lower])

    def v_max(self, spec: HandModelSpec) -> np.ndarray:
        return self.v_max_fraction * self.ranges(spec)

    def init_noise(self, spec: HandModelSpec) -> np.ndarray:
        return self.init_noise_fraction * self.ranges(spec)

    def to_dict(self) -> dict:
        return {
            'swarm_size': self.swarm_size, 'iterations': self.iterations,
            'c1': self.c1, 'c2': self.c2, 'inertia': self.inertia,
            'v_max_fraction': self.v_max_fraction, 'init_noise_fraction': self.init_noise_fraction,
            'min_fitness_step': self.min_fitness_step, 'stall_patience': self.stall_patience,
            'global_span': list(self.global_span), 'rng_seed': self.rng_seed,
        }


@dataclass(frozen=True, eq=False)
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    personal_best_position: np.ndarray
    personal_best_fitness: float


@dataclass(frozen=True, eq=False)
class SwarmState:
    """All particles as (P,D) arrays plus the global best"""
    positions: np.ndarray
    velocities: np.ndarray
    best_positions: np.ndarray
    best_fitness: np.ndarray
    global_best_position: np.ndarray
    global_best_fitness: float

    @property
    def size(self) -> int:
        return self.positions.shape[0]

    def particle(self, i: int) -> Particle:
        return Particle(
            position=self.positions[i].copy(),
            velocity=self.velocities[i].copy(),
            personal_best_position=self.best_positions[i].copy(),
            personal_best_fitness=float(self.best_fitness[i]),
        )

    def particles(self) -> List[Particle]:
        return [self.particle(i) for i in range(self.size)]


@dataclass(frozen=True, eq=False)
class PsoResult:
    best_position: np.ndarray
    best_fitness: float
    initial_best_fitness: float
    iterations_run: int
    history: List[float] = field(default_factory=list)


def _finite_or_inf(fit: np.ndarray) -> np.ndarray:
    fit = np.asarray(fit, dtype=float)
    return np.where(np.isfinite(fit), fit, np.inf)


def init_swarm(positions: np.ndarray, objective: Objective) -> SwarmState:
    """Swarm at the given positions with zero velocity; bests are the initial positions"""
    positions = np.array(positions, dtype=float)
    fit = _finite_or_inf(objective(positions))
    g = int(np.argmin(fit))
    return SwarmState(
        positions=positions,
        velocities=np.zeros_like(positions),
        best_positions=positions.copy(),
        best_fitness=fit,
        global_best_position=positions[g].copy(),
        global_best_fitness=float(fit[g]),
    )


def pso_step(swarm: SwarmState, objective: Objective, cfg: SwarmConfig,
             v_max: np.ndarray, rng: np.random.Generator) -> SwarmState:
    """
    One synchronous swarm update.

    v <- w v + c1 r1 (p_best - p) + c2 r2 (g_best - p), clamped to +-v_max;
    p <- p + v. Bests move only on strictly lower fitness; the global best is
    reduced by fitness, then by lowest particle index. A particle with
    non-finite fitness is put back on its personal best with zero velocity.
    """
    p = swarm.positions
    r1 = rng.random(p.shape)
    r2 = rng.random(p.shape)
    velocities = (cfg.inertia * swarm.velocities
                  + cfg.c1 * r1 * (swarm.best_positions - p)
                  + cfg.c2 * r2 * (swarm.global_best_position - p))
    velocities = np.clip(velocities, -v_max, v_max)
    positions = p + velocities

    fit = np.asarray(objective(positions), dtype=float)
    bad = ~np.isfinite(fit)
    if np.any(bad):
        logger.warning(f"{int(bad.sum())} particles with non-finite fitness reset to their personal best")
        positions[bad] = swarm.best_positions[bad]
        velocities[bad] = 0.0
        fit[bad] = swarm.best_fitness[bad]

    improved = fit < swarm.best_fitness
    best_positions = np.where(improved[:, None], positions, swarm.best_positions)
    best_fitness = np.where(improved, fit, swarm.best_fitness)

    g = int(np.argmin(best_fitness))
    if best_fitness[g] < swarm.global_best_fitness:
        global_position, global_fitness = best_positions[g].copy(), float(best_fitness[g])
    else:
        global_position, global_fitness = swarm.global_best_position, swarm.global_best_fitness

    return SwarmState(
        positions=positions,
        velocities=velocities,
        best_positions=best_positions,
        best_fitness=best_fitness,
        global_best_position=global_position,
        global_best_fitness=global_fitness,
    )


def run_swarm(initial_positions: np.ndarray, objective: Objective, cfg: SwarmConfig,
              v_max: np.ndarray, rng: np.random.Generator) -> PsoResult:
    """
    Iterate pso_step up to cfg.iterations times.

    Stops early after cfg.stall_patience consecutive iterations whose
    global-best improvement was below cfg.min_fitness_step.
    """
    swarm = init_swarm(initial_positions, objective)
    initial_best = swarm.global_best_fitness
    history = [initial_best]
    stalled = 0
    iterations_run = 0

    for iteration in range(cfg.iterations):
        previous = swarm.global_best_fitness
        swarm = pso_step(swarm, objective, cfg, v_max, rng)
        iterations_run += 1
        assert swarm.global_best_fitness <= previous, "global best fitness increased"
        history.append(swarm.global_best_fitness)

        if np.isfinite(previous):
            stalled = stalled + 1 if previous - swarm.global_best_fitness < cfg.min_fitness_step else 0
            if stalled >= cfg.stall_patience:
                logger.debug(f"Swarm stalled after {iteration + 1} iterations at {swarm.global_best_fitness:.6f}")
                break

    return PsoResult(
        best_position=swarm.global_best_position.copy(),
        best_fitness=swarm.global_best_fitness,
        initial_best_fitness=initial_best,
        iterations_run=iterations_run,
        history=history,
    )


def _make_rng(cfg: SwarmConfig, rng: Optional[np.random.Generator]) -> np.random.Generator:
    return rng if rng is not None else np.random.default_rng(cfg.rng_seed)


def seed_around(center: np.ndarray, delta: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    """center + uniform(-delta, delta) per dimension; particle 0 sits exactly on center"""
    noise = rng.uniform(-1.0, 1.0, size=(size, center.size)) * delta
    noise[0] = 0.0
    return center + noise


def hybrid_pso(x: Skeleton, scene: SceneState, spec: HandModelSpec, weights: EnergyWeights,
               cfg: SwarmConfig, prev: Optional[ActuatorVector] = None,
               ik_cfg: Optional[IkConfig] = None,
               rng: Optional[np.random.Generator] = None) -> ActuatorVector:
    """
    Swarm search around the IK solution of the scaled frame.

    Args:
        x: Raw source skeleton of the frame
        scene: Scene snapshot the particles are scored against
        spec: Hand model
        weights: Fitness weights
        cfg: Swarm options
        prev: Previous frame's action (IK warm start)
        ik_cfg: IK options
        rng: Generator; defaults to one seeded from cfg.rng_seed

    Returns:
        The global best, joints clamped to their limits
    """
    result = hybrid_pso_result(x, scene, spec, weights, cfg, prev, ik_cfg, rng)
    return ActuatorVector(result.best_position).clamped(spec)


def hybrid_pso_result(x: Skeleton, scene: SceneState, spec: HandModelSpec, weights: EnergyWeights,
                      cfg: SwarmConfig, prev: Optional[ActuatorVector] = None,
                      ik_cfg: Optional[IkConfig] = None,
                      rng: Optional[np.random.Generator] = None) -> PsoResult:
    rng = _make_rng(cfg, rng)
    x_prime = normalize_skeleton(x, scale_factor(x, spec.rest))
    prior = ik_retarget(x_prime, spec, prev, ik_cfg).values

    def objective(positions: np.ndarray) -> np.ndarray:
        return fitness_batch(x.joints, forward_kinematics_batch(spec, positions), scene, weights)

    initial = seed_around(prior, cfg.init_noise(spec), cfg.swarm_size, rng)
    result = run_swarm(initial, objective, cfg, cfg.v_max(spec), rng)
    logger.debug(
        f"Hybrid PSO: {result.initial_best_fitness:.5f} -> {result.best_fitness:.5f} "
        f"in {result.iterations_run} iterations"
    )
    return result


def task_refine(scene: SceneState, current: ActuatorVector, spec: HandModelSpec, weights: EnergyWeights,
                cfg: SwarmConfig, rng: Optional[np.random.Generator] = None) -> ActuatorVector:
    """
    Task-energy-only swarm search seeded on the current pose; the pose
    energy weight is forced to 0 so no source skeleton is needed.
    """
    rng = _make_rng(cfg, rng)
    task_weights = weights.task_only()

    def objective(positions: np.ndarray) -> np.ndarray:
        return fitness_batch(None, forward_kinematics_batch(spec, positions), scene, task_weights)

    initial = seed_around(current.values, cfg.init_noise(spec), cfg.swarm_size, rng)
    result = run_swarm(initial, objective, cfg, cfg.v_max(spec), rng)
    logger.debug(f"Task refine: {result.initial_best_fitness:.5f} -> {result.best_fitness:.5f}")
    return ActuatorVector(result.best_position).clamped(spec)


def pose_search_box(x_prime: Skeleton, spec: HandModelSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Lower and upper corners of the uninformed search box for pose-only PSO"""
    half = np.array([POSE_TRANSLATION_BOX] * 3 + [POSE_ROTATION_BOX] * 3)
    center = np.concatenate([x_prime.wrist - spec.rest_skeleton[0], np.zeros(3)])
    lower = np.concatenate([center - half, spec.lower])
    upper = np.concatenate([center + half, spec.upper])
    return lower, upper


def pose_pso(x: Skeleton, spec: HandModelSpec, weights: EnergyWeights, cfg: SwarmConfig,
             rng: Optional[np.random.Generator] = None) -> ActuatorVector:
    """
    Pose-energy-only PSO without an IK prior: particles start uniformly
    inside the joint limits and a box centred on the scaled wrist.
    """
    rng = _make_rng(cfg, rng)
    x_prime = normalize_skeleton(x, scale_factor(x, spec.rest))
    lower, upper = pose_search_box(x_prime, spec)

    def objective(positions: np.ndarray) -> np.ndarray:
        return e_pose_batch(x.joints, forward_kinematics_batch(spec, positions).joints, weights)

    initial = rng.uniform(lower, upper, size=(cfg.swarm_size, ACTION_DIM))
    result = run_swarm(initial, objective, cfg, cfg.v_max_fraction * (upper - lower), rng)
    logger.debug(f"Pose PSO: {result.initial_best_fitness:.5f} -> {result.best_fitness:.5f}")
    return ActuatorVector(result.best_position).clamped(spec)
