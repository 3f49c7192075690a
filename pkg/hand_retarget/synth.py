"""
Synthetic input trajectories

Scripts a reach-close-lift motion of the hand model over the scene object,
renders it through forward kinematics, moves it into a larger "human" domain
and adds isotropic Gaussian noise, standing in for a hand pose estimator.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import least_squares

from .errors import ConfigurationError, GenerationError
from .hand_kinematics import (
    FINGER_CHAINS, FINGERTIPS, N_ACTUATORS, N_GLOBAL, HandModelSpec, Skeleton,
    forward_kinematics_batch,
)
from .scene import ContactConfig, HandPoints, SceneState, grasp_rule
from .trajectory_io import InputTrajectory

logger = logging.getLogger(__name__)

# Fingertips aim this far from the object's side edges, and this fraction of its height below the centre
EDGE_MARGIN = 0.008
GRASP_HEIGHT_FRACTION = 0.2

# Pulls the least-squares grasp solve towards small joint angles
JOINT_REGULARISATION = 1e-4


@dataclass(frozen=True)
class SynthConfig:
    fps: float = 60.0
    human_scale: float = 1.1
    approach_frames: int = 40
    close_frames: int = 30
    hold_frames: int = 10
    lift_frames: int = 60
    final_hold_frames: int = 20
    approach_height: float = 0.12
    lift_height: float = 0.25
    palm_clearance: float = 0.002
    contact_inset: float = 0.001
    start_jitter: float = 0.02
    lateral_jitter: float = 0.005
    timing_jitter: float = 0.2
    lift_jitter: float = 0.03

    def __post_init__(self):
        if self.fps <= 0 or self.human_scale <= 0:
            raise ConfigurationError("synth fps and human_scale must be > 0")
        phases = (self.approach_frames, self.close_frames, self.hold_frames,
                  self.lift_frames, self.final_hold_frames)
        if any(n < 1 for n in phases):
            raise ConfigurationError("every synth phase needs at least one frame")
        if not 0.0 <= self.timing_jitter < 1.0:
            raise ConfigurationError("timing_jitter must lie in [0, 1)")

    @property
    def phase_frames(self) -> Tuple[int, ...]:
        return (self.approach_frames, self.close_frames, self.hold_frames,
                self.lift_frames, self.final_hold_frames)


def _finger_actuators(spec: HandModelSpec) -> np.ndarray:
    return np.array([k for k, act in enumerate(spec.actuators) if act.drives is not None])


def grasp_targets(scene: SceneState, spec: HandModelSpec, wrist: np.ndarray, inset: float) -> np.ndarray:
    """
    Fingertip targets (5,3): the four fingers just inside the object's +x
    side, the thumb just inside its -x side, below the object centre
    """
    lo, hi = scene.aabb()
    mcp = spec.rest_skeleton[[chain[1] for chain in FINGER_CHAINS]] + wrist
    z = scene.position[2] - GRASP_HEIGHT_FRACTION * (hi[2] - lo[2])
    y = np.clip(mcp[:, 1], lo[1] + EDGE_MARGIN, hi[1] - EDGE_MARGIN)
    x = np.full(5, hi[0] - inset)
    x[0] = lo[0] + inset
    return np.stack([x, y, np.full(5, z)], axis=1)


def solve_grasp(scene: SceneState, spec: HandModelSpec, cfg: SynthConfig,
                contact_cfg: ContactConfig) -> np.ndarray:
    """
    Palm-down grasp action: palm centre just above the object's top, centred
    over it, fingertips solved by bounded least squares onto the side targets.

    Raises:
        GenerationError: the solved hand does not satisfy the grasp rule
    """
    lo, hi = scene.aabb()
    wrist = np.array([
        scene.position[0] - spec.palm_center[0],
        scene.position[1] - spec.palm_center[1],
        hi[2] + cfg.palm_clearance - spec.palm_center[2],
    ])
    targets = grasp_targets(scene, spec, wrist, cfg.contact_inset)
    fingers = _finger_actuators(spec)
    lower, upper = spec.lower[fingers], spec.upper[fingers]

    base = np.zeros(N_GLOBAL + N_ACTUATORS)
    base[:3] = wrist

    def action_for(q: np.ndarray) -> np.ndarray:
        action = base.copy()
        action[N_GLOBAL + fingers] = q
        return action

    def residual(q: np.ndarray) -> np.ndarray:
        tips = forward_kinematics_batch(spec, action_for(q)).joints[0, list(FINGERTIPS)]
        return np.concatenate([(tips - targets).ravel(), JOINT_REGULARISATION * q])

    solution = least_squares(residual, 0.5 * (lower + upper), bounds=(lower, upper))
    action = action_for(solution.x)

    state = forward_kinematics_batch(spec, action)
    hand = HandPoints.from_state(state)
    points = hand.contact_points()
    raw = scene.distances(points)
    if not grasp_rule(points, raw, scene.position, contact_cfg):
        raise GenerationError(
            f"Scripted grasp does not hold {scene.name}",
            {'raw_distances': raw.tolist(), 'residual': float(np.linalg.norm(solution.fun))},
        )
    logger.debug(f"Grasp solved, contact distances {np.round(raw, 4).tolist()}")
    return action


def _smoothstep(a: np.ndarray) -> np.ndarray:
    return a * a * (3.0 - 2.0 * a)


def scripted_actions(grasp: np.ndarray, spec: HandModelSpec, cfg: SynthConfig,
                     rng: np.random.Generator) -> np.ndarray:
    """
    Clean (N,29) action sequence: approach from above with the hand open,
    close onto the grasp, hold, lift, hold
    """
    start_offset = rng.uniform(-cfg.start_jitter, cfg.start_jitter, size=2)
    lateral = rng.uniform(-cfg.lateral_jitter, cfg.lateral_jitter)
    stretch = 1.0 + rng.uniform(-cfg.timing_jitter, cfg.timing_jitter, size=5)
    lift = cfg.lift_height + rng.uniform(-cfg.lift_jitter, cfg.lift_jitter)
    n_approach, n_close, n_hold, n_lift, n_final = (
        max(1, int(round(n * s))) for n, s in zip(cfg.phase_frames, stretch)
    )

    grasp = grasp.copy()
    grasp[1] += lateral
    closed = grasp[N_GLOBAL:]
    grasp_t = grasp[:3]
    start_t = grasp_t + np.array([start_offset[0], start_offset[1], cfg.approach_height])

    def pose(translation: np.ndarray, joints: np.ndarray) -> np.ndarray:
        return np.concatenate([translation, grasp[3:N_GLOBAL], joints])

    open_hand = np.zeros(N_ACTUATORS)
    actions = []
    for a in _smoothstep(np.arange(n_approach) / n_approach):
        actions.append(pose(start_t + a * (grasp_t - start_t), open_hand))
    for b in np.arange(1, n_close + 1) / n_close:
        actions.append(pose(grasp_t, b * closed))
    actions.extend(pose(grasp_t, closed) for _ in range(n_hold))
    up = np.array([0.0, 0.0, 1.0])
    for c in _smoothstep(np.arange(1, n_lift + 1) / n_lift):
        actions.append(pose(grasp_t + c * lift * up, closed))
    actions.extend(pose(grasp_t + lift * up, closed) for _ in range(n_final))
    return spec.clamp(np.array(actions))


def synth_generate(scene: SceneState, spec: HandModelSpec, n: int, sigma: float, seed: int,
                   cfg: Optional[SynthConfig] = None,
                   contact_cfg: Optional[ContactConfig] = None) -> List[InputTrajectory]:
    """
    Generate n noisy input trajectories.

    Trajectory i draws from a generator seeded with (seed, i); script
    variations are drawn before the noise, so the clean motion for a given
    seed does not depend on sigma.

    Args:
        scene: Scene whose object is grasped
        spec: Hand model rendering the motion
        n: Number of trajectories
        sigma: Noise standard deviation per coordinate (m)
        seed: Base seed

    Returns:
        Source-domain trajectories named traj_000, traj_001, ...
    """
    if sigma < 0:
        raise ConfigurationError(f"sigma must be >= 0, got {sigma}")
    if n < 0:
        raise ConfigurationError(f"n must be >= 0, got {n}")
    cfg = cfg or SynthConfig()
    contact_cfg = contact_cfg or ContactConfig()

    grasp = solve_grasp(scene, spec, cfg, contact_cfg)
    trajectories = []
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        actions = scripted_actions(grasp, spec, cfg, rng)
        joints = forward_kinematics_batch(spec, actions).joints * cfg.human_scale
        joints = joints + sigma * rng.standard_normal(joints.shape)
        frames = tuple((k / cfg.fps, Skeleton(joints[k])) for k in range(len(actions)))
        trajectories.append(InputTrajectory(traj_id=f"traj_{i:03d}", frames=frames))

    logger.info(f"Generated {n} trajectories (sigma={sigma}, seed={seed})")
    return trajectories
