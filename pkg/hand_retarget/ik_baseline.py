"""
Inverse-kinematics baseline

The global pose is the least-squares rigid fit of the palm points (wrist and
the five MCPs) onto the model's palm. Joint actuators are then solved in tree
order: the target bone, expressed in the actuator's parent frame, is projected
onto the plane normal to the actuator axis and the signed angle from the rest
bone is taken.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import ConfigurationError, DegenerateInputError
from .hand_kinematics import (
    FINGER_CHAINS, N_ACTUATORS, N_GLOBAL, PALM_POINTS, ActuatorVector,
    HandModelSpec, Skeleton, forward_kinematics_batch, rotation_about_axis,
)

logger = logging.getLogger(__name__)

# Second singular value of the centred palm, relative to the first, below which the palm is collinear
PALM_RANK_TOLERANCE = 1e-6


@dataclass(frozen=True)
class IkConfig:
    """
    max_passes: target points tried per actuator; pass k aims the bone at the
        k-th chain point past the driven one when the driven bone is parallel
        to the actuator axis
    """
    max_passes: int = 3
    clamp: bool = True
    warm_start: bool = True
    singular_tolerance: float = 0.05

    def __post_init__(self):
        if self.max_passes < 1:
            raise ConfigurationError(f"IK max_passes must be >= 1, got {self.max_passes}")
        if not 0.0 < self.singular_tolerance < 1.0:
            raise ConfigurationError("IK singular_tolerance must lie in (0, 1)")


def _chain_after(point: int) -> List[int]:
    """The driven point followed by the points further down its finger"""
    for chain in FINGER_CHAINS:
        if point in chain:
            return list(chain[chain.index(point):])
    return [point]


def fit_palm(x_prime: np.ndarray, model_palm: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Rotation R and translation t minimising sum |R m_i + t - x_i|^2 over the palm points"""
    target = x_prime[list(PALM_POINTS)]
    source = model_palm[list(PALM_POINTS)]
    target_mean = target.mean(axis=0)
    source_mean = source.mean(axis=0)
    target_c = target - target_mean
    source_c = source - source_mean

    sv = np.linalg.svd(target_c, compute_uv=False)
    if sv[0] <= 0 or sv[1] < PALM_RANK_TOLERANCE * sv[0]:
        raise DegenerateInputError("Palm points are collinear", {'singular_values': sv.tolist()})

    rotation, _ = Rotation.align_vectors(target_c, source_c)
    r = rotation.as_matrix()
    return r, target_mean - r @ source_mean


def signed_axis_angle(axis: np.ndarray, rest: np.ndarray, target: np.ndarray,
                      tolerance: float) -> Optional[float]:
    """Signed angle about axis taking rest onto target, None if either is parallel to the axis"""
    p1 = rest - np.dot(rest, axis) * axis
    p2 = target - np.dot(target, axis) * axis
    if np.linalg.norm(p1) < tolerance * np.linalg.norm(rest) or \
            np.linalg.norm(p2) < tolerance * np.linalg.norm(target):
        return None
    return float(np.arctan2(np.dot(axis, np.cross(p1, p2)), np.dot(p1, p2)))


def ik_retarget(x_prime: Skeleton, spec: HandModelSpec, prev: Optional[ActuatorVector] = None,
                cfg: Optional[IkConfig] = None) -> ActuatorVector:
    """
    Map a skeleton already scaled into the model domain to an action vector.

    Args:
        x_prime: Scaled source skeleton
        spec: Hand model
        prev: Previous frame's action, used as warm start
        cfg: IK options

    Returns:
        Action vector; joints clamped to their limits unless cfg.clamp is off

    Raises:
        DegenerateInputError: palm points are collinear
    """
    cfg = cfg or IkConfig()
    x = x_prime.joints
    prev_joints = prev.joints if (prev is not None and cfg.warm_start) else None

    # Actuators without a driven point (the wrist) keep their previous value
    joints = np.zeros(N_ACTUATORS)
    for k, act in enumerate(spec.actuators):
        if act.drives is None and prev_joints is not None:
            joints[k] = prev_joints[k]

    # Palm geometry of the model with only those actuators applied
    rest_pose = np.concatenate([np.zeros(N_GLOBAL), joints])
    model_palm = forward_kinematics_batch(spec, rest_pose).joints[0]
    root_r, root_t = fit_palm(x, model_palm)

    frame_r: List[np.ndarray] = []
    for k, act in enumerate(spec.actuators):
        parent_r = root_r if act.parent < 0 else frame_r[act.parent]
        if act.drives is not None:
            angle = None
            for target in _chain_after(act.drives)[:cfg.max_passes]:
                rest_bone = spec.rest_skeleton[target] - spec.rest_skeleton[act.pivot]
                local_bone = parent_r.T @ (x[target] - x[act.pivot])
                angle = signed_axis_angle(act.axis, rest_bone, local_bone, cfg.singular_tolerance)
                if angle is not None:
                    break
            if angle is None:
                angle = prev_joints[k] if prev_joints is not None else 0.0
                logger.warning(f"IK target for {act.name} parallel to its axis, using {angle:.4f}")
            if cfg.clamp:
                angle = float(np.clip(angle, act.lower, act.upper))
            joints[k] = angle
        frame_r.append(parent_r @ rotation_about_axis(act.axis, np.array([joints[k]]))[0])

    euler = Rotation.from_matrix(root_r).as_euler('xyz')
    return ActuatorVector(np.concatenate([root_t, euler, joints]))
