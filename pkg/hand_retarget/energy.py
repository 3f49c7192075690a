"""
Fitness functions minimized by the swarm

Every function has a single-skeleton form working on value types and a
batched form (suffix _batch) scoring P model skeletons against one source
skeleton at once.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Union

import numpy as np

from .errors import ConfigurationError, DegenerateInputError
from .hand_kinematics import (
    FINGERTIPS, N_JOINTS, KinematicState, Skeleton, hand_span_array,
    joint_angle_array, scale_factor_array,
)
from .scene import ContactSet, SceneState, contact_distance_batch

logger = logging.getLogger(__name__)

THUMB_TIP_WEIGHT = 10.0
FINGERTIP_WEIGHT = 3.0


def default_joint_weights() -> np.ndarray:
    weights = np.ones(N_JOINTS)
    weights[list(FINGERTIPS)] = FINGERTIP_WEIGHT
    weights[FINGERTIPS[0]] = THUMB_TIP_WEIGHT
    return weights


@dataclass(frozen=True, eq=False)
class EnergyWeights:
    """Weights and contact constants of the fitness function"""
    omega_pose: float = 0.2
    omega_task: float = 0.8
    omega_p: float = 0.5
    omega_a: float = 0.5
    omega_joint: np.ndarray = field(default_factory=default_joint_weights)
    omega_palm: float = 3.0
    omega_ee: float = 1.0
    omega_cost: float = 2.0
    d_max: float = 0.04

    def __post_init__(self):
        joint = np.array(self.omega_joint, dtype=float)
        if joint.shape != (N_JOINTS,):
            raise ConfigurationError(f"omega_joint needs {N_JOINTS} entries, got {joint.size}")
        joint.setflags(write=False)
        object.__setattr__(self, 'omega_joint', joint)

        scalars = {
            'omega_pose': self.omega_pose, 'omega_task': self.omega_task,
            'omega_p': self.omega_p, 'omega_a': self.omega_a,
            'omega_palm': self.omega_palm, 'omega_ee': self.omega_ee,
        }
        negative = [name for name, value in scalars.items() if value < 0]
        if negative or np.any(joint < 0):
            raise ConfigurationError("Energy weights must be >= 0", {'fields': negative or ['omega_joint']})
        if joint.sum() <= 0:
            raise ConfigurationError("omega_joint must have a positive sum")
        if 5 * self.omega_ee + self.omega_palm <= 0:
            raise ConfigurationError("omega_ee and omega_palm cannot both be 0")
        if self.d_max <= 0:
            raise ConfigurationError(f"d_max must be > 0, got {self.d_max}")
        if self.omega_cost < 1:
            raise ConfigurationError(f"omega_cost must be >= 1, got {self.omega_cost}")

    def normalized(self) -> 'EnergyWeights':
        """Rescale so that omega_pose + omega_task = 1 and omega_p + omega_a = 1"""
        mix = self.omega_pose + self.omega_task
        pose_mix = self.omega_p + self.omega_a
        if mix <= 0 or pose_mix <= 0:
            raise ConfigurationError("Weight pairs (omega_pose, omega_task) and (omega_p, omega_a) need a positive sum")
        return replace(
            self,
            omega_pose=self.omega_pose / mix, omega_task=self.omega_task / mix,
            omega_p=self.omega_p / pose_mix, omega_a=self.omega_a / pose_mix,
        )

    def with_task_weight(self, omega_task: float) -> 'EnergyWeights':
        if not 0.0 <= omega_task <= 1.0:
            raise ConfigurationError(f"omega_task must lie in [0, 1], got {omega_task}")
        return replace(self, omega_task=omega_task, omega_pose=1.0 - omega_task)

    def task_only(self) -> 'EnergyWeights':
        return replace(self, omega_pose=0.0, omega_task=1.0)

    @property
    def miss_distance(self) -> float:
        return self.omega_cost * self.d_max

    def to_dict(self) -> Dict:
        return {
            'omega_pose': self.omega_pose, 'omega_task': self.omega_task,
            'omega_p': self.omega_p, 'omega_a': self.omega_a,
            'omega_joint': self.omega_joint.tolist(),
            'omega_palm': self.omega_palm, 'omega_ee': self.omega_ee,
            'omega_cost': self.omega_cost, 'd_max': self.d_max,
        }


def _joints(s: Union[Skeleton, np.ndarray]) -> np.ndarray:
    return s.joints if isinstance(s, Skeleton) else np.asarray(s, dtype=float)


def e_position_batch(x_prime: np.ndarray, y: np.ndarray, omega_joint: np.ndarray) -> np.ndarray:
    """
    Weighted mean squared point error normalised by the summed hand spans.

    Args:
        x_prime: (...,21,3) scaled source skeletons
        y: (...,21,3) model skeletons, broadcast against x_prime
        omega_joint: (21,) per-point weights

    Returns:
        E_p per broadcast row
    """
    span = hand_span_array(x_prime) + hand_span_array(y)
    if np.any(span <= 0):
        raise DegenerateInputError("Zero hand span in position energy")
    diff = (np.asarray(x_prime) - np.asarray(y)) / np.asarray(span)[..., None, None]
    sq = np.sum(diff * diff, axis=-1)
    return np.sum(omega_joint * sq, axis=-1) / np.sum(omega_joint)


def e_position(x_prime: Skeleton, y: Skeleton, omega_joint: np.ndarray) -> float:
    return float(e_position_batch(_joints(x_prime), _joints(y), np.asarray(omega_joint, dtype=float)))


def e_angle_from_angles(theta_x: np.ndarray, theta_y: np.ndarray) -> np.ndarray:
    d = (theta_x - theta_y) / np.pi
    return np.mean(d * d, axis=-1)


def e_angle_batch(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return e_angle_from_angles(joint_angle_array(x), joint_angle_array(y))


def e_angle(x: Skeleton, y: Skeleton) -> float:
    """Normalised mean squared difference of the 15 relative joint angles, in [0, 1]"""
    return float(e_angle_batch(_joints(x), _joints(y)))


def e_pose_batch(x: np.ndarray, y: np.ndarray, w: EnergyWeights) -> np.ndarray:
    """
    Pose energy of the raw source skeleton x (21,3) against model skeletons
    y (P,21,3); x is rescaled into the domain of each y before comparing.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = scale_factor_array(x, y)
    x_prime = np.asarray(s)[..., None, None] * x
    energy = np.zeros(np.shape(s))
    if w.omega_p:
        energy = energy + w.omega_p * e_position_batch(x_prime, y, w.omega_joint)
    if w.omega_a:
        energy = energy + w.omega_a * e_angle_batch(x, y)
    return energy


def e_pose(x: Skeleton, y: Skeleton, w: EnergyWeights) -> float:
    return float(e_pose_batch(_joints(x), _joints(y), w))


def e_task_batch(distances: np.ndarray, w: EnergyWeights) -> np.ndarray:
    """Task energy from thresholded contact distances (...,6), palm first"""
    ratio = np.asarray(distances, dtype=float) / w.miss_distance
    sq = ratio * ratio
    weighted = w.omega_palm * sq[..., 0] + w.omega_ee * np.sum(sq[..., 1:], axis=-1)
    return weighted / (5 * w.omega_ee + w.omega_palm)


def e_task(contacts: ContactSet, w: EnergyWeights) -> float:
    """
    Weighted mean squared contact distance, scaled so a missing point
    contributes exactly its weight; all missing gives 1, all touching 0.
    """
    if contacts.d_max != w.d_max or contacts.omega_cost != w.omega_cost:
        raise ConfigurationError(
            "Contact set and weights disagree on d_max/omega_cost",
            {'contacts': [contacts.d_max, contacts.omega_cost], 'weights': [w.d_max, w.omega_cost]},
        )
    return float(e_task_batch(contacts.distances, w))


def fitness(x: Skeleton, y: Skeleton, contacts: ContactSet, w: EnergyWeights) -> float:
    """E = omega_pose * E_pose + omega_task * E_task"""
    total = 0.0
    if w.omega_pose:
        total += w.omega_pose * e_pose(x, y, w)
    if w.omega_task:
        total += w.omega_task * e_task(contacts, w)
    return total


def fitness_batch(x: Optional[np.ndarray], state: KinematicState, scene: SceneState, w: EnergyWeights) -> np.ndarray:
    """Fitness of P applied hand poses; contacts come from the model output. x may be None when omega_pose is 0"""
    total = np.zeros(state.joints.shape[0])
    if w.omega_pose:
        total = total + w.omega_pose * e_pose_batch(x, state.joints, w)
    if w.omega_task:
        distances, _ = contact_distance_batch(state.contact_points(), scene, w.d_max, w.omega_cost)
        total = total + w.omega_task * e_task_batch(distances, w)
    return total
