"""
Hand kinematics - skeleton layout, the 29-DoF hand model and forward kinematics

Skeleton convention (21 points): index 0 is the wrist, then per finger in the
order thumb, index, middle, ring, pinky the four points [MCP, PIP, DIP, TIP].

The hand model is expressed relative to its rest pose: every actuator rotates
its subtree about the rest position of its pivot point, around an axis given
in rest (wrist-frame) coordinates. With all actuators at zero and an identity
global pose the model reproduces the stored rest skeleton exactly.
"""

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import ConfigurationError, DegenerateInputError, DegenerateSkeletonError

logger = logging.getLogger(__name__)

N_JOINTS = 21
N_BONES = N_JOINTS - 1
N_ANGLES = 15
N_GLOBAL = 6
N_ACTUATORS = 23
ACTION_DIM = N_GLOBAL + N_ACTUATORS

FINGERS = ('thumb', 'index', 'middle', 'ring', 'pinky')
FINGER_CHAINS: Tuple[Tuple[int, ...], ...] = tuple(
    (0, 1 + 4 * f, 2 + 4 * f, 3 + 4 * f, 4 + 4 * f) for f in range(5)
)
FINGERTIPS = tuple(chain[-1] for chain in FINGER_CHAINS)
PALM_POINTS = (0, 1, 5, 9, 13, 17)

# Bone i runs from BONE_PARENTS[i] to BONE_CHILDREN[i], finger by finger
BONE_PARENTS = np.array([chain[k] for chain in FINGER_CHAINS for k in range(4)])
BONE_CHILDREN = np.array([chain[k + 1] for chain in FINGER_CHAINS for k in range(4)])

ROOT_FRAME = 'root'
ArrayLike = Union[np.ndarray, Sequence]

# Bones shorter than this are treated as zero length
MIN_BONE_LENGTH = 1e-12


def _frozen(values: ArrayLike, shape: Tuple[int, ...], what: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.shape != shape:
        raise DegenerateInputError(f"{what} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DegenerateInputError(f"{what} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Skeleton:
    """21 ordered 3-D joint positions in meters"""
    joints: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'joints', _frozen(self.joints, (N_JOINTS, 3), 'Skeleton'))

    @property
    def wrist(self) -> np.ndarray:
        return self.joints[0]

    @property
    def fingertips(self) -> np.ndarray:
        return self.joints[list(FINGERTIPS)]

    def scaled(self, k: float) -> 'Skeleton':
        """Uniform scaling about the origin"""
        return Skeleton(self.joints * k)

    def transformed(self, rotation: np.ndarray, translation: ArrayLike) -> 'Skeleton':
        """Rigid transform p -> R p + t"""
        return Skeleton(self.joints @ np.asarray(rotation, dtype=float).T + np.asarray(translation, dtype=float))

    def to_list(self) -> List[List[float]]:
        return self.joints.tolist()


@dataclass(frozen=True, eq=False)
class BoneVectors:
    """J_1..J_20: child minus parent joint position along each finger chain"""
    vectors: np.ndarray

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.vectors, axis=-1)


@dataclass(frozen=True, eq=False)
class JointAngles:
    """theta_1..theta_15: interior angles between consecutive bones, 3 per finger"""
    angles: np.ndarray


@dataclass(frozen=True, eq=False)
class ActuatorVector:
    """
    29 reals: translation (3, m), extrinsic XYZ Euler rotation (3, rad),
    then the 23 joint actuator angles (rad)
    """
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'values', _frozen(self.values, (ACTION_DIM,), 'ActuatorVector'))

    @classmethod
    def zeros(cls) -> 'ActuatorVector':
        return cls(np.zeros(ACTION_DIM))

    @property
    def translation(self) -> np.ndarray:
        return self.values[:3]

    @property
    def rotation(self) -> np.ndarray:
        return self.values[3:N_GLOBAL]

    @property
    def joints(self) -> np.ndarray:
        return self.values[N_GLOBAL:]

    def clamped(self, spec: 'HandModelSpec') -> 'ActuatorVector':
        return ActuatorVector(spec.clamp(self.values))

    def to_list(self) -> List[float]:
        return self.values.tolist()


@dataclass(frozen=True, eq=False)
class Actuator:
    """One single-axis rotational joint of the hand model"""
    name: str
    parent: int            # index of the parent actuator, -1 for the global frame
    pivot: int             # skeleton point the rotation is centred on
    drives: Optional[int]  # skeleton point whose bone this actuator orients (None: not solved by IK)
    axis: np.ndarray       # unit axis in rest wrist-frame coordinates
    lower: float
    upper: float


@dataclass(frozen=True, eq=False)
class HandModelSpec:
    """Kinematic tree, limits and rest geometry of the actuated hand model"""
    name: str
    rest_skeleton: np.ndarray
    palm_center: np.ndarray
    palm_frame: int
    actuators: Tuple[Actuator, ...]
    point_frames: Tuple[int, ...]
    source_hash: str

    @property
    def lower(self) -> np.ndarray:
        return np.array([a.lower for a in self.actuators])

    @property
    def upper(self) -> np.ndarray:
        return np.array([a.upper for a in self.actuators])

    @property
    def link_lengths(self) -> np.ndarray:
        return np.linalg.norm(bone_vector_array(self.rest_skeleton), axis=-1)

    @property
    def rest(self) -> Skeleton:
        return Skeleton(self.rest_skeleton)

    def clamp(self, actions: np.ndarray) -> np.ndarray:
        """Clamp the joint part of one or many action vectors to the actuator limits"""
        actions = np.array(actions, dtype=float)
        actions[..., N_GLOBAL:] = np.clip(actions[..., N_GLOBAL:], self.lower, self.upper)
        return actions

    @classmethod
    def from_dict(cls, data: Dict) -> 'HandModelSpec':
        """Build and validate a spec from its JSON document"""
        try:
            rest = np.array(data['rest_skeleton'], dtype=float)
            palm_center = np.array(data['palm_center'], dtype=float)
            raw_actuators = data['actuators']
            raw_points = data['point_frames']
        except KeyError as e:
            raise ConfigurationError(f"Hand spec missing field {e}")

        if rest.shape != (N_JOINTS, 3) or not np.all(np.isfinite(rest)):
            raise ConfigurationError("rest_skeleton must be 21 finite 3-D points")
        if palm_center.shape != (3,):
            raise ConfigurationError("palm_center must be a 3-D point")
        if len(raw_actuators) != N_ACTUATORS:
            raise ConfigurationError(f"Expected {N_ACTUATORS} actuators, got {len(raw_actuators)}")

        names = [a['name'] for a in raw_actuators]
        if len(set(names)) != len(names):
            raise ConfigurationError("Actuator names must be unique")
        order = _topological_order(raw_actuators)
        if order != list(range(len(raw_actuators))):
            raise ConfigurationError("Actuators must be listed parents-first")

        index_of = {name: i for i, name in enumerate(names)}
        actuators = []
        for raw in raw_actuators:
            axis = np.array(raw['axis'], dtype=float)
            if axis.shape != (3,) or abs(np.linalg.norm(axis) - 1.0) > 1e-9:
                raise ConfigurationError(f"Actuator {raw['name']}: axis must be a unit 3-vector")
            lower, upper = (float(v) for v in raw['limits'])
            if not lower <= 0.0 <= upper:
                raise ConfigurationError(f"Actuator {raw['name']}: limits must bracket the rest angle 0")
            pivot = int(raw['pivot'])
            drives = raw.get('drives')
            if not 0 <= pivot < N_JOINTS or (drives is not None and not 0 <= int(drives) < N_JOINTS):
                raise ConfigurationError(f"Actuator {raw['name']}: pivot/drives outside the skeleton")
            axis.setflags(write=False)
            actuators.append(Actuator(
                name=raw['name'],
                parent=-1 if raw.get('parent') is None else index_of[raw['parent']],
                pivot=pivot,
                drives=None if drives is None else int(drives),
                axis=axis,
                lower=lower,
                upper=upper,
            ))

        if len(raw_points) != N_JOINTS:
            raise ConfigurationError("point_frames must name a frame for each of the 21 points")
        point_frames = []
        for frame in raw_points:
            if frame == ROOT_FRAME:
                point_frames.append(-1)
            elif frame in index_of:
                point_frames.append(index_of[frame])
            else:
                raise ConfigurationError(f"point_frames references unknown link {frame!r}")

        palm_frame_name = data.get('palm_frame', ROOT_FRAME)
        if palm_frame_name != ROOT_FRAME and palm_frame_name not in index_of:
            raise ConfigurationError(f"palm_frame references unknown link {palm_frame_name!r}")

        lengths = np.linalg.norm(bone_vector_array(rest), axis=-1)
        if np.any(lengths <= MIN_BONE_LENGTH):
            raise ConfigurationError("All rest link lengths must be > 0")

        rest.setflags(write=False)
        palm_center.setflags(write=False)
        canonical = json.dumps(data, sort_keys=True, separators=(',', ':'))
        return cls(
            name=data.get('name', 'hand'),
            rest_skeleton=rest,
            palm_center=palm_center,
            palm_frame=-1 if palm_frame_name == ROOT_FRAME else index_of[palm_frame_name],
            actuators=tuple(actuators),
            point_frames=tuple(point_frames),
            source_hash=hashlib.sha256(canonical.encode()).hexdigest(),
        )

    @classmethod
    def load(cls, path: Union[str, Path]) -> 'HandModelSpec':
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"Cannot read hand spec {path}: {e}")
        spec = cls.from_dict(data)
        logger.debug(f"Loaded hand spec {spec.name} from {path}")
        return spec


def _topological_order(raw_actuators: List[Dict]) -> List[int]:
    """Parents-first order of the actuator tree; raises on cycles or dangling parents"""
    names = [a['name'] for a in raw_actuators]
    index_of = {name: i for i, name in enumerate(names)}
    parent_of = {}
    for i, raw in enumerate(raw_actuators):
        parent = raw.get('parent')
        if parent is not None and parent not in index_of:
            raise ConfigurationError(f"Actuator {raw['name']} has missing parent link {parent!r}")
        parent_of[i] = None if parent is None else index_of[parent]

    order: List[int] = []
    state = {}  # 1 = visiting, 2 = done

    def visit(i: int):
        if state.get(i) == 2:
            return
        if state.get(i) == 1:
            raise ConfigurationError(f"Kinematic tree has a cycle through {names[i]}")
        state[i] = 1
        if parent_of[i] is not None:
            visit(parent_of[i])
        state[i] = 2
        order.append(i)

    for i in range(len(raw_actuators)):
        visit(i)
    return order


@dataclass(frozen=True, eq=False)
class KinematicState:
    """Batched FK output: joints (P,21,3), palm centre (P,3), palm rotation (P,3,3)"""
    joints: np.ndarray
    palm_center: np.ndarray
    palm_rotation: np.ndarray

    @property
    def fingertips(self) -> np.ndarray:
        return self.joints[:, list(FINGERTIPS)]

    def contact_points(self) -> np.ndarray:
        """(P,6,3): palm centre first, then the five fingertips"""
        return np.concatenate([self.palm_center[:, None, :], self.fingertips], axis=1)


def rotation_about_axis(axis: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Rodrigues rotation matrices (P,3,3) for a unit axis and P angles"""
    angles = np.asarray(angles, dtype=float)
    x, y, z = axis
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    k2 = k @ k
    s = np.sin(angles)[:, None, None]
    c = (1.0 - np.cos(angles))[:, None, None]
    return np.eye(3) + s * k + c * k2


def global_rotation(euler_xyz: np.ndarray) -> np.ndarray:
    """Extrinsic XYZ Euler angles (P,3) to rotation matrices (P,3,3)"""
    return Rotation.from_euler('xyz', np.atleast_2d(euler_xyz)).as_matrix()


def forward_kinematics_batch(spec: HandModelSpec, actions: np.ndarray) -> KinematicState:
    """
    Forward kinematics for P action vectors at once.

    Joint actuators are clamped to their limits before use.

    Args:
        spec: Hand model
        actions: (P,29) or (29,) action vectors

    Returns:
        KinematicState with the model skeleton y, palm centre and palm frame
    """
    actions = np.atleast_2d(np.asarray(actions, dtype=float))
    q = np.clip(actions[:, N_GLOBAL:], spec.lower, spec.upper)
    root_r = global_rotation(actions[:, 3:N_GLOBAL])
    root_t = actions[:, :3]

    frame_r: List[np.ndarray] = []
    frame_t: List[np.ndarray] = []
    for k, act in enumerate(spec.actuators):
        parent_r, parent_t = (root_r, root_t) if act.parent < 0 else (frame_r[act.parent], frame_t[act.parent])
        local_r = rotation_about_axis(act.axis, q[:, k])
        pivot = spec.rest_skeleton[act.pivot]
        local_t = pivot - np.einsum('pij,j->pi', local_r, pivot)
        frame_r.append(np.matmul(parent_r, local_r))
        frame_t.append(np.einsum('pij,pj->pi', parent_r, local_t) + parent_t)

    def frame(index: int) -> Tuple[np.ndarray, np.ndarray]:
        return (root_r, root_t) if index < 0 else (frame_r[index], frame_t[index])

    joints = np.empty((actions.shape[0], N_JOINTS, 3))
    for i, f in enumerate(spec.point_frames):
        r, t = frame(f)
        joints[:, i] = np.einsum('pij,j->pi', r, spec.rest_skeleton[i]) + t

    palm_r, palm_t = frame(spec.palm_frame)
    palm_center = np.einsum('pij,j->pi', palm_r, spec.palm_center) + palm_t
    return KinematicState(joints=joints, palm_center=palm_center, palm_rotation=palm_r)


def forward_kinematics(spec: HandModelSpec, a: Union[ActuatorVector, np.ndarray]) -> Skeleton:
    """Observation y for one action vector"""
    values = a.values if isinstance(a, ActuatorVector) else a
    return Skeleton(forward_kinematics_batch(spec, values).joints[0])


def _joints_of(s: Union[Skeleton, np.ndarray]) -> np.ndarray:
    return s.joints if isinstance(s, Skeleton) else np.asarray(s, dtype=float)


def bone_vector_array(joints: np.ndarray) -> np.ndarray:
    """(...,21,3) -> (...,20,3) bone vectors in chain order"""
    joints = np.asarray(joints, dtype=float)
    return joints[..., BONE_CHILDREN, :] - joints[..., BONE_PARENTS, :]


def bone_vectors(s: Skeleton) -> BoneVectors:
    return BoneVectors(bone_vector_array(_joints_of(s)))


def _check_bones(norms: np.ndarray, what: str):
    if np.any(norms <= MIN_BONE_LENGTH):
        bad = np.argwhere(norms <= MIN_BONE_LENGTH)[0]
        raise DegenerateSkeletonError(f"Zero-length bone in {what}", {'bone': int(bad[-1])})


def joint_angle_array(joints: np.ndarray) -> np.ndarray:
    """(...,21,3) -> (...,15) interior angles in [0, pi]"""
    bones = bone_vector_array(joints)
    _check_bones(np.linalg.norm(bones, axis=-1), 'skeleton')
    chains = bones.reshape(bones.shape[:-2] + (5, 4, 3))
    first, second = chains[..., :3, :], chains[..., 1:, :]
    cross = np.linalg.norm(np.cross(first, second), axis=-1)
    dot = np.sum(first * second, axis=-1)
    angles = np.arctan2(cross, dot)
    return angles.reshape(angles.shape[:-2] + (N_ANGLES,))


def joint_angles(s: Skeleton) -> JointAngles:
    return JointAngles(joint_angle_array(_joints_of(s)))


def scale_factor_array(x_joints: np.ndarray, y_joints: np.ndarray) -> np.ndarray:
    """Mean per-bone length ratio |J_i(y)| / |J_i(x)|, broadcast over leading axes"""
    x_norms = np.linalg.norm(bone_vector_array(x_joints), axis=-1)
    _check_bones(x_norms, 'x')
    y_norms = np.linalg.norm(bone_vector_array(y_joints), axis=-1)
    return np.mean(y_norms / x_norms, axis=-1)


def scale_factor(x: Skeleton, y: Skeleton) -> float:
    """Global ratio s that maps the source skeleton x into the model domain of y"""
    return float(scale_factor_array(_joints_of(x), _joints_of(y)))


def normalize_skeleton(x: Skeleton, s: float) -> Skeleton:
    """x' = s * x (all points scaled about the origin)"""
    return x.scaled(s)


def hand_span_array(joints: np.ndarray) -> np.ndarray:
    """Largest wrist-to-fingertip distance, broadcast over leading axes"""
    joints = np.asarray(joints, dtype=float)
    tips = joints[..., list(FINGERTIPS), :] - joints[..., :1, :]
    return np.max(np.linalg.norm(tips, axis=-1), axis=-1)
