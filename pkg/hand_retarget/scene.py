"""
Scene - analytic object primitives, a table plane and a quasi-static grasp proxy

The object is a rigid union of primitives sharing one pose. Distances are
unsigned point-to-surface distances (0 inside). While the grasp rule holds
the object is welded to the palm frame; otherwise it falls under gravity and
lands inelastically on the table.
"""

import json
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import ConfigurationError
from .hand_kinematics import KinematicState

logger = logging.getLogger(__name__)

N_CONTACTS = 6  # palm centre + five fingertips

# Objects closer than this to the table count as resting on it
REST_TOLERANCE = 1e-9


class PrimitiveKind(Enum):
    SPHERE = "sphere"
    BOX = "box"
    CYLINDER = "cylinder"


_DIM_COUNT = {PrimitiveKind.SPHERE: 1, PrimitiveKind.BOX: 3, PrimitiveKind.CYLINDER: 2}


def _identity() -> np.ndarray:
    return np.eye(3)


def _rotation_from(data: Dict) -> np.ndarray:
    """A 'rotation' matrix if present, else 'rotation_euler' (extrinsic xyz, rad), else identity"""
    if 'rotation' in data:
        rotation = np.array(data['rotation'], dtype=float)
        if rotation.shape != (3, 3):
            raise ConfigurationError("rotation must be a 3x3 matrix")
        return rotation
    return Rotation.from_euler('xyz', data.get('rotation_euler', [0.0, 0.0, 0.0])).as_matrix()


@dataclass(frozen=True, eq=False)
class ObjectShape:
    """
    One primitive of the object union.

    dims: sphere (radius,), box (hx, hy, hz) half-extents,
    cylinder (radius, half_height) with its axis along local z.
    position/rotation place the primitive in the object frame.
    """
    kind: PrimitiveKind
    dims: np.ndarray
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rotation: np.ndarray = field(default_factory=_identity)

    def __post_init__(self):
        dims = np.array(self.dims, dtype=float).reshape(-1)
        if dims.shape != (_DIM_COUNT[self.kind],):
            raise ConfigurationError(f"{self.kind.value} needs {_DIM_COUNT[self.kind]} dimensions, got {dims.size}")
        if np.any(dims <= 0):
            raise ConfigurationError(f"{self.kind.value} dimensions must be > 0")
        object.__setattr__(self, 'dims', dims)
        object.__setattr__(self, 'position', np.array(self.position, dtype=float))
        object.__setattr__(self, 'rotation', np.array(self.rotation, dtype=float))

    def world_frame(self, obj_rotation: np.ndarray, obj_position: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return obj_rotation @ self.rotation, obj_rotation @ self.position + obj_position

    def local_distance(self, local: np.ndarray) -> np.ndarray:
        """Unsigned distance for points (...,3) already in the primitive frame"""
        if self.kind is PrimitiveKind.SPHERE:
            return np.maximum(np.linalg.norm(local, axis=-1) - self.dims[0], 0.0)
        if self.kind is PrimitiveKind.BOX:
            q = np.abs(local) - self.dims
            return np.linalg.norm(np.maximum(q, 0.0), axis=-1)
        radial = np.linalg.norm(local[..., :2], axis=-1) - self.dims[0]
        axial = np.abs(local[..., 2]) - self.dims[1]
        q = np.stack([radial, axial], axis=-1)
        return np.linalg.norm(np.maximum(q, 0.0), axis=-1)

    def distance(self, points: np.ndarray, obj_rotation: np.ndarray, obj_position: np.ndarray) -> np.ndarray:
        r, t = self.world_frame(obj_rotation, obj_position)
        local = (np.asarray(points, dtype=float) - t) @ r
        return self.local_distance(local)

    def lowest_z(self, obj_rotation: np.ndarray, obj_position: np.ndarray) -> float:
        r, t = self.world_frame(obj_rotation, obj_position)
        if self.kind is PrimitiveKind.SPHERE:
            return float(t[2] - self.dims[0])
        if self.kind is PrimitiveKind.BOX:
            return float(t[2] - np.sum(np.abs(r[2]) * self.dims))
        axis_z = r[2, 2]
        radius, half_height = self.dims
        return float(t[2] - abs(axis_z) * half_height - radius * np.sqrt(max(0.0, 1.0 - axis_z ** 2)))

    def corners(self, obj_rotation: np.ndarray, obj_position: np.ndarray) -> np.ndarray:
        """World corners of the primitive's local bounding box"""
        if self.kind is PrimitiveKind.BOX:
            half = self.dims
        elif self.kind is PrimitiveKind.SPHERE:
            half = np.full(3, self.dims[0])
        else:
            half = np.array([self.dims[0], self.dims[0], self.dims[1]])
        signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=float)
        r, t = self.world_frame(obj_rotation, obj_position)
        return (signs * half) @ r.T + t

    def to_dict(self) -> Dict:
        out = {'kind': self.kind.value, 'position': self.position.tolist(),
               'rotation': self.rotation.tolist()}
        if self.kind is PrimitiveKind.SPHERE:
            out['radius'] = float(self.dims[0])
        elif self.kind is PrimitiveKind.BOX:
            out['half_extents'] = self.dims.tolist()
        else:
            out['radius'], out['half_height'] = (float(v) for v in self.dims)
        return out

    @classmethod
    def from_dict(cls, data: Dict) -> 'ObjectShape':
        try:
            kind = PrimitiveKind(data['kind'])
        except (KeyError, ValueError):
            raise ConfigurationError(f"Unknown primitive kind in {data!r}")
        try:
            if kind is PrimitiveKind.SPHERE:
                dims = [data['radius']]
            elif kind is PrimitiveKind.BOX:
                dims = data['half_extents']
            else:
                dims = [data['radius'], data['half_height']]
        except KeyError as e:
            raise ConfigurationError(f"{kind.value} primitive missing field {e}")
        return cls(
            kind=kind,
            dims=dims,
            position=data.get('position', [0.0, 0.0, 0.0]),
            rotation=_rotation_from(data),
        )


@dataclass(frozen=True, eq=False)
class ContactConfig:
    """Grasp-proxy thresholds"""
    contact_epsilon: float = 0.005
    opposition_angle_deg: float = 90.0
    min_touching: int = 2
    gravity: float = 9.81


@dataclass(frozen=True, eq=False)
class HandPoints:
    """Palm frame and fingertips of one applied hand pose"""
    palm_center: np.ndarray
    palm_rotation: np.ndarray
    fingertips: np.ndarray

    @classmethod
    def from_state(cls, state: KinematicState, row: int = 0) -> 'HandPoints':
        return cls(
            palm_center=state.palm_center[row].copy(),
            palm_rotation=state.palm_rotation[row].copy(),
            fingertips=state.fingertips[row].copy(),
        )

    def contact_points(self) -> np.ndarray:
        return np.vstack([self.palm_center[None, :], self.fingertips])


@dataclass(frozen=True, eq=False)
class ContactSet:
    """
    Per contact point (palm centre, then five fingertips): the distance used by
    the task energy, the missing flag and the raw distance to the object
    """
    distances: np.ndarray
    missing: np.ndarray
    raw: np.ndarray
    d_max: float
    omega_cost: float

    def touching(self, epsilon: float) -> np.ndarray:
        return self.raw <= epsilon

    def to_dict(self) -> Dict:
        return {'distances': self.distances.tolist(), 'missing': self.missing.tolist(),
                'raw': self.raw.tolist(), 'd_max': self.d_max, 'omega_cost': self.omega_cost}

    @classmethod
    def from_dict(cls, data: Dict) -> 'ContactSet':
        return cls(
            distances=np.array(data['distances'], dtype=float),
            missing=np.array(data['missing'], dtype=bool),
            raw=np.array(data['raw'], dtype=float),
            d_max=float(data['d_max']),
            omega_cost=float(data['omega_cost']),
        )


@dataclass(frozen=True, eq=False)
class SceneState:
    """Object union pose and motion, the table plane and the held flag"""
    primitives: Tuple[ObjectShape, ...]
    position: np.ndarray
    rotation: np.ndarray
    velocity: np.ndarray
    z_table: float
    held: bool
    z0: float
    palm_position: Optional[np.ndarray] = None
    palm_rotation: Optional[np.ndarray] = None
    name: str = "object"

    def distances(self, points: np.ndarray) -> np.ndarray:
        """Minimum over all primitives of the distance from points (...,3)"""
        per_primitive = [p.distance(points, self.rotation, self.position) for p in self.primitives]
        return np.min(np.stack(per_primitive, axis=0), axis=0)

    def bottom_z(self) -> float:
        return min(p.lowest_z(self.rotation, self.position) for p in self.primitives)

    def aabb(self) -> Tuple[np.ndarray, np.ndarray]:
        """World axis-aligned bounds of the object (conservative for spheres and cylinders)"""
        corners = np.vstack([p.corners(self.rotation, self.position) for p in self.primitives])
        return corners.min(axis=0), corners.max(axis=0)

    def lift_height(self) -> float:
        return float(self.position[2] - self.z0)

    def to_dict(self) -> Dict:
        return {
            'name': self.name,
            'table_height': self.z_table,
            'z0': self.z0,
            'held': self.held,
            'position': self.position.tolist(),
            'rotation': self.rotation.tolist(),
            'velocity': self.velocity.tolist(),
            'palm_position': None if self.palm_position is None else self.palm_position.tolist(),
            'palm_rotation': None if self.palm_rotation is None else self.palm_rotation.tolist(),
            'primitives': [p.to_dict() for p in self.primitives],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'SceneState':
        """Accepts both the scene description file and the full state written in records"""
        try:
            if 'object' in data:
                obj = data['object']
                primitives = tuple(ObjectShape.from_dict(p) for p in obj['primitives'])
                position = np.array(obj['position'], dtype=float)
                rotation = _rotation_from(obj)
                velocity = np.zeros(3)
                held = False
                z0 = float(position[2])
                palm_position = palm_rotation = None
            else:
                primitives = tuple(ObjectShape.from_dict(p) for p in data['primitives'])
                position = np.array(data['position'], dtype=float)
                rotation = np.array(data['rotation'], dtype=float)
                velocity = np.array(data['velocity'], dtype=float)
                held = bool(data['held'])
                z0 = float(data['z0'])
                palm_position = None if data.get('palm_position') is None else np.array(data['palm_position'])
                palm_rotation = None if data.get('palm_rotation') is None else np.array(data['palm_rotation'])
            z_table = float(data.get('table_height', 0.0))
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigurationError(f"Malformed scene description: {e}")
        if not primitives:
            raise ConfigurationError("Scene object needs at least one primitive")

        scene = cls(primitives=primitives, position=position, rotation=rotation, velocity=velocity,
                    z_table=z_table, held=held, z0=z0, palm_position=palm_position,
                    palm_rotation=palm_rotation, name=data.get('name', 'object'))
        if scene.bottom_z() < z_table - 1e-6:
            raise ConfigurationError(f"Object {scene.name} penetrates the table plane")
        return scene

    @classmethod
    def load(cls, path: Union[str, Path]) -> 'SceneState':
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"Cannot read scene {path}: {e}")
        scene = cls.from_dict(data)
        logger.debug(f"Loaded scene {scene.name} from {path}")
        return scene


def point_object_distance(p: np.ndarray, shape: ObjectShape,
                          obj_rotation: Optional[np.ndarray] = None,
                          obj_position: Optional[np.ndarray] = None) -> float:
    """Unsigned distance from p to the primitive's surface, 0 inside"""
    obj_rotation = np.eye(3) if obj_rotation is None else obj_rotation
    obj_position = np.zeros(3) if obj_position is None else obj_position
    return float(shape.distance(np.asarray(p, dtype=float), obj_rotation, obj_position))


def _check_contact_constants(d_max: float, omega_cost: float):
    if d_max <= 0:
        raise ConfigurationError(f"d_max must be > 0, got {d_max}")
    if omega_cost < 1:
        raise ConfigurationError(f"omega_cost must be >= 1, got {omega_cost}")


def apply_miss_rule(raw: np.ndarray, d_max: float, omega_cost: float) -> Tuple[np.ndarray, np.ndarray]:
    """Points at or beyond d_max are missing and take the distance omega_cost * d_max"""
    missing = raw >= d_max
    return np.where(missing, omega_cost * d_max, raw), missing


def contact_distances(palm: np.ndarray, fingertips: np.ndarray, scene: SceneState,
                      d_max: float, omega_cost: float) -> ContactSet:
    """ContactSet for the palm centre and five fingertips against the scene object"""
    _check_contact_constants(d_max, omega_cost)
    points = np.vstack([np.asarray(palm, dtype=float)[None, :], np.asarray(fingertips, dtype=float)])
    raw = scene.distances(points)
    distances, missing = apply_miss_rule(raw, d_max, omega_cost)
    return ContactSet(distances=distances, missing=missing, raw=raw, d_max=float(d_max), omega_cost=float(omega_cost))


def contact_distance_batch(points: np.ndarray, scene: SceneState, d_max: float,
                           omega_cost: float) -> Tuple[np.ndarray, np.ndarray]:
    """Thresholded and raw distances for (P,6,3) contact points"""
    _check_contact_constants(d_max, omega_cost)
    raw = scene.distances(points)
    distances, _ = apply_miss_rule(raw, d_max, omega_cost)
    return distances, raw


def grasp_rule(points: np.ndarray, raw: np.ndarray, center: np.ndarray, cfg: ContactConfig) -> bool:
    """
    At least cfg.min_touching points within the contact epsilon, and two of
    them whose directions from the object centre subtend more than the
    opposition angle
    """
    touching = raw <= cfg.contact_epsilon
    if np.count_nonzero(touching) < cfg.min_touching:
        return False
    dirs = points[touching] - center
    norms = np.linalg.norm(dirs, axis=-1)
    dirs = dirs[norms > 0] / norms[norms > 0, None]
    if len(dirs) < 2:
        return False
    cosines = np.clip(dirs @ dirs.T, -1.0, 1.0)
    angles = np.arccos(cosines[np.triu_indices(len(dirs), k=1)])
    return bool(np.any(angles > np.radians(cfg.opposition_angle_deg)))


def _rest_on_table(scene: SceneState, position: np.ndarray) -> Tuple[np.ndarray, bool]:
    """Push the object up onto the table if it would sink below it"""
    bottom = min(p.lowest_z(scene.rotation, position) for p in scene.primitives)
    if bottom < scene.z_table:
        position = position.copy()
        position[2] += scene.z_table - bottom
        return position, True
    return position, False


def _free_fall(scene: SceneState, dt: float, gravity: float) -> SceneState:
    resting = scene.bottom_z() <= scene.z_table + REST_TOLERANCE and scene.velocity[2] <= 0.0
    if resting:
        return replace(scene, velocity=np.zeros(3), held=False)
    velocity = scene.velocity + np.array([0.0, 0.0, -gravity * dt])
    position, landed = _rest_on_table(scene, scene.position + velocity * dt)
    if landed:
        velocity = np.zeros(3)
    return replace(scene, position=position, velocity=velocity, held=False)


def step_scene(scene: SceneState, hand: HandPoints, dt: float, cfg: Optional[ContactConfig] = None) -> SceneState:
    """
    Advance the grasp proxy by one step.

    A held object is first carried by the palm's rigid motion since the last
    step; the grasp rule is then checked against that pose with the new hand
    points. If it holds the object stays attached, otherwise it is released
    at its pre-step pose and falls.

    Args:
        scene: State at the start of the step
        hand: Palm frame and fingertips applied during this step
        dt: Step duration in seconds
        cfg: Grasp thresholds

    Returns:
        The new scene state; the input is not modified
    """
    if dt <= 0:
        raise ConfigurationError(f"dt must be > 0, got {dt}")
    cfg = cfg or ContactConfig()
    points = hand.contact_points()

    candidate = scene
    if scene.held and scene.palm_rotation is not None and scene.palm_position is not None:
        delta = hand.palm_rotation @ scene.palm_rotation.T
        candidate = replace(
            scene,
            rotation=delta @ scene.rotation,
            position=delta @ (scene.position - scene.palm_position) + hand.palm_center,
        )

    raw = candidate.distances(points)
    if grasp_rule(points, raw, candidate.position, cfg):
        position, _ = _rest_on_table(candidate, candidate.position)
        new = replace(candidate, position=position, velocity=(position - scene.position) / dt, held=True)
    else:
        if scene.held:
            logger.warning(f"Grasp rule failed, releasing {scene.name} at z={scene.position[2]:.4f}")
        new = _free_fall(scene, dt, cfg.gravity)
    return replace(new, palm_position=hand.palm_center.copy(), palm_rotation=hand.palm_rotation.copy())
