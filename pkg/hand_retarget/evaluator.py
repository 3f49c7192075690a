"""
Trajectory evaluation: sequence of interest, lifting frames, lifting ratio and success
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from .errors import DegenerateInputError
from .hand_kinematics import ActuatorVector, Skeleton
from .scene import ContactSet, SceneState

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvaluationConfig:
    contact_epsilon: float = 0.005
    lift_margin: float = 0.005
    palm_distance: float = 0.2
    success_lift: float = 0.17
    min_touching: int = 2


@dataclass(frozen=True, eq=False)
class FrameRecord:
    """Everything recorded for one retargeted frame; scene is the state after the step"""
    t: float
    x: Skeleton
    action: ActuatorVector
    y: Skeleton
    contacts: ContactSet
    scene: SceneState
    palm_center: np.ndarray

    def to_dict(self) -> Dict:
        return {
            't': self.t,
            'x': self.x.to_list(),
            'action': self.action.to_list(),
            'y': self.y.to_list(),
            'palm_center': self.palm_center.tolist(),
            'contacts': self.contacts.to_dict(),
            'scene': self.scene.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'FrameRecord':
        return cls(
            t=float(data['t']),
            x=Skeleton(data['x']),
            action=ActuatorVector(data['action']),
            y=Skeleton(data['y']),
            contacts=ContactSet.from_dict(data['contacts']),
            scene=SceneState.from_dict(data['scene']),
            palm_center=np.array(data['palm_center'], dtype=float),
        )


@dataclass(frozen=True)
class TrajectoryMetrics:
    soi_start: Optional[int]
    lifting_ratio: float
    success: bool
    max_lift_height: float
    n_frames: int
    lifting_frames: int

    def to_dict(self) -> Dict:
        return {
            'soi_start': self.soi_start,
            'lifting_ratio': self.lifting_ratio,
            'success': self.success,
            'max_lift_height': self.max_lift_height,
            'n_frames': self.n_frames,
            'lifting_frames': self.lifting_frames,
        }


def _touching_count(frame: FrameRecord, cfg: EvaluationConfig) -> int:
    return int(np.count_nonzero(frame.contacts.distances <= cfg.contact_epsilon))


def sequence_of_interest(frames: Sequence[FrameRecord], cfg: Optional[EvaluationConfig] = None) -> Optional[int]:
    """Index of the first frame where at least two of the six contact points touch the object"""
    cfg = cfg or EvaluationConfig()
    for i, frame in enumerate(frames):
        if _touching_count(frame, cfg) >= cfg.min_touching:
            return i
    return None


def is_lifting_frame(frame: FrameRecord, z_table: float, cfg: Optional[EvaluationConfig] = None) -> bool:
    """
    The object is clear of the table, close to the palm centre, and at least
    one contact point is within d_max of it
    """
    cfg = cfg or EvaluationConfig()
    above_table = frame.scene.bottom_z() > z_table + cfg.lift_margin
    near_palm = np.linalg.norm(frame.scene.position - frame.palm_center) < cfg.palm_distance
    in_reach = bool(np.any(~frame.contacts.missing))
    return bool(above_table and near_palm and in_reach)


def lifting_ratio(frames: Sequence[FrameRecord], cfg: Optional[EvaluationConfig] = None) -> float:
    cfg = cfg or EvaluationConfig()
    soi = sequence_of_interest(frames, cfg)
    if soi is None:
        return 0.0
    window = frames[soi:]
    lifting = sum(is_lifting_frame(f, f.scene.z_table, cfg) for f in window)
    return lifting / len(window)


def max_lift_height(frames: Sequence[FrameRecord]) -> float:
    return max(f.scene.lift_height() for f in frames)


def is_success(frames: Sequence[FrameRecord], cfg: Optional[EvaluationConfig] = None) -> bool:
    """Held in the air on the last frame, or lifted more than the success height at any point"""
    cfg = cfg or EvaluationConfig()
    if not frames:
        raise DegenerateInputError("Cannot evaluate an empty trajectory")
    if sequence_of_interest(frames, cfg) is None:
        return False
    last = frames[-1]
    return is_lifting_frame(last, last.scene.z_table, cfg) or max_lift_height(frames) > cfg.success_lift


def evaluate_trajectory(frames: Sequence[FrameRecord], cfg: Optional[EvaluationConfig] = None) -> TrajectoryMetrics:
    cfg = cfg or EvaluationConfig()
    if not frames:
        raise DegenerateInputError("Cannot evaluate an empty trajectory")
    soi = sequence_of_interest(frames, cfg)
    lifting = 0 if soi is None else sum(is_lifting_frame(f, f.scene.z_table, cfg) for f in frames[soi:])
    return TrajectoryMetrics(
        soi_start=soi,
        lifting_ratio=lifting_ratio(frames, cfg),
        success=is_success(frames, cfg),
        max_lift_height=max_lift_height(frames),
        n_frames=len(frames),
        lifting_frames=lifting,
    )
