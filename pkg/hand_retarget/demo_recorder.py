"""
Demonstration dataset recorder

Turns successful retargeted trajectories into state-action pairs for an
external imitation learner. The dataset is JSON Lines: a header line, then
one {traj_id, t, state, action} object per frame. Floats are written with
their shortest round-tripping repr, so import reproduces every value exactly.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DegenerateInputError, DemoValidationError
from .evaluator import EvaluationConfig, FrameRecord, is_success
from .hand_kinematics import ACTION_DIM, N_ACTUATORS, ActuatorVector
from .trajectory_io import RecordedTrajectory

logger = logging.getLogger(__name__)

DEMO_FORMAT = 'hand-retarget-demos'
DEMO_VERSION = 1
STATE_DIM = 3 + 3 + N_ACTUATORS + N_ACTUATORS + 5

STATE_LAYOUT = {
    'rel_pos': [0, 3],
    'rel_vel': [3, 6],
    'joint_angles': [6, 6 + N_ACTUATORS],
    'joint_vels': [6 + N_ACTUATORS, 6 + 2 * N_ACTUATORS],
    'd_contact': [6 + 2 * N_ACTUATORS, STATE_DIM],
}


@dataclass(frozen=True, eq=False)
class StateVector:
    rel_pos: np.ndarray
    rel_vel: np.ndarray
    joint_angles: np.ndarray
    joint_vels: np.ndarray
    d_contact: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.rel_pos, self.rel_vel, self.joint_angles, self.joint_vels, self.d_contact])

    @classmethod
    def from_array(cls, values: Sequence[float]) -> 'StateVector':
        arr = np.asarray(values, dtype=float)
        if arr.shape != (STATE_DIM,):
            raise DemoValidationError(f"State vector must have length {STATE_DIM}, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise DemoValidationError("State vector contains non-finite values")
        parts = {name: arr[lo:hi] for name, (lo, hi) in STATE_LAYOUT.items()}
        return cls(**parts)


@dataclass(frozen=True, eq=False)
class DemoFrame:
    t: float
    state: StateVector
    action: ActuatorVector

    def to_dict(self, traj_id: str) -> Dict:
        return {'traj_id': traj_id, 't': self.t, 'state': self.state.as_array().tolist(),
                'action': self.action.to_list()}


@dataclass(frozen=True, eq=False)
class DemoTrajectory:
    traj_id: str
    frames: List[DemoFrame]


def extract_state(frame: FrameRecord, prev: Optional[FrameRecord], dt: float) -> StateVector:
    """
    State of one frame: palm-minus-object position and velocity, actuator
    angles and their velocities, fingertip distances clipped at the miss
    distance. Velocities are backward differences, zero without a predecessor.
    """
    if dt <= 0:
        raise DemoValidationError(f"dt must be > 0, got {dt}")
    rel_pos = frame.palm_center - frame.scene.position
    joints = np.array(frame.action.joints)
    if prev is None:
        rel_vel = np.zeros(3)
        joint_vels = np.zeros(N_ACTUATORS)
    else:
        hand_vel = (frame.palm_center - prev.palm_center) / dt
        object_vel = (frame.scene.position - prev.scene.position) / dt
        rel_vel = hand_vel - object_vel
        joint_vels = (joints - prev.action.joints) / dt

    contacts = frame.contacts
    d_contact = np.minimum(contacts.raw[1:], contacts.omega_cost * contacts.d_max)
    return StateVector(rel_pos=rel_pos, rel_vel=rel_vel, joint_angles=joints,
                       joint_vels=joint_vels, d_contact=d_contact)


def build_demo(recorded: RecordedTrajectory) -> DemoTrajectory:
    dt = 1.0 / recorded.fps
    frames = []
    prev = None
    for frame in recorded.frames:
        frames.append(DemoFrame(t=frame.t, state=extract_state(frame, prev, dt), action=frame.action))
        prev = frame
    return DemoTrajectory(traj_id=recorded.traj_id, frames=frames)


def export_demos(trajectories: Sequence[RecordedTrajectory], path: Union[str, Path],
                 model_spec_hash: str, config: Dict[str, Any],
                 eval_cfg: Optional[EvaluationConfig] = None) -> Path:
    """
    Write successful trajectories as a demonstration dataset.

    Raises:
        DemoValidationError: a trajectory is not a successful grasp
    """
    eval_cfg = eval_cfg or EvaluationConfig()
    failed = [t.traj_id for t in trajectories if not t.frames or not is_success(t.frames, eval_cfg)]
    if failed:
        raise DemoValidationError("Only successful trajectories can be exported", {'failed': failed})

    header = {
        'format': DEMO_FORMAT,
        'version': DEMO_VERSION,
        'model_spec_hash': model_spec_hash,
        'config': config,
        'state_layout': STATE_LAYOUT,
    }
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            f.write(json.dumps(header) + '\n')
            for recorded in trajectories:
                demo = build_demo(recorded)
                for frame in demo.frames:
                    f.write(json.dumps(frame.to_dict(demo.traj_id)) + '\n')
    except OSError as e:
        raise DemoValidationError(f"Cannot write demos to {path}: {e}")

    logger.info(f"Exported {len(trajectories)} demonstrations to {path}")
    return path


def import_demos(path: Union[str, Path]) -> Tuple[Dict[str, Any], List[DemoTrajectory]]:
    """Read a dataset back; trajectories keep their file order"""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            lines = [line for line in f if line.strip()]
    except OSError as e:
        raise DemoValidationError(f"Cannot read demos from {path}: {e}")
    if not lines:
        raise DemoValidationError(f"{path} has no header")

    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise DemoValidationError(f"{path}: invalid header: {e}")
    if header.get('format') != DEMO_FORMAT:
        raise DemoValidationError(f"{path} is not a demonstration dataset")

    trajectories: Dict[str, List[DemoFrame]] = {}
    for number, line in enumerate(lines[1:], start=2):
        try:
            row = json.loads(line)
            action = row['action']
            if len(action) != ACTION_DIM:
                raise DemoValidationError(f"{path}:{number}: action must have length {ACTION_DIM}")
            frame = DemoFrame(t=row['t'], state=StateVector.from_array(row['state']),
                              action=ActuatorVector(action))
            trajectories.setdefault(row['traj_id'], []).append(frame)
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise DemoValidationError(f"{path}:{number}: malformed frame: {e}")
        except DegenerateInputError as e:
            raise DemoValidationError(f"{path}:{number}: invalid action: {e}")

    return header, [DemoTrajectory(traj_id=k, frames=v) for k, v in trajectories.items()]
