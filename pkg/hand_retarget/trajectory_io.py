"""
Trajectory files

Input trajectories are JSON Lines with one frame per line,
{"t": seconds, "joints": [[x, y, z] x 21]}, in meters; the trajectory id is
the file stem. Records files start with a header line
{"kind": "records", ...} followed by one FrameRecord per line.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Tuple, Union

from .errors import ConfigurationError, DegenerateInputError, RetargetError
from .evaluator import FrameRecord
from .hand_kinematics import Skeleton

logger = logging.getLogger(__name__)

RECORDS_KIND = 'records'

PathLike = Union[str, Path]


@dataclass(frozen=True, eq=False)
class InputTrajectory:
    """Source-domain skeleton stream with strictly increasing timestamps"""
    traj_id: str
    frames: Tuple[Tuple[float, Skeleton], ...]

    def __post_init__(self):
        if not self.frames:
            raise DegenerateInputError(f"Trajectory {self.traj_id} has no frames")
        times = [t for t, _ in self.frames]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise DegenerateInputError(f"Trajectory {self.traj_id} timestamps are not increasing")
        object.__setattr__(self, 'frames', tuple(self.frames))

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def fps(self) -> float:
        """Recording rate inferred from the first two timestamps"""
        if len(self.frames) < 2:
            return 0.0
        return 1.0 / (self.frames[1][0] - self.frames[0][0])


@dataclass(frozen=True, eq=False)
class RecordedTrajectory:
    """FrameRecords of one retargeted trajectory plus the run header they came from"""
    traj_id: str
    frames: List[FrameRecord]
    fps: float
    header: Dict[str, Any] = field(default_factory=dict)


def _read_jsonl(path: PathLike) -> Iterator[Tuple[int, Dict]]:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            for number, line in enumerate(f, start=1):
                if line.strip():
                    yield number, json.loads(line)
    except OSError as e:
        raise ConfigurationError(f"Cannot read {path}: {e}")
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"{path}: invalid JSON: {e}")


def _write_jsonl(path: PathLike, rows: List[Dict]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        for row in rows:
            f.write(json.dumps(row))
            f.write('\n')


def read_input_trajectory(path: PathLike) -> InputTrajectory:
    frames = []
    for number, row in _read_jsonl(path):
        try:
            frames.append((float(row['t']), Skeleton(row['joints'])))
        except KeyError as e:
            raise ConfigurationError(f"{path}:{number}: missing field {e}")
        except RetargetError as e:
            raise ConfigurationError(f"{path}:{number}: {e}")
    return InputTrajectory(traj_id=Path(path).stem, frames=tuple(frames))


def write_input_trajectory(trajectory: InputTrajectory, path: PathLike) -> Path:
    _write_jsonl(path, [{'t': t, 'joints': s.to_list()} for t, s in trajectory.frames])
    logger.debug(f"Wrote {len(trajectory)} input frames to {path}")
    return Path(path)


def write_records(recorded: RecordedTrajectory, path: PathLike) -> Path:
    header = dict(recorded.header)
    header.update({'kind': RECORDS_KIND, 'traj_id': recorded.traj_id, 'fps': recorded.fps})
    _write_jsonl(path, [header] + [frame.to_dict() for frame in recorded.frames])
    logger.info(f"Wrote {len(recorded.frames)} records for {recorded.traj_id} to {path}")
    return Path(path)


def read_records(path: PathLike) -> RecordedTrajectory:
    rows = list(_read_jsonl(path))
    if not rows or rows[0][1].get('kind') != RECORDS_KIND:
        raise ConfigurationError(f"{path}: missing records header")
    header = rows[0][1]
    frames = []
    for number, row in rows[1:]:
        try:
            frames.append(FrameRecord.from_dict(row))
        except (KeyError, TypeError, ValueError, RetargetError) as e:
            raise ConfigurationError(f"{path}:{number}: malformed frame record: {e}")
    return RecordedTrajectory(
        traj_id=header.get('traj_id', Path(path).stem),
        frames=frames,
        fps=float(header['fps']),
        header=header,
    )
