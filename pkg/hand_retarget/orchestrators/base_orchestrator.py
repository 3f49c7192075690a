"""
Base Orchestrator

Drives one input trajectory through a retargeter and the scene proxy, frame
by frame, and records what was applied.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import asdict
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from ..config import RunConfig
from ..errors import RetargetError, TrajectoryAbortedError
from ..evaluator import FrameRecord
from ..hand_kinematics import ActuatorVector, Skeleton, forward_kinematics_batch
from ..retargeters import RetargeterFactory
from ..scene import HandPoints, SceneState, contact_distances, step_scene
from ..trajectory_io import InputTrajectory, RecordedTrajectory

logger = logging.getLogger(__name__)

# Input rates further than this from the configured rate are reported
FPS_TOLERANCE = 0.01


class BaseOrchestrator(ABC):
    """Base class for the in-process and batch orchestrators"""

    def __init__(self, orchestrator_type: str, config: RunConfig):
        self.orchestrator_type = orchestrator_type
        self.config = config
        self.orchestrator_id = f"{orchestrator_type}-{config.mode}"

        self.spec = config.load_spec()
        self.scene = config.load_scene()
        self.retargeter = RetargeterFactory.create(config.mode, self.spec, config)

        logger.debug(f"Initialized {self.orchestrator_id} orchestrator")

    def run_header(self) -> Dict[str, Any]:
        """Header written at the top of every records file of this run"""
        return {
            'run': self.config.run_header(),
            'model_spec_hash': self.spec.source_hash,
            'scene': self.scene.name,
            'contact': asdict(self.config.contact),
        }

    def _apply(self, scene: SceneState, action: ActuatorVector, dt: float) -> Tuple[SceneState, HandPoints, Skeleton]:
        state = forward_kinematics_batch(self.spec, action.values)
        hand = HandPoints.from_state(state)
        scene = step_scene(scene, hand, dt, self.config.contact)
        return scene, hand, Skeleton(state.joints[0])

    def run_retarget(self, trajectory: InputTrajectory, index: int = 0) -> RecordedTrajectory:
        """
        Retarget every frame of a trajectory and step the scene with it.

        Each input frame is applied over 1/fps seconds. Retargeters with
        more than one substep split that interval, refining the action
        before every substep after the first.

        Args:
            trajectory: Source-domain input
            index: Position of the trajectory in its batch; seeds the generator
                together with the run seed

        Raises:
            TrajectoryAbortedError: a frame failed; carries the frame index
        """
        config = self.config
        rng = np.random.default_rng([config.seed, index])
        dt = 1.0 / config.fps
        substeps = self.retargeter.substeps
        weights = config.weights

        if len(trajectory) > 1 and abs(trajectory.fps - config.fps) > FPS_TOLERANCE * config.fps:
            logger.warning(f"{trajectory.traj_id} was recorded at {trajectory.fps:.2f} fps, "
                           f"stepping at {config.fps:.2f}")

        logger.info(f"Retargeting {trajectory.traj_id} ({len(trajectory)} frames, mode={config.mode})")
        scene = self.scene
        prev = None
        frames: List[FrameRecord] = []
        for k, (t, x) in enumerate(trajectory.frames):
            try:
                action = self.retargeter.retarget(x, scene, prev, rng)
                for step in range(substeps):
                    if step > 0:
                        action = self.retargeter.refine(scene, action, rng)
                    scene, hand, y = self._apply(scene, action, dt / substeps)
                contacts = contact_distances(hand.palm_center, hand.fingertips, scene,
                                             weights.d_max, weights.omega_cost)
            except RetargetError as e:
                raise TrajectoryAbortedError(
                    f"{trajectory.traj_id} aborted at frame {k}: {e}", k,
                    {'traj_id': trajectory.traj_id, 'cause': e.to_dict()},
                ) from e

            frames.append(FrameRecord(t=t, x=x, action=action, y=y, contacts=contacts,
                                      scene=scene, palm_center=hand.palm_center))
            logger.debug(f"{trajectory.traj_id} frame {k}: held={scene.held} "
                         f"z={scene.position[2]:.4f} touching={int(np.sum(contacts.distances <= config.contact.contact_epsilon))}")
            prev = action

        logger.info(f"Finished {trajectory.traj_id}: peak lift {max(f.scene.lift_height() for f in frames):.3f} m")
        return RecordedTrajectory(traj_id=trajectory.traj_id, frames=frames, fps=config.fps,
                                  header=self.run_header())

    @abstractmethod
    def run(self, trajectories: Sequence[InputTrajectory]) -> List[RecordedTrajectory]:
        """Retarget a batch of trajectories (implemented by subclasses)"""
