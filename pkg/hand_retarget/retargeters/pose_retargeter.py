"""
PoseRetargeter - pose-energy-only swarm search with no IK prior
"""

from typing import Optional

import numpy as np

from ..hand_kinematics import ActuatorVector, Skeleton
from ..optimizer import pose_pso
from ..scene import SceneState
from .base_retargeter import BaseRetargeter


class PoseRetargeter(BaseRetargeter):

    def retarget(self, x: Skeleton, scene: SceneState, prev: Optional[ActuatorVector],
                 rng: np.random.Generator) -> ActuatorVector:
        return pose_pso(x, self.spec, self.config.weights, self.config.swarm, rng)
