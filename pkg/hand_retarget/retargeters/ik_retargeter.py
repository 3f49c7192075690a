"""
IkRetargeter - closed-form IK baseline
"""

from typing import Optional

import numpy as np

from ..hand_kinematics import ActuatorVector, Skeleton, normalize_skeleton, scale_factor
from ..ik_baseline import ik_retarget
from ..scene import SceneState
from .base_retargeter import BaseRetargeter


class IkRetargeter(BaseRetargeter):
    """Scales the frame into the model domain and solves it by IK; ignores the scene"""

    def retarget(self, x: Skeleton, scene: SceneState, prev: Optional[ActuatorVector],
                 rng: np.random.Generator) -> ActuatorVector:
        x_prime = normalize_skeleton(x, scale_factor(x, self.spec.rest))
        return ik_retarget(x_prime, self.spec, prev, self.config.ik)
