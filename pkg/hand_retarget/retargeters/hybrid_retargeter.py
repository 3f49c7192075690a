"""
HybridRetargeter - swarm search seeded on the IK pose, scored on pose and task energy

HybridRefineRetargeter adds task-only corrections between input frames.
"""

from typing import Optional

import numpy as np

from ..hand_kinematics import ActuatorVector, Skeleton
from ..optimizer import hybrid_pso, task_refine
from ..scene import SceneState
from .base_retargeter import BaseRetargeter


class HybridRetargeter(BaseRetargeter):

    def retarget(self, x: Skeleton, scene: SceneState, prev: Optional[ActuatorVector],
                 rng: np.random.Generator) -> ActuatorVector:
        cfg = self.config
        return hybrid_pso(x, scene, self.spec, cfg.weights, cfg.swarm, prev, cfg.ik, rng)


class HybridRefineRetargeter(HybridRetargeter):

    def __init__(self, mode, spec, config):
        super().__init__(mode, spec, config)
        self.substeps = 1 + config.refine_rate

    def refine(self, scene: SceneState, current: ActuatorVector, rng: np.random.Generator) -> ActuatorVector:
        cfg = self.config
        return task_refine(scene, current, self.spec, cfg.weights, cfg.swarm, rng)
