"""
Base retargeter class for all retargeting modes
"""

import logging
from abc import ABC, abstractmethod
from typing import Optional

import numpy as np

from ..config import RunConfig
from ..hand_kinematics import ActuatorVector, HandModelSpec, Skeleton
from ..scene import SceneState

logger = logging.getLogger(__name__)


class BaseRetargeter(ABC):
    """Maps one source skeleton per frame onto a hand model action"""

    # Scene steps per input frame; refine() runs before every step after the first
    substeps = 1

    def __init__(self, mode: str, spec: HandModelSpec, config: RunConfig):
        self.mode = mode
        self.spec = spec
        self.config = config
        logger.debug(f"Initialized {self.mode} retargeter for {spec.name}")

    @abstractmethod
    def retarget(self, x: Skeleton, scene: SceneState, prev: Optional[ActuatorVector],
                 rng: np.random.Generator) -> ActuatorVector:
        """
        Action for one frame.

        Args:
            x: Raw source skeleton
            scene: Scene snapshot before this frame is applied
            prev: Action applied on the previous frame, if any
            rng: The trajectory's generator
        """

    def refine(self, scene: SceneState, current: ActuatorVector, rng: np.random.Generator) -> ActuatorVector:
        """Between-frame correction; modes without one keep the current action"""
        return current
