"""
Retargeter Factory

Builds the retargeter for a run mode from the mode specification table.
"""

import importlib
import logging
from typing import Dict, List

from ..config import MODES, RunConfig
from ..errors import ConfigurationError
from ..hand_kinematics import HandModelSpec
from .base_retargeter import BaseRetargeter

logger = logging.getLogger(__name__)


class RetargeterFactory:
    """Factory for the per-mode retargeters"""

    RETARGETER_SPECIFICATIONS = {
        'ik': {
            'module': 'ik_retargeter',
            'class': 'IkRetargeter',
            'description': 'Palm alignment plus per-chain axis projection',
        },
        'hybrid': {
            'module': 'hybrid_retargeter',
            'class': 'HybridRetargeter',
            'description': 'Swarm search seeded on the IK pose, pose and task energy',
        },
        'hybrid+refine': {
            'module': 'hybrid_retargeter',
            'class': 'HybridRefineRetargeter',
            'description': 'Hybrid search plus task-only corrections between input frames',
        },
        'pose': {
            'module': 'pose_retargeter',
            'class': 'PoseRetargeter',
            'description': 'Swarm search over the full action space, pose energy only',
        },
    }

    @classmethod
    def modes(cls) -> List[str]:
        return list(cls.RETARGETER_SPECIFICATIONS)

    @classmethod
    def describe(cls) -> Dict[str, str]:
        return {mode: spec['description'] for mode, spec in cls.RETARGETER_SPECIFICATIONS.items()}

    @classmethod
    def create(cls, mode: str, spec: HandModelSpec, config: RunConfig) -> BaseRetargeter:
        """
        Instantiate the retargeter for a mode.

        Raises:
            ConfigurationError: unknown mode
        """
        if mode not in cls.RETARGETER_SPECIFICATIONS:
            raise ConfigurationError(f"Unknown retargeting mode {mode!r}", {'modes': cls.modes()})
        entry = cls.RETARGETER_SPECIFICATIONS[mode]
        module = importlib.import_module(f".{entry['module']}", package=__package__)
        retargeter_class = getattr(module, entry['class'])
        return retargeter_class(mode, spec, config)


assert set(RetargeterFactory.RETARGETER_SPECIFICATIONS) == set(MODES)
