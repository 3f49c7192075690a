"""
Exception hierarchy for the retargeting toolkit
"""

from typing import Any, Dict, Optional


class RetargetError(Exception):
    """Base class for every error raised by hand_retarget"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        """Machine-readable form written by the CLI on stderr"""
        return {
            'error': type(self).__name__,
            'message': str(self),
            'details': self.details,
        }

    def __reduce__(self):
        return type(self), (str(self), self.details)


class ConfigurationError(RetargetError):
    """Malformed hand spec, scene, run config, or mismatched constants"""
    pass


class DegenerateSkeletonError(RetargetError):
    """A skeleton bone has zero length"""
    pass


class DegenerateInputError(RetargetError):
    """Input geometry cannot be processed (zero hand span, collinear palm)"""
    pass


class GenerationError(RetargetError):
    """Synthetic grasp trajectory could not be scripted for the scene"""
    pass


class DemoValidationError(RetargetError):
    """Demonstration export/import violated the dataset contract"""
    pass


class ReportValidationError(RetargetError):
    """Metrics file does not match the expected schema"""
    pass


class TrajectoryAbortedError(RetargetError):
    """A frame failed during run_retarget; the trajectory was abandoned"""

    def __init__(self, message: str, frame_index: int, details: Optional[Dict[str, Any]] = None):
        details = dict(details or {})
        details['frame_index'] = frame_index
        super().__init__(message, details)
        self.frame_index = frame_index

    def __reduce__(self):
        return type(self), (str(self), self.frame_index, self.details)
