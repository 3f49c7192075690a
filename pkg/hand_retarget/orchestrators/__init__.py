from .base_orchestrator import BaseOrchestrator
from .batch_orchestrator import BatchOrchestrator

__all__ = ['BaseOrchestrator', 'BatchOrchestrator']
