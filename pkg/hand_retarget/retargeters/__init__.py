from .base_retargeter import BaseRetargeter
from .retargeter_factory import RetargeterFactory

__all__ = ['BaseRetargeter', 'RetargeterFactory']
