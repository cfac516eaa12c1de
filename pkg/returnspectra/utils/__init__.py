"""
Utils 모듈

설정, 예외, 해시, CSV, 그림, 블록 병렬 유틸리티
"""

from .config import get_compute_config, set_compute_config, override_compute_config
from .table_utils import TableUtils

__all__ = ['get_compute_config', 'set_compute_config', 'override_compute_config', 'TableUtils']
