"""
运行时配置
优先读取 Django settings，未配置 Django 时退回环境变量，这样服务层可以脱离 Django 单独使用
"""

import os
import logging
from typing import Any, Optional

from pydantic import BaseModel, Field, field_validator

from .errors import ParameterError

logger = logging.getLogger(__name__)

KNOWN_BACKENDS = ('internal', 'finufft')


def get_setting(name: str, default: Any = None) -> Any:
    """读取单个配置项：Django settings -> 环境变量 -> 默认值"""
    try:
        from django.conf import settings
        if settings.configured:
            return getattr(settings, name)
    except Exception:
        pass
    return os.environ.get(name, default)


def _as_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    return str(value).strip().lower() in ('1', 'true', 'yes', 'on')


class RuntimeConfig(BaseModel):
    """NUFHT 运行时配置"""
    nufft_backend: str = Field(default='internal', description="NUFFT 后端名称: internal | finufft")
    nufft_max_grid: int = Field(default=2 ** 27, ge=1024, description="细网格点数上限")
    threads: int = Field(default=1, ge=1, description="apply 与 FFT 使用的线程数")
    parallel_apply: bool = Field(default=False, description="是否并行计算各个块")
    min_size: int = Field(default=1024, ge=1, description="直接计算块的面积阈值")
    param_table_file: Optional[str] = Field(default=None, description="参数表文件路径")

    @field_validator('nufft_backend')
    @classmethod
    def _check_backend(cls, value: str) -> str:
        name = value.strip().lower()
        if name not in KNOWN_BACKENDS:
            raise ValueError(f"unknown NUFFT backend '{value}', expected one of {KNOWN_BACKENDS}")
        return name


def load_runtime_config(**overrides: Any) -> RuntimeConfig:
    """从 settings / 环境变量构造配置，overrides 优先"""
    values = {
        'nufft_backend': get_setting('NUFHT_NUFFT_BACKEND', 'internal'),
        'nufft_max_grid': int(get_setting('NUFHT_NUFFT_MAX_GRID', 2 ** 27)),
        'threads': int(get_setting('NUFHT_THREADS', 1)),
        'parallel_apply': _as_bool(get_setting('NUFHT_PARALLEL_APPLY', False)),
        'min_size': int(get_setting('NUFHT_MIN_SIZE', 1024)),
        'param_table_file': get_setting('NUFHT_PARAM_TABLE_FILE', None) or None,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RuntimeConfig(**values)
    except ValueError as e:
        logger.error("Invalid NUFHT configuration: %s", str(e))
        raise ParameterError(str(e)) from e
