"""
数组文件读写
文本格式：每行一个十进制实数；二进制格式：小端 64 位浮点，无文件头
"""

import logging
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field

from services.errors import DomainError, ParameterError

logger = logging.getLogger(__name__)

ArrayFormat = Literal['text', 'binary']

# 扩展名 → 格式
FORMAT_BY_EXTENSION = {
    '.txt': 'text',
    '.csv': 'text',
    '.dat': 'text',
    '.bin': 'binary',
    '.f64': 'binary',
    '.raw': 'binary',
}


class ArrayFile(BaseModel):
    """一维实数组文件"""
    path: Path = Field(..., description="文件路径")
    format: ArrayFormat = Field('text', description="text 或 binary")

    @classmethod
    def detect_format(cls, path: Union[str, Path]) -> ArrayFormat:
        return FORMAT_BY_EXTENSION.get(Path(path).suffix.lower(), 'text')

    @classmethod
    def for_path(cls, path: Union[str, Path], fmt: Optional[str] = None) -> 'ArrayFile':
        if fmt is not None and fmt not in ('text', 'binary'):
            raise ParameterError(f"unknown array format '{fmt}', expected text or binary")
        return cls(path=Path(path), format=fmt or cls.detect_format(path))

    def read(self) -> np.ndarray:
        if self.format == 'binary':
            return self._read_binary()
        return self._read_text()

    def write(self, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=float).ravel()
        if self.format == 'binary':
            values.astype('<f8').tofile(self.path)
        else:
            # %.17g 保证文本与二进制往返逐位一致
            self.path.write_text("".join(f"{v:.17g}\n" for v in values), encoding='utf-8')
        logger.debug("Wrote %d values to %s (%s)", values.shape[0], self.path, self.format)

    def _read_binary(self) -> np.ndarray:
        raw = self.path.read_bytes()
        if len(raw) % 8:
            raise DomainError(f"{self.path}: binary length {len(raw)} is not a multiple of 8")
        values = np.frombuffer(raw, dtype='<f8').astype(float)
        if not np.all(np.isfinite(values)):
            raise DomainError(f"{self.path}: non-finite value in binary array")
        return values

    def _read_text(self) -> np.ndarray:
        values = []
        for lineno, line in enumerate(self.path.read_text(encoding='utf-8').splitlines(), start=1):
            token = line.strip()
            if not token:
                continue
            try:
                value = float(token)
            except ValueError:
                raise DomainError(f"{self.path}:{lineno}: cannot parse '{token}' as a real number") from None
            if not np.isfinite(value):
                raise DomainError(f"{self.path}:{lineno}: non-finite value '{token}'")
            values.append(value)
        return np.array(values, dtype=float)


def read_array(path: Union[str, Path], fmt: Optional[str] = None) -> np.ndarray:
    return ArrayFile.for_path(path, fmt).read()


def write_array(path: Union[str, Path], values: np.ndarray, fmt: Optional[str] = None) -> None:
    ArrayFile.for_path(path, fmt).write(values)
