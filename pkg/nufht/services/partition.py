"""
核矩阵 J_ν(ω_j r_k) 的自适应分块
相对交叉点 z 把 m×n 矩阵划分为 Local / Asymptotic / Direct 三类块。下标一律 0 起、闭区间。
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from .errors import DomainError

logger = logging.getLogger(__name__)

DEFAULT_MIN_SIZE = 1024
DEFAULT_CANDIDATES = 16


class BlockKind(str, Enum):
    """块类型"""
    LOCAL = 'local'
    ASYMPTOTIC = 'asymptotic'
    DIRECT = 'direct'


@dataclass(frozen=True)
class Block:
    """下标矩形 [j0..j1] × [k0..k1]"""
    j0: int
    j1: int
    k0: int
    k1: int
    kind: BlockKind

    @property
    def rows(self) -> slice:
        return slice(self.j0, self.j1 + 1)

    @property
    def cols(self) -> slice:
        return slice(self.k0, self.k1 + 1)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.j1 - self.j0 + 1, self.k1 - self.k0 + 1

    @property
    def area(self) -> int:
        rows, cols = self.shape
        return rows * cols

    def dump(self) -> str:
        return f"{self.kind.value} {self.j0} {self.j1} {self.k0} {self.k1}"


@dataclass(frozen=True)
class Partition:
    """分块结果，构造后不可变"""
    blocks: Tuple[Block, ...]
    m: int
    n: int
    z: float
    min_size: int = DEFAULT_MIN_SIZE
    level_count: int = 0

    def count(self, kind: BlockKind) -> int:
        return sum(1 for b in self.blocks if b.kind == kind)

    def area(self, kind: BlockKind) -> int:
        return sum(b.area for b in self.blocks if b.kind == kind)

    def dump(self) -> str:
        """调试输出：每行 `kind j0 j1 k0 k1`"""
        return "\n".join(b.dump() for b in self.blocks) + ("\n" if self.blocks else "")

    @classmethod
    def loads(cls, text: str, m: int, n: int, z: float, min_size: int = DEFAULT_MIN_SIZE) -> 'Partition':
        blocks = []
        for line in text.splitlines():
            parts = line.split()
            if not parts:
                continue
            kind, j0, j1, k0, k1 = parts
            blocks.append(Block(int(j0), int(j1), int(k0), int(k1), BlockKind(kind)))
        return cls(blocks=tuple(blocks), m=m, n=n, z=z, min_size=min_size)


def _staircase_k(freqs: np.ndarray, points: np.ndarray, j: int, k0: int, k1: int, z: float) -> int:
    """max{k ∈ [k0, k1] : ω_j r_k ≤ z}；不存在时返回 k0 - 1"""
    w = freqs[j]
    if w == 0:
        return k1
    k = k0 + int(np.searchsorted(points[k0:k1 + 1], z / w, side='right')) - 1
    # 以乘积为准修正除法舍入
    while k >= k0 and w * points[k] > z:
        k -= 1
    while k + 1 <= k1 and w * points[k + 1] <= z:
        k += 1
    return k


def _staircase_j(freqs: np.ndarray, points: np.ndarray, k: int, j0: int, j1: int, z: float) -> int:
    """max{j ∈ [j0, j1] : ω_j r_k ≤ z}；不存在时返回 j0 - 1"""
    r = points[k]
    if r == 0:
        return j1
    j = j0 + int(np.searchsorted(freqs[j0:j1 + 1], z / r, side='right')) - 1
    while j >= j0 and freqs[j] * r > z:
        j -= 1
    while j + 1 <= j1 and freqs[j + 1] * r <= z:
        j += 1
    return j


def split_area(j: int, k: int, j0: int, j1: int, k0: int, k1: int) -> int:
    """切分后立即归类的面积：左上 Local 块 + 右下 Asymptotic 块"""
    return (j - j0 + 1) * (k - k0 + 1) + (j1 - j) * (k1 - k)


def split_indices(freqs: np.ndarray, points: np.ndarray, j0: int, j1: int, k0: int, k1: int,
                  z: float, candidates: int = DEFAULT_CANDIDATES, exhaustive: bool = False) -> Tuple[int, int]:
    """在阶梯 ω_j r_k ≤ z 上选切分点 (j, k)，使归类面积最大

    候选为等距的 j 值与等距的 k 值（投影回阶梯）；exhaustive=True 时遍历所有行。
    面积相同时取最小的 j，再取最小的 k。
    """
    if exhaustive:
        js = range(j0, j1 + 1)
    else:
        js = set(np.unique(np.linspace(j0, j1, candidates).round().astype(int)).tolist())
        for k in np.unique(np.linspace(k0, k1, candidates).round().astype(int)):
            j = _staircase_j(freqs, points, int(k), j0, j1, z)
            if j >= j0:
                js.add(j)
        js = sorted(js)

    best: Optional[Tuple[int, int, int]] = None
    for j in js:
        k = _staircase_k(freqs, points, j, k0, k1, z)
        if k < k0:
            continue
        key = (-split_area(j, k, j0, j1, k0, k1), j, k)
        if best is None or key < best:
            best = key
    if best is None:
        raise DomainError(f"block [{j0}..{j1}]x[{k0}..{k1}] has no entry with omega*r <= z")
    return best[1], best[2]


def _classify(freqs: np.ndarray, points: np.ndarray, j0: int, j1: int, k0: int, k1: int,
              z: float, min_size: int) -> Optional[BlockKind]:
    if (j1 - j0 + 1) * (k1 - k0 + 1) < min_size:
        return BlockKind.DIRECT
    if freqs[j1] * points[k1] <= z:
        return BlockKind.LOCAL
    if freqs[j0] * points[k0] > z:
        return BlockKind.ASYMPTOTIC
    return None


def subdivide(freqs: np.ndarray, points: np.ndarray, z: float, min_size: int = DEFAULT_MIN_SIZE,
              candidates: int = DEFAULT_CANDIDATES, exhaustive: bool = False) -> Partition:
    """工作表算法：逐代弹出混合块，归类或切成四块"""
    freqs = np.asarray(freqs, dtype=float)
    points = np.asarray(points, dtype=float)
    m, n = freqs.shape[0], points.shape[0]
    if np.any(np.diff(freqs) < 0) or np.any(np.diff(points) < 0):
        raise DomainError("subdivide needs ascending freqs and points")
    if m and freqs[0] < 0 or n and points[0] < 0:
        raise DomainError("subdivide needs nonnegative freqs and points")

    blocks: List[Block] = []
    pending: List[Tuple[int, int, int, int]] = [(0, m - 1, 0, n - 1)] if m and n else []
    levels = 0
    while pending:
        levels += 1
        mixed: List[Tuple[int, int, int, int]] = []
        for j0, j1, k0, k1 in pending:
            kind = _classify(freqs, points, j0, j1, k0, k1, z, min_size)
            if kind is not None:
                blocks.append(Block(j0, j1, k0, k1, kind))
                continue
            j, k = split_indices(freqs, points, j0, j1, k0, k1, z, candidates, exhaustive)
            children = [
                (j0, j, k0, k),          # 左上：全部 ω r ≤ z
                (j + 1, j1, k + 1, k1),  # 右下：全部 ω r > z
                (j0, j, k + 1, k1),
                (j + 1, j1, k0, k),
            ]
            for child in children:
                c_j0, c_j1, c_k0, c_k1 = child
                if c_j0 > c_j1 or c_k0 > c_k1:
                    continue
                kind = _classify(freqs, points, c_j0, c_j1, c_k0, c_k1, z, min_size)
                if kind is None:
                    mixed.append(child)
                else:
                    blocks.append(Block(c_j0, c_j1, c_k0, c_k1, kind))
        pending = mixed

    partition = Partition(blocks=tuple(blocks), m=m, n=n, z=float(z), min_size=min_size, level_count=levels)
    logger.debug(
        "Partition %dx%d z=%.6g: %d local, %d asymptotic, %d direct blocks in %d levels",
        m, n, z, partition.count(BlockKind.LOCAL), partition.count(BlockKind.ASYMPTOTIC),
        partition.count(BlockKind.DIRECT), levels,
    )
    return partition


def validate_partition(p: Partition, freqs: np.ndarray, points: np.ndarray) -> bool:
    """不相交、全覆盖且每块满足其类型的角点条件时返回 True"""
    freqs = np.asarray(freqs, dtype=float)
    points = np.asarray(points, dtype=float)
    if freqs.shape[0] != p.m or points.shape[0] != p.n:
        logger.debug("Partition dims %dx%d do not match inputs", p.m, p.n)
        return False
    cover = np.zeros((p.m, p.n), dtype=np.int32)
    for b in p.blocks:
        if not (0 <= b.j0 <= b.j1 < p.m and 0 <= b.k0 <= b.k1 < p.n):
            logger.debug("Block out of range: %s", b.dump())
            return False
        cover[b.rows, b.cols] += 1
        if b.kind == BlockKind.LOCAL and not freqs[b.j1] * points[b.k1] <= p.z:
            logger.debug("Local block violates omega*r <= z: %s", b.dump())
            return False
        if b.kind == BlockKind.ASYMPTOTIC and not freqs[b.j0] * points[b.k0] > p.z:
            logger.debug("Asymptotic block violates omega*r > z: %s", b.dump())
            return False
        if b.kind == BlockKind.DIRECT and not b.area < p.min_size:
            logger.debug("Direct block too large: %s", b.dump())
            return False
    if not np.all(cover == 1):
        logger.debug("Blocks overlap or leave gaps")
        return False
    return True
