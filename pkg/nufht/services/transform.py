"""
非均匀快速 Hankel 变换 (NUFHT)
g_j = Σ_k c_k J_ν(ω_j r_k)

build_plan 排序输入、查表得到 (z, L, M)、分块并为每个块预计算因子；apply 对任意系数向量复用同一计划。
- Local 块：Wimp 展开 J_ν(xy) = Σ_ℓ C_ℓ(x) T(y)，秩 L+1
- Asymptotic 块：Hankel 渐近展开，2M 列强度一次 Type-III NUFFT
- Direct 块：稠密 J_ν 矩阵
"""

import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .bounds import AsymptoticCoeffs, ExpansionParams, ParamTable, get_params, param_table
from .config import RuntimeConfig, load_runtime_config
from .errors import DomainError, ParameterError
from .nufft import Backend, nufft_backend_select
from .partition import Block, BlockKind, Partition, subdivide
from .special import bessel_j, bessel_j_signed, chebyshev_vander

logger = logging.getLogger(__name__)

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
# 超过该面积的稠密块不缓存矩阵，按行分段现算
_DENSE_CACHE_LIMIT = 1 << 20
_DENSE_CHUNK = 1 << 22


# ---------------------------------------------------------------------------
# Wimp 展开
# ---------------------------------------------------------------------------

def wimp_coefficients(nu: int, L: int, x: np.ndarray) -> np.ndarray:
    """C_ℓ(x)，ℓ = 0..L，形状 (len(x), L+1)

    偶数 ν：C_ℓ = δ_ℓ J_{ν/2+ℓ}(x/2) J_{ν/2-ℓ}(x/2)，配 T_{2ℓ}(y)，δ_0 = 1，其余为 2
    奇数 ν：C_ℓ = 2 J_{(ν+1)/2+ℓ}(x/2) J_{(ν-1)/2-ℓ}(x/2)，配 T_{2ℓ+1}(y)
    """
    half = 0.5 * np.asarray(x, dtype=float)
    out = np.empty((half.shape[0], L + 1))
    if nu % 2 == 0:
        h = nu // 2
        for ell in range(L + 1):
            out[:, ell] = (1.0 if ell == 0 else 2.0) * bessel_j_signed(h + ell, half) * bessel_j_signed(h - ell, half)
    else:
        hp, hm = (nu + 1) // 2, (nu - 1) // 2
        for ell in range(L + 1):
            out[:, ell] = 2.0 * bessel_j_signed(hp + ell, half) * bessel_j_signed(hm - ell, half)
    return out


def wimp_chebyshev(nu: int, L: int, y: np.ndarray) -> np.ndarray:
    """与 C_ℓ 配对的 Chebyshev 列：T_{2ℓ}(y) 或 T_{2ℓ+1}(y)"""
    if nu % 2 == 0:
        return chebyshev_vander(2 * L, y)[:, 0::2]
    return chebyshev_vander(2 * L + 1, y)[:, 1::2]


@lru_cache(maxsize=256)
def wimp_self_check(nu: int, L: int, z: float, eps: float) -> bool:
    """在 [0, z] × [0, 1] 上比较截断 Wimp 展开与稠密 J_ν"""
    x = np.linspace(0.0, z, 17)
    y = np.linspace(0.0, 1.0, 13)
    approx = wimp_coefficients(nu, L, x) @ wimp_chebyshev(nu, L, y).T
    exact = bessel_j(nu, np.outer(x, y))
    err = float(np.max(np.abs(approx - exact)))
    ok = err <= max(10.0 * eps, 1e-13 * (L + 1))
    if not ok:
        logger.warning("Wimp expansion self-check failed for nu=%d L=%d (err %.3e); local blocks use dense evaluation",
                       nu, L, err)
    return ok


# ---------------------------------------------------------------------------
# 块数据与块求值
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LocalBlockData:
    """C (m_b × (L+1)) 与 T (n_b × (L+1))；R = 0 时退化"""
    C: Optional[np.ndarray]
    T: Optional[np.ndarray]
    zero_value: float = 0.0


@dataclass(frozen=True)
class AsymptoticBlockData:
    """Type-III 计划与两侧的归一化缩放"""
    plan: Any
    col_scale: np.ndarray   # (n_b, 2M)：(r0/r)^{t+1/2}
    row_scale: np.ndarray   # (m_b, 2M)：系数 × 角点因子 × (ω0/ω)^{t+1/2}
    phase: complex


@dataclass(frozen=True)
class DirectBlockData:
    nu: float
    freqs: np.ndarray
    points: np.ndarray
    matrix: Optional[np.ndarray] = None


def prepare_local_block(nu: int, L: int, freqs: np.ndarray, points: np.ndarray) -> LocalBlockData:
    """freqs / points 为块内（升序）的频率与点"""
    R = float(points[-1])
    if R == 0.0:
        return LocalBlockData(C=None, T=None, zero_value=1.0 if nu == 0 else 0.0)
    C = wimp_coefficients(nu, L, freqs * R)
    T = wimp_chebyshev(nu, L, points / R)
    return LocalBlockData(C=C, T=T)


def apply_local_block(data: LocalBlockData, coeffs: np.ndarray) -> np.ndarray:
    """C (Tᵀ c)，coeffs 形状 (n_b, K)"""
    if data.C is None:
        # 所有点为 0：J_ν(0) = [ν = 0]，每行相同
        return data.zero_value * coeffs.sum(axis=0, keepdims=True)
    return data.C @ (data.T.T @ coeffs)


def prepare_asymptotic_block(nu: float, M: int, eps: float, freqs: np.ndarray, points: np.ndarray,
                             backend: Backend) -> AsymptoticBlockData:
    """按 √(2/π) Σ_ℓ (-1)^ℓ [a_{2ℓ} D_ω Re(e^{iφ} F D_r c) - a_{2ℓ+1} D_ω Im(e^{iφ} F D_r c)] 预计算"""
    coeffs = AsymptoticCoeffs.build(nu, 2 * M)
    w0, r0 = float(freqs[0]), float(points[0])
    if w0 <= 0 or r0 <= 0:
        raise DomainError("asymptotic block needs strictly positive frequencies and points")

    n_terms = 2 * M
    ratio_r = r0 / points
    ratio_w = w0 / freqs
    col_scale = np.empty((points.shape[0], n_terms))
    row_scale = np.empty((freqs.shape[0], n_terms))
    col_scale[:, 0] = np.sqrt(ratio_r)
    row_scale[:, 0] = np.sqrt(ratio_w)
    for t in range(1, n_terms):
        col_scale[:, t] = col_scale[:, t - 1] * ratio_r
        row_scale[:, t] = row_scale[:, t - 1] * ratio_w

    corner = w0 * r0
    weights = np.empty(n_terms)
    for t in range(n_terms):
        ell = t // 2
        sign = -1.0 if ell % 2 else 1.0
        coef = sign * coeffs.a[t] if t % 2 == 0 else -sign * coeffs.a[t]
        weights[t] = SQRT_2_OVER_PI * coef * corner ** -(t + 0.5)
    row_scale *= weights[None, :]

    tol = max(eps / (4.0 * M), 1e-15)
    plan = backend.plan(points, freqs, tol, 1)
    return AsymptoticBlockData(plan=plan, col_scale=col_scale, row_scale=row_scale,
                               phase=complex(math.cos(coeffs.phi), math.sin(coeffs.phi)))


def apply_asymptotic_block(data: AsymptoticBlockData, coeffs: np.ndarray) -> np.ndarray:
    n_b, K = coeffs.shape
    n_terms = data.col_scale.shape[1]
    strengths = (data.col_scale[:, :, None] * coeffs[:, None, :]).reshape(n_b, n_terms * K)
    values = data.phase * data.plan.execute(strengths).reshape(-1, n_terms, K)
    parts = np.empty(values.shape)
    parts[:, 0::2, :] = values[:, 0::2, :].real
    parts[:, 1::2, :] = values[:, 1::2, :].imag
    return np.einsum('jt,jtk->jk', data.row_scale, parts)


def prepare_direct_block(nu: float, freqs: np.ndarray, points: np.ndarray) -> DirectBlockData:
    matrix = None
    if freqs.shape[0] * points.shape[0] <= _DENSE_CACHE_LIMIT:
        matrix = bessel_j(nu, np.outer(freqs, points))
    return DirectBlockData(nu=nu, freqs=freqs, points=points, matrix=matrix)


def apply_direct_block(data: DirectBlockData, coeffs: np.ndarray) -> np.ndarray:
    """稠密 O(m_b n_b) 求和"""
    if data.matrix is not None:
        return data.matrix @ coeffs
    return _dense_apply(data.nu, data.freqs, data.points, coeffs)


def _dense_apply(nu: float, freqs: np.ndarray, points: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    out = np.zeros((freqs.shape[0],) + coeffs.shape[1:], dtype=np.result_type(coeffs, float))
    rows = max(1, _DENSE_CHUNK // max(1, points.shape[0]))
    for start in range(0, freqs.shape[0], rows):
        out[start:start + rows] = bessel_j(nu, np.outer(freqs[start:start + rows], points)) @ coeffs
    return out


_EVALUATORS = {
    LocalBlockData: apply_local_block,
    AsymptoticBlockData: apply_asymptotic_block,
    DirectBlockData: apply_direct_block,
}


# ---------------------------------------------------------------------------
# 计划
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Plan:
    """一次 NUFHT 的不可变描述，可对任意系数向量重复使用"""
    nu: int
    eps: float
    params: ExpansionParams
    freqs: np.ndarray
    points: np.ndarray
    freq_perm: np.ndarray
    point_perm: np.ndarray
    partition: Partition
    block_data: Tuple[Any, ...]
    config: RuntimeConfig = field(repr=False)

    @property
    def m(self) -> int:
        return self.freqs.shape[0]

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def apply(self, c: np.ndarray) -> np.ndarray:
        return apply(self, c)

    def summary(self) -> Dict[str, Any]:
        p = self.partition
        return {
            'm': self.m,
            'n': self.n,
            'nu': self.nu,
            'eps': self.eps,
            'z': self.params.z,
            'L': self.params.L,
            'M': self.params.M,
            'local_blocks': p.count(BlockKind.LOCAL),
            'asymptotic_blocks': p.count(BlockKind.ASYMPTOTIC),
            'direct_blocks': p.count(BlockKind.DIRECT),
            'levels': p.level_count,
        }


def _check_array(name: str, values: Any) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise DomainError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    if np.any(arr < 0):
        raise DomainError(f"{name} must be nonnegative")
    return arr


def build_plan(nu: int, eps: float, freqs: Any, points: Any, min_size: Optional[int] = None,
               config: Optional[RuntimeConfig] = None, table: Optional[ParamTable] = None,
               exhaustive_split: bool = False) -> Plan:
    """排序输入、查参数、分块并预计算所有块因子"""
    config = config or load_runtime_config()
    table = table if table is not None else param_table
    params = get_params(table, nu, eps)
    nu = params.nu
    freqs = _check_array('freqs', freqs)
    points = _check_array('points', points)
    min_size = config.min_size if min_size is None else int(min_size)
    if min_size < 1:
        raise ParameterError(f"min_size must be positive, got {min_size}")

    freq_perm = np.argsort(freqs, kind='stable')
    point_perm = np.argsort(points, kind='stable')
    sf = freqs[freq_perm]
    sr = points[point_perm]
    partition = subdivide(sf, sr, params.z, min_size=min_size, exhaustive=exhaustive_split)

    backend = nufft_backend_select(config)
    local_ok = nu % 2 == 0 or wimp_self_check(nu, params.L, params.z, params.eps)
    data = []
    for block in partition.blocks:
        bf, br = sf[block.rows], sr[block.cols]
        if block.kind == BlockKind.LOCAL and local_ok:
            data.append(prepare_local_block(nu, params.L, bf, br))
        elif block.kind == BlockKind.ASYMPTOTIC:
            data.append(prepare_asymptotic_block(nu, params.M, params.eps, bf, br, backend))
        else:
            data.append(prepare_direct_block(nu, bf, br))

    plan = Plan(nu=nu, eps=float(eps), params=params, freqs=sf, points=sr, freq_perm=freq_perm,
                point_perm=point_perm, partition=partition, block_data=tuple(data), config=config)
    logger.info(
        "NUFHT plan built: m=%d n=%d nu=%d eps=%g z=%.6g L=%d M=%d blocks(local=%d, asymptotic=%d, direct=%d)",
        plan.m, plan.n, nu, eps, params.z, params.L, params.M,
        partition.count(BlockKind.LOCAL), partition.count(BlockKind.ASYMPTOTIC), partition.count(BlockKind.DIRECT),
    )
    return plan


def _evaluate(item: Tuple[Block, Any], coeffs: np.ndarray) -> np.ndarray:
    block, data = item
    return _EVALUATORS[type(data)](data, coeffs[block.cols])


def apply(plan: Plan, c: Any) -> np.ndarray:
    """g = A c，输出按用户给定的频率顺序排列；c 可为 (n,) 或 (n, K)，实数或复数"""
    c = np.asarray(c)
    if c.ndim == 0 or c.shape[0] != plan.n:
        raise ParameterError(f"expected {plan.n} coefficients, got {c.shape[0] if c.ndim else 'a scalar'}")
    if np.iscomplexobj(c):
        return apply(plan, c.real) + 1j * apply(plan, c.imag)
    if not np.all(np.isfinite(c)):
        raise DomainError("coefficients must be finite")

    squeeze = c.ndim == 1
    coeffs = np.asarray(c, dtype=float).reshape(plan.n, -1)[plan.point_perm]
    out = np.zeros((plan.m, coeffs.shape[1]))
    items = list(zip(plan.partition.blocks, plan.block_data))

    if plan.config.parallel_apply and plan.config.threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=plan.config.threads) as pool:
            increments = list(pool.map(lambda item: _evaluate(item, coeffs), items))
    else:
        increments = (_evaluate(item, coeffs) for item in items)
    # 固定按分块顺序累加，串行与并行结果逐位一致
    for (block, _), inc in zip(items, increments):
        out[block.rows] += inc

    result = np.empty_like(out)
    result[plan.freq_perm] = out
    return result[:, 0] if squeeze else result


def dht_direct(nu: float, freqs: Any, points: Any, c: Any) -> np.ndarray:
    """O(nm) 直接求和的参考实现"""
    freqs = _check_array('freqs', freqs)
    points = _check_array('points', points)
    c = np.asarray(c)
    if c.shape[0] != points.shape[0]:
        raise ParameterError(f"expected {points.shape[0]} coefficients, got {c.shape[0]}")
    return _dense_apply(nu, freqs, points, c)


def nufht(nu: int, eps: float, freqs: Any, points: Any, c: Any,
          min_size: Optional[int] = None, config: Optional[RuntimeConfig] = None) -> np.ndarray:
    """一次性变换：build_plan + apply"""
    return apply(build_plan(nu, eps, freqs, points, min_size=min_size, config=config), c)
