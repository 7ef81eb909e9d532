"""
Type-III 非均匀离散 Fourier 变换
g_j = Σ_k c_k exp(i·s·ω_j·r_k)，s = ±1

内部实现：中心化 → 指数半圆 (ES) 核展布到均匀网格 → 2 倍过采样的 Type-2 步骤（FFT + 插值）→ 两侧去卷积。
展布与插值矩阵以 scipy.sparse 形式缓存在 Type3Plan 中，可对多组强度重复执行。
可选 finufft 适配器；未安装时静默退回内部实现。
"""

import math
import logging
from typing import Any, Optional, Union

import numpy as np
import scipy.fft
import scipy.sparse
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.special import roots_legendre

from .config import RuntimeConfig, load_runtime_config
from .errors import GridSizeError, ParameterError

logger = logging.getLogger(__name__)

try:
    import finufft
    FINUFFT_AVAILABLE = True
except ImportError:
    finufft = None
    FINUFFT_AVAILABLE = False

TOL_MIN = 1e-15
TOL_MAX = 1e-4
MAX_KERNEL_WIDTH = 16
_CHUNK = 1 << 16


class NufftRequest(BaseModel):
    """Type-III 请求：升序点、升序频率、复强度、容差与符号"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    points: np.ndarray = Field(..., description="升序的空间点 r_k")
    freqs: np.ndarray = Field(..., description="升序的频率 ω_j")
    strengths: np.ndarray = Field(..., description="复强度 c_k")
    tol: float = Field(1e-8, ge=TOL_MIN * (1 - 1e-9), le=TOL_MAX * (1 + 1e-9), description="相对误差容差")
    sign: int = Field(1, description="指数符号 ±1")

    @field_validator('points', 'freqs', mode='before')
    @classmethod
    def _as_real(cls, value: Any) -> np.ndarray:
        arr = np.ascontiguousarray(value, dtype=float)
        if arr.ndim != 1:
            raise ValueError("points and freqs must be one-dimensional")
        if not np.all(np.isfinite(arr)):
            raise ValueError("points and freqs must be finite")
        if np.any(np.diff(arr) < 0):
            raise ValueError("points and freqs must be sorted ascending")
        return arr

    @field_validator('strengths', mode='before')
    @classmethod
    def _as_complex(cls, value: Any) -> np.ndarray:
        arr = np.ascontiguousarray(value, dtype=complex)
        if not np.all(np.isfinite(arr)):
            raise ValueError("strengths must be finite")
        return arr

    @field_validator('sign')
    @classmethod
    def _check_sign(cls, value: int) -> int:
        if value not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {value}")
        return value

    @model_validator(mode='after')
    def _check_lengths(self) -> 'NufftRequest':
        if self.strengths.shape[0] != self.points.shape[0]:
            raise ValueError(
                f"{self.points.shape[0]} points but {self.strengths.shape[0]} strengths"
            )
        return self


class FineGrid(BaseModel):
    """过采样均匀细网格的描述"""
    model_config = ConfigDict(frozen=True)

    size: int = Field(..., gt=0, description="细网格点数 N")
    spacing: float = Field(..., gt=0, description="展布网格间距 Δx")
    width: int = Field(..., ge=2, description="核宽度 w（网格点数）")
    beta: float = Field(..., gt=0, description="ES 核形状参数")


def kernel_width(tol: float) -> int:
    """w = ⌈log₁₀(1/tol)⌉ + 3，上限 16"""
    return min(int(math.ceil(math.log10(1.0 / tol))) + 3, MAX_KERNEL_WIDTH)


def es_kernel(z: np.ndarray, beta: float) -> np.ndarray:
    """exp(β(√(1-z²) - 1))，|z| ≥ 1 处为 0"""
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    inside = np.abs(z) < 1.0
    out[inside] = np.exp(beta * (np.sqrt(1.0 - z[inside] ** 2) - 1.0))
    return out


def es_kernel_ft(xi: np.ndarray, half_width: float, width: int, beta: float) -> np.ndarray:
    """ψ̂(ξ) = α ∫_{-1}^{1} ES(q) cos(ξαq) dq，Gauss-Legendre 求积，分块避免大临时数组"""
    q, wq = roots_legendre(2 * width + 40)
    weights = half_width * wq * es_kernel(q, beta)
    xi = np.asarray(xi, dtype=float).ravel()
    out = np.empty(xi.shape[0])
    for start in range(0, xi.shape[0], _CHUNK):
        block = xi[start:start + _CHUNK]
        out[start:start + _CHUNK] = np.cos(np.outer(block, half_width * q)) @ weights
    return out


def _sparse_kernel_matrix(centers: np.ndarray, spacing: float, half_width: float, width: int,
                          beta: float, n_cols: int, offset: int, wrap: Optional[int]) -> scipy.sparse.csr_matrix:
    """行 = centers，列 = 均匀网格下标；元素为 ES((x - nΔ)/α)"""
    first = np.ceil((centers - half_width) / spacing).astype(np.int64)
    taps = np.arange(width + 1, dtype=np.int64)
    idx = first[:, None] + taps[None, :]
    vals = es_kernel((centers[:, None] - idx * spacing) / half_width, beta)
    cols = idx % wrap if wrap is not None else idx + offset
    rows = np.repeat(np.arange(centers.shape[0]), width + 1)
    return scipy.sparse.csr_matrix((vals.ravel(), (rows, cols.ravel())), shape=(centers.shape[0], n_cols))


class Type3Plan:
    """一组固定点与频率上的 Type-III 计划，执行时只依赖强度"""

    def __init__(self, points: np.ndarray, freqs: np.ndarray, tol: float = 1e-8, sign: int = 1,
                 max_grid: Optional[int] = None, workers: Optional[int] = None):
        if sign not in (1, -1):
            raise ParameterError(f"sign must be +1 or -1, got {sign}")
        self.points = np.asarray(points, dtype=float)
        self.freqs = np.asarray(freqs, dtype=float)
        self.tol = max(float(tol), TOL_MIN)
        self.sign = sign
        self.workers = workers
        self.n = self.points.shape[0]
        self.m = self.freqs.shape[0]
        self.grid: Optional[FineGrid] = None

        if self.n == 0 or self.m == 0:
            self._trivial = True
            return

        x_c = 0.5 * (self.points.min() + self.points.max())
        s_c = 0.5 * (self.freqs.min() + self.freqs.max())
        X = 0.5 * (self.points.max() - self.points.min())
        S = 0.5 * (self.freqs.max() - self.freqs.min())
        x = self.points - x_c
        s = self.freqs - s_c
        self._pre = np.exp(1j * sign * s_c * x)
        self._post = np.exp(1j * sign * self.freqs * x_c)
        self._trivial = X == 0.0 or S == 0.0
        if self._trivial:
            return

        w = kernel_width(self.tol)
        beta = 2.30 * w
        dx = 0.5 * math.pi / S
        alpha1 = 0.5 * w * dx
        n1_half = int(math.ceil((X + alpha1) / dx)) + 2
        n1 = 2 * n1_half
        n2 = scipy.fft.next_fast_len(2 * n1)
        limit = max_grid if max_grid is not None else load_runtime_config().nufft_max_grid
        if n2 > limit:
            logger.error("Type-III fine grid %d exceeds cap %d (X=%.3g, S=%.3g)", n2, limit, X, S)
            raise GridSizeError(required=n2, limit=limit)

        h2 = 2.0 * math.pi / n2
        alpha2 = 0.5 * w * h2
        self.grid = FineGrid(size=n2, spacing=dx, width=w, beta=beta)
        self._n1_half = n1_half
        self._n2 = n2

        # 第一步：点 → 间距 Δx 的网格，下标 n ∈ [-N1/2, N1/2)
        self._spread = _sparse_kernel_matrix(x, dx, alpha1, w, beta, n1, n1_half, None).T.tocsr()
        # 第二步：细网格 τ_l = l·h2 → 目标 t_j = s_j·Δx
        t = s * dx
        self._interp = _sparse_kernel_matrix(t, h2, alpha2, w, beta, n2, 0, n2)
        modes = np.arange(-n1_half, n1_half)
        self._embed = modes % n2
        self._mode_scale = 1.0 / es_kernel_ft(modes, alpha2, w, beta)
        self._post = self._post * (dx * h2) / es_kernel_ft(s, alpha1, w, beta)
        logger.debug("Type-III plan n=%d m=%d N1=%d N2=%d w=%d", self.n, self.m, n1, n2, w)

    def execute(self, strengths: np.ndarray) -> np.ndarray:
        """对强度 (n,) 或 (n, K) 执行，返回 (m,) 或 (m, K) 复数组"""
        c = np.asarray(strengths, dtype=complex)
        if c.shape[0] != self.n:
            raise ParameterError(f"expected {self.n} strengths, got {c.shape[0]}")
        squeeze = c.ndim == 1
        if squeeze:
            c = c[:, None]
        if self.m == 0 or self.n == 0:
            out = np.zeros((self.m, c.shape[1]), dtype=complex)
        elif self._trivial:
            out = self._post[:, None] * (self._pre @ c)[None, :]
        else:
            b = self._spread @ (self._pre[:, None] * c)
            fine = np.zeros((self._n2, c.shape[1]), dtype=complex)
            fine[self._embed] = b * self._mode_scale[:, None]
            if self.sign > 0:
                fine = scipy.fft.ifft(fine, axis=0, workers=self.workers) * self._n2
            else:
                fine = scipy.fft.fft(fine, axis=0, workers=self.workers)
            out = self._post[:, None] * (self._interp @ fine)
        return out[:, 0] if squeeze else out


def nudft_direct(req: NufftRequest) -> np.ndarray:
    """O(nm) 直接求和"""
    c = req.strengths
    out = np.zeros((req.freqs.shape[0],) + c.shape[1:], dtype=complex)
    rows = max(1, (1 << 22) // max(1, req.points.shape[0]))
    for start in range(0, req.freqs.shape[0], rows):
        phase = np.exp(1j * req.sign * np.outer(req.freqs[start:start + rows], req.points))
        out[start:start + rows] = phase @ c
    return out


class InternalBackend:
    """内部 ES 核实现"""
    name = 'internal'

    def __init__(self, config: RuntimeConfig):
        self.config = config

    def plan(self, points: np.ndarray, freqs: np.ndarray, tol: float, sign: int = 1) -> Type3Plan:
        return Type3Plan(points, freqs, tol=tol, sign=sign,
                         max_grid=self.config.nufft_max_grid, workers=self.config.threads)


class _FinufftPlan:
    def __init__(self, points: np.ndarray, freqs: np.ndarray, tol: float, sign: int):
        self.points = np.ascontiguousarray(points, dtype=float)
        self.freqs = np.ascontiguousarray(freqs, dtype=float)
        self.tol = tol
        self.sign = sign
        self.n = self.points.shape[0]
        self.m = self.freqs.shape[0]

    def execute(self, strengths: np.ndarray) -> np.ndarray:
        c = np.asarray(strengths, dtype=complex)
        if c.shape[0] != self.n:
            raise ParameterError(f"expected {self.n} strengths, got {c.shape[0]}")
        if self.n == 0 or self.m == 0:
            return np.zeros((self.m,) + c.shape[1:], dtype=complex)
        if c.ndim == 1:
            return finufft.nufft1d3(self.points, np.ascontiguousarray(c), self.freqs,
                                    eps=self.tol, isign=self.sign)
        cols = [finufft.nufft1d3(self.points, np.ascontiguousarray(c[:, k]), self.freqs,
                                 eps=self.tol, isign=self.sign) for k in range(c.shape[1])]
        return np.stack(cols, axis=1)


class FinufftBackend:
    """finufft.nufft1d3 适配器"""
    name = 'finufft'

    def __init__(self, config: RuntimeConfig):
        self.config = config

    def plan(self, points: np.ndarray, freqs: np.ndarray, tol: float, sign: int = 1) -> _FinufftPlan:
        return _FinufftPlan(points, freqs, tol, sign)


Backend = Union[InternalBackend, FinufftBackend]


def nufft_backend_select(config: Union[RuntimeConfig, str, None] = None) -> Backend:
    """按配置选择后端；finufft 不可用时退回内部实现"""
    if config is None:
        config = load_runtime_config()
    elif isinstance(config, str):
        config = load_runtime_config(nufft_backend=config)
    if config.nufft_backend == 'finufft':
        if FINUFFT_AVAILABLE:
            return FinufftBackend(config)
        logger.warning("finufft backend requested but not installed; using internal NUFFT")
        return InternalBackend(config)
    if config.nufft_backend == 'internal':
        return InternalBackend(config)
    raise ParameterError(f"unknown NUFFT backend '{config.nufft_backend}'")


def nufft_type3(req: NufftRequest, config: Optional[RuntimeConfig] = None) -> np.ndarray:
    """按请求容差执行一次 Type-III 变换"""
    backend = nufft_backend_select(config)
    return backend.plan(req.points, req.freqs, req.tol, req.sign).execute(req.strengths)
