"""
特殊函数内核层
Bessel J（实数阶）、Bessel 零点、Chebyshev 多项式、Gauss-Legendre 求积以及 Siegel 界中的 ψ 函数
"""

import math
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np
from numpy.polynomial import chebyshev as npcheb
from scipy import special as sp
from scipy.optimize import brentq

from .errors import ConvergenceError, DomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# 零点校验阈值
ROOT_RESIDUAL = 1e-12
_NEWTON_STEPS = 8


@dataclass(frozen=True)
class QuadratureRule:
    """[a, b] 上的求积规则"""
    nodes: np.ndarray
    weights: np.ndarray
    a: float
    b: float

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """对在 nodes 上取样的值求积（首轴）"""
        return np.tensordot(self.weights, values, axes=(0, 0))

    def __len__(self) -> int:
        return len(self.nodes)


def _scalar_or_array(x: np.ndarray, like) -> ArrayLike:
    return float(x) if np.ndim(like) == 0 else x


def bessel_j(nu: float, x: ArrayLike) -> ArrayLike:
    """J_ν(x)，ν ≥ 0 为实数阶，x ≥ 0，可对 x 向量化"""
    if nu < 0 or not math.isfinite(nu):
        raise DomainError(f"Bessel order must be a finite nonnegative real, got {nu}")
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0) or not np.all(np.isfinite(xs)):
        raise DomainError("Bessel argument must be finite and nonnegative")
    return _scalar_or_array(sp.jv(nu, xs), x)


def bessel_j_signed(n: int, x: ArrayLike) -> ArrayLike:
    """整数阶 J_n(x)，允许 n < 0：J_{-n} = (-1)^n J_n"""
    n = int(n)
    values = bessel_j(abs(n), x)
    if n < 0 and n % 2:
        return -values
    return values


def _mcmahon(nu: float, k: np.ndarray) -> np.ndarray:
    """McMahon 渐近展开给出的 j_{ν,k} 初值"""
    mu = 4.0 * nu * nu
    beta = (k + 0.5 * nu - 0.25) * np.pi
    e = 8.0 * beta
    return (beta
            - (mu - 1.0) / e
            - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * e ** 3)
            - 32.0 * (mu - 1.0) * (83.0 * mu ** 2 - 982.0 * mu + 3779.0) / (15.0 * e ** 5))


def _newton(nu: float, x: np.ndarray) -> np.ndarray:
    for _ in range(_NEWTON_STEPS):
        x = x - sp.jv(nu, x) / sp.jvp(nu, x)
    return x


def _scan_roots(nu: float, start: float, count: int) -> np.ndarray:
    """从 start 开始逐个括住并求根；步长 π/4 小于相邻零点间距"""
    step = 0.25 * np.pi
    roots = np.empty(count)
    a = start
    fa = sp.jv(nu, a)
    for i in range(count):
        b = a + step
        fb = sp.jv(nu, b)
        while fa * fb > 0:
            a, fa = b, fb
            b = a + step
            fb = sp.jv(nu, b)
        if fb == 0.0:
            root = b
        else:
            root = brentq(lambda t: sp.jv(nu, t), a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps)
        roots[i] = root
        a = root + step
        fa = sp.jv(nu, a)
    return roots


def _roots_valid(nu: float, roots: np.ndarray, previous: float) -> bool:
    if not np.all(np.isfinite(roots)):
        return False
    if np.max(np.abs(sp.jv(nu, roots))) > ROOT_RESIDUAL:
        return False
    gaps = np.diff(np.concatenate(([previous], roots)))
    # 相邻零点间距介于 (π - 0.7, 2π - 0.5)，跳根或重根都会越界
    return bool(np.all(gaps > np.pi - 0.7) and np.all(gaps < 2 * np.pi - 0.5))


@lru_cache(maxsize=256)
def _cached_roots(nu: float, count: int) -> tuple:
    # 小序号零点（k ≲ ν）McMahon 初值不可靠，改用逐个括根
    n_scan = min(count, int(2 * math.ceil(nu)) + 8)
    start = nu if nu > 0 else 0.0
    head = _scan_roots(nu, start, n_scan)
    if count == n_scan:
        return tuple(head)

    k = np.arange(n_scan + 1, count + 1, dtype=float)
    tail = _newton(nu, _mcmahon(nu, k))
    if not _roots_valid(nu, tail, head[-1]):
        logger.debug("McMahon/Newton roots rejected for nu=%s, scanning %d roots", nu, len(k))
        tail = _scan_roots(nu, head[-1] + 0.25 * np.pi, len(k))
    return tuple(np.concatenate((head, tail)))


def bessel_roots(nu: float, count: int) -> np.ndarray:
    """J_ν 的前 count 个正零点 j_{ν,1..count}"""
    if nu < 0 or not math.isfinite(nu):
        raise DomainError(f"Bessel order must be a finite nonnegative real, got {nu}")
    if count < 0:
        raise DomainError(f"root count must be nonnegative, got {count}")
    if count == 0:
        return np.empty(0)
    roots = np.array(_cached_roots(float(nu), int(count)))
    residual = np.max(np.abs(sp.jv(nu, roots)))
    if residual > ROOT_RESIDUAL or np.any(np.diff(roots) <= 0):
        logger.error("Bessel root finder failed for nu=%s (residual %.3e)", nu, residual)
        raise ConvergenceError(f"could not isolate {count} roots of J_{nu}")
    return roots


def bessel_root(nu: float, k: int) -> float:
    """J_ν 的第 k 个正零点 j_{ν,k}"""
    if k < 1:
        raise DomainError(f"root index must be >= 1, got {k}")
    return float(bessel_roots(nu, k)[k - 1])


def chebyshev_t(degree: int, y: ArrayLike) -> ArrayLike:
    """第一类 Chebyshev 多项式 T_n(y)，三项递推"""
    if degree < 0:
        raise DomainError(f"Chebyshev degree must be nonnegative, got {degree}")
    ys = np.asarray(y, dtype=float)
    if np.any(np.abs(ys) > 1.0 + 1e-12):
        raise DomainError("Chebyshev argument outside [-1, 1]")
    ys = np.clip(ys, -1.0, 1.0)
    prev, cur = np.ones_like(ys), ys
    if degree == 0:
        return _scalar_or_array(prev, y)
    for _ in range(degree - 1):
        prev, cur = cur, 2.0 * ys * cur - prev
    return _scalar_or_array(cur, y)


def chebyshev_vander(degree: int, y: np.ndarray) -> np.ndarray:
    """矩阵 [T_0(y), ..., T_degree(y)]，形状 (len(y), degree + 1)"""
    ys = np.clip(np.asarray(y, dtype=float), -1.0, 1.0)
    return npcheb.chebvander(ys, degree)


def gauss_legendre(m: int, a: float = -1.0, b: float = 1.0) -> QuadratureRule:
    """m 点 Gauss-Legendre 规则，映射到 [a, b]"""
    if m < 1:
        raise DomainError(f"quadrature order must be >= 1, got {m}")
    if not a < b:
        raise DomainError(f"empty interval [{a}, {b}]")
    x, w = sp.roots_legendre(m)
    half = 0.5 * (b - a)
    return QuadratureRule(nodes=half * x + 0.5 * (a + b), weights=half * w, a=float(a), b=float(b))


def siegel_psi(p: ArrayLike) -> ArrayLike:
    """ψ(p) = log p + √(1-p²) - log(1+√(1-p²))，0 < p ≤ 1"""
    ps = np.asarray(p, dtype=float)
    if np.any(ps <= 0) or np.any(ps > 1):
        raise DomainError("siegel_psi is defined on (0, 1]")
    s = np.sqrt(1.0 - ps * ps)
    return _scalar_or_array(np.log(ps) + s - np.log1p(s), p)
