"""
NUFHT 的两个应用
1. 径向函数的 Fourier 变换：一维 Gauss-Legendre 求积 + NUFHT，节点数倍增直到收敛
2. 单位圆盘上的 Fourier-Bessel 展开与 Helmholtz 方程 (Δ + κ²) u = f（Dirichlet 边界）
"""

import math
import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np
import scipy.fft
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.special import gamma as gamma_fn

from .bounds import EPS_MAX, EPS_MIN, NU_MAX
from .config import RuntimeConfig, load_runtime_config
from .errors import ConvergenceError, DomainError, ParameterError, ResonanceError
from .special import bessel_j, bessel_roots, gauss_legendre
from .transform import build_plan

logger = logging.getLogger(__name__)

RADIAL_START_NODES = 32
RADIAL_MAX_NODES = 1 << 20
FB_START_RADIAL = 32
FB_START_ANGULAR = 64
RESONANCE_TOL = 1e-10


def _nufht_eps(eps: float, scale: float = 1.0) -> float:
    return min(max(eps / (100.0 * max(1.0, scale)), EPS_MIN), EPS_MAX)


# ---------------------------------------------------------------------------
# 径向 Fourier 变换
# ---------------------------------------------------------------------------

class RadialFourierJob(BaseModel):
    """径向函数 f 在 [0, 1] 上的 d 维 Fourier 变换任务"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    f: Callable[[np.ndarray], np.ndarray] = Field(..., description="[0, 1] 上的径向函数")
    freqs: np.ndarray = Field(..., description="目标频率 ω_j ≥ 0")
    eps: float = Field(1e-12, ge=EPS_MIN * (1 - 1e-9), le=EPS_MAX * (1 + 1e-9), description="收敛容差")
    dim: int = Field(2, ge=2, description="空间维数（偶数）")

    @field_validator('freqs', mode='before')
    @classmethod
    def _check_freqs(cls, value: Any) -> np.ndarray:
        arr = np.asarray(value, dtype=float).ravel()
        if arr.size == 0 or not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ValueError("freqs must be a nonempty array of finite nonnegative values")
        if arr.max() <= 0:
            raise ValueError("omega_max must be positive")
        return arr

    @field_validator('dim')
    @classmethod
    def _check_dim(cls, value: int) -> int:
        if value % 2:
            raise ValueError(f"only even dimensions are supported, got {value}")
        return value


def radial_fourier(f: Callable[[np.ndarray], np.ndarray], freqs: np.ndarray, eps: float,
                   dim: int = 2, config: Optional[RuntimeConfig] = None) -> np.ndarray:
    """(2π)^{d/2} ω^{1-d/2} ∫₀¹ f(r) r^{d/2} J_{d/2-1}(ωr) dr，Gauss-Legendre 节点数从 32 起倍增"""
    if dim < 2 or dim % 2:
        raise ParameterError(f"only even dimensions are supported, got {dim}")
    freqs = np.asarray(freqs, dtype=float)
    order = dim // 2 - 1
    config = config or load_runtime_config()
    positive = freqs > 0

    previous = None
    m = RADIAL_START_NODES
    while m <= RADIAL_MAX_NODES:
        rule = gauss_legendre(m, 0.0, 1.0)
        r = rule.nodes
        c = rule.weights * np.asarray(f(r), dtype=float) * r ** (dim / 2.0)
        values = np.empty(freqs.shape[0])
        if np.any(positive):
            plan = build_plan(order, _nufht_eps(eps, float(np.sum(np.abs(c)))), freqs[positive], r, config=config)
            values[positive] = plan.apply(c) * freqs[positive] ** (1.0 - dim / 2.0)
        if not np.all(positive):
            # ω → 0 极限：ω^{1-d/2} J_{d/2-1}(ωr) → r^{d/2-1} / (2^{d/2-1} Γ(d/2))
            values[~positive] = np.sum(c * r ** order) / (2.0 ** order * gamma_fn(dim / 2.0))
        values *= (2.0 * math.pi) ** (dim / 2.0)
        if previous is not None:
            change = float(np.max(np.abs(values - previous)))
            logger.debug("Radial quadrature m=%d change=%.3e", m, change)
            if change <= eps:
                return values
        previous = values
        m *= 2
    logger.error("Radial quadrature did not converge within %d nodes", RADIAL_MAX_NODES)
    raise ConvergenceError(f"radial quadrature did not converge to {eps:g} with {RADIAL_MAX_NODES} nodes")


def radial_fourier_disk(job: RadialFourierJob, config: Optional[RuntimeConfig] = None) -> np.ndarray:
    """二维径向 Fourier 变换 ĝ(ω) = 2π ∫₀¹ f(r) r J_0(ωr) dr"""
    return radial_fourier(job.f, job.freqs, job.eps, dim=job.dim, config=config)


def disk_indicator_transform(freqs: np.ndarray) -> np.ndarray:
    """单位圆盘指示函数的闭式变换 2π J_1(ω)/ω（ω = 0 处取 π）"""
    freqs = np.asarray(freqs, dtype=float)
    out = np.full(freqs.shape, math.pi)
    nz = freqs > 0
    out[nz] = 2.0 * math.pi * bessel_j(1, freqs[nz]) / freqs[nz]
    return out


# ---------------------------------------------------------------------------
# Fourier-Bessel 展开
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FourierBesselField:
    """系数 coeffs[j, ℓ + lmax] 对应基函数 J_|ℓ|(j_{|ℓ|,j+1} r) e^{iℓθ}；roots[j, |ℓ|] = j_{|ℓ|,j+1}"""
    coeffs: np.ndarray
    roots: np.ndarray

    @property
    def jmax(self) -> int:
        return self.coeffs.shape[0]

    @property
    def lmax(self) -> int:
        return (self.coeffs.shape[1] - 1) // 2

    @property
    def eigenvalues(self) -> np.ndarray:
        """λ_{jℓ} = -j_{ℓ,j}²，形状与 coeffs 相同"""
        return -self.expanded_roots() ** 2

    def expanded_roots(self) -> np.ndarray:
        orders = np.abs(np.arange(-self.lmax, self.lmax + 1))
        return self.roots[:, orders]

    def column(self, ell: int) -> np.ndarray:
        return self.coeffs[:, ell + self.lmax]

    def norms_squared(self) -> np.ndarray:
        """‖J_ℓ(j r) e^{iℓθ}‖² = π J_{|ℓ|+1}(j)²"""
        orders = np.abs(np.arange(-self.lmax, self.lmax + 1))
        return math.pi * bessel_j_next(orders, self.expanded_roots()) ** 2

    def energy(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2 * self.norms_squared()))

    def with_coeffs(self, coeffs: np.ndarray) -> 'FourierBesselField':
        return FourierBesselField(coeffs=coeffs, roots=self.roots)

    @classmethod
    def zeros(cls, jmax: int, lmax: int) -> 'FourierBesselField':
        return cls(coeffs=np.zeros((jmax, 2 * lmax + 1), dtype=complex), roots=root_table(jmax, lmax))


def bessel_j_next(orders: np.ndarray, roots: np.ndarray) -> np.ndarray:
    """J_{|ℓ|+1}(j_{|ℓ|,j})，orders 按列广播"""
    out = np.empty(roots.shape)
    for col, order in enumerate(orders):
        out[:, col] = bessel_j(int(order) + 1, roots[:, col])
    return out


def root_table(jmax: int, lmax: int) -> np.ndarray:
    """roots[j, ℓ] = j_{ℓ,j+1}，ℓ = 0..lmax"""
    return np.stack([bessel_roots(ell, jmax) for ell in range(lmax + 1)], axis=1)


def _pad(coeffs: np.ndarray, jmax: int, lmax: int) -> np.ndarray:
    """把较小的系数矩阵嵌入 (jmax, 2 lmax + 1)"""
    out = np.zeros((jmax, 2 * lmax + 1), dtype=complex)
    j_old, width = coeffs.shape
    l_old = (width - 1) // 2
    out[:j_old, lmax - l_old:lmax + l_old + 1] = coeffs
    return out


def _analyze_once(f: Callable, m: int, t: int, eps: float, config: RuntimeConfig) -> FourierBesselField:
    jmax, lmax = m // 2, t // 4
    rule = gauss_legendre(m, 0.0, 1.0)
    r = rule.nodes
    theta = 2.0 * math.pi * np.arange(t) / t
    samples = np.asarray(f(r[:, None], theta[None, :]), dtype=complex)
    samples = np.array(np.broadcast_to(samples, (m, t)))
    # 角向积分 (2π/t) Σ_q f e^{-iℓθ_q}
    angular = (2.0 * math.pi / t) * scipy.fft.fft(samples, axis=1, workers=config.threads)
    weights = rule.weights * r

    roots = root_table(jmax, lmax)
    coeffs = np.zeros((jmax, 2 * lmax + 1), dtype=complex)
    for order in range(lmax + 1):
        cols = [order] if order == 0 else [order, -order]
        c = np.stack([weights * angular[:, ell % t] for ell in cols], axis=1)
        if not np.any(c):
            continue
        plan = build_plan(order, _nufht_eps(eps), roots[:, order], r, config=config)
        radial = plan.apply(c)
        norm = math.pi * bessel_j(order + 1, roots[:, order]) ** 2
        for idx, ell in enumerate(cols):
            coeffs[:, ell + lmax] = radial[:, idx] / norm
    return FourierBesselField(coeffs=coeffs, roots=roots)


def fb_analyze(f: Callable[[np.ndarray, np.ndarray], np.ndarray], eps: float, lmax_cap: int = 64,
               jmax_cap: int = 1024, config: Optional[RuntimeConfig] = None) -> FourierBesselField:
    """Fourier-Bessel 系数 α_{jℓ} = ⟨f, J_ℓ(j r) e^{iℓθ}⟩ / (π J_{ℓ+1}(j)²)

    f(r, θ) 须可对广播数组求值。径向 m 点、角向 t 点同时倍增，直到相邻两次的相对变化
    与新增系数的相对范数都不超过 ε。
    """
    if lmax_cap > NU_MAX:
        raise ParameterError(f"lmax_cap must not exceed {NU_MAX}, got {lmax_cap}")
    config = config or load_runtime_config()
    m, t = FB_START_RADIAL, FB_START_ANGULAR
    previous: Optional[FourierBesselField] = None
    while m // 2 <= jmax_cap and t // 4 <= lmax_cap:
        field = _analyze_once(f, m, t, eps, config)
        norm = float(np.linalg.norm(field.coeffs))
        if norm == 0.0:
            logger.info("Fourier-Bessel analysis: forcing vanishes on the quadrature grid")
            return field
        if previous is not None:
            old = _pad(previous.coeffs, field.jmax, field.lmax)
            change = float(np.linalg.norm(field.coeffs - old)) / norm
            fresh = field.coeffs.copy()
            lo = field.lmax - previous.lmax
            fresh[:previous.jmax, lo:lo + previous.coeffs.shape[1]] = 0.0
            tail = float(np.linalg.norm(fresh)) / norm
            logger.debug("Fourier-Bessel m=%d t=%d change=%.3e tail=%.3e", m, t, change, tail)
            if change <= eps and tail <= eps:
                logger.info("Fourier-Bessel analysis converged: J=%d, lmax=%d", field.jmax, field.lmax)
                return field
        previous = field
        m *= 2
        t *= 2
    logger.error("Fourier-Bessel analysis did not converge (jmax_cap=%d, lmax_cap=%d)", jmax_cap, lmax_cap)
    raise ConvergenceError(
        f"Fourier-Bessel coefficients did not converge to {eps:g} within jmax={jmax_cap}, lmax={lmax_cap}"
    )


def _uniform_angles(theta: np.ndarray) -> bool:
    t = theta.shape[0]
    return t > 0 and np.allclose(theta, 2.0 * math.pi * np.arange(t) / t, rtol=0.0, atol=1e-13)


def fb_synthesize(field: FourierBesselField, r: np.ndarray, theta: np.ndarray, eps: float = 1e-12,
                  config: Optional[RuntimeConfig] = None) -> np.ndarray:
    """u(r_i, θ_q) = Σ_{j,ℓ} β_{jℓ} J_ℓ(j_{ℓ,j} r_i) e^{iℓθ_q}，返回 (len(r), len(θ))"""
    config = config or load_runtime_config()
    r = np.asarray(r, dtype=float).ravel()
    theta = np.asarray(theta, dtype=float).ravel()
    if np.any(r < 0) or np.any(r > 1):
        raise DomainError("synthesis radii must lie in [0, 1]")
    lmax = field.lmax
    radial = np.zeros((r.shape[0], 2 * lmax + 1), dtype=complex)
    nufht_eps = min(max(eps, EPS_MIN), EPS_MAX)
    for order in range(lmax + 1):
        cols = [order] if order == 0 else [order, -order]
        c = np.stack([field.column(ell) for ell in cols], axis=1)
        if not np.any(c):
            continue
        plan = build_plan(order, nufht_eps, r, field.roots[:, order], config=config)
        values = plan.apply(c)
        for idx, ell in enumerate(cols):
            radial[:, ell + lmax] = values[:, idx]

    t = theta.shape[0]
    if _uniform_angles(theta) and t >= 2 * lmax + 1:
        spectrum = np.zeros((r.shape[0], t), dtype=complex)
        ells = np.arange(-lmax, lmax + 1)
        spectrum[:, ells % t] = radial
        return t * scipy.fft.ifft(spectrum, axis=1, workers=config.threads)
    ells = np.arange(-lmax, lmax + 1)
    return radial @ np.exp(1j * np.outer(ells, theta))


# ---------------------------------------------------------------------------
# Helmholtz
# ---------------------------------------------------------------------------

class HelmholtzProblem(BaseModel):
    """(Δ + κ²) u = f，u(1, θ) = 0"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    forcing: Callable[[np.ndarray, np.ndarray], np.ndarray] = Field(..., description="f(r, θ)")
    kappa: float = Field(..., gt=0, description="波数 κ")
    eps: float = Field(1e-8, ge=EPS_MIN * (1 - 1e-9), le=EPS_MAX * (1 + 1e-9), description="容差")


def check_resonance(kappa: float, roots: np.ndarray) -> None:
    """|κ² - j_{ℓ,j}²| < 1e-10 κ² 时抛出 ResonanceError（j 从 1 计）"""
    gap = np.abs(kappa ** 2 - roots ** 2)
    bad = np.argwhere(gap < RESONANCE_TOL * kappa ** 2)
    if bad.size:
        j, ell = (int(v) for v in bad[0])
        logger.error("Helmholtz resonance at j=%d l=%d (kappa=%.12g)", j + 1, ell, kappa)
        raise ResonanceError(j + 1, ell, kappa, float(roots[j, ell]))


def helmholtz_solve(prob: HelmholtzProblem, forcing_field: Optional[FourierBesselField] = None,
                    lmax_cap: int = 64, jmax_cap: int = 1024,
                    config: Optional[RuntimeConfig] = None) -> FourierBesselField:
    """β_{jℓ} = α_{jℓ} / (λ_{jℓ} + κ²)"""
    alpha = forcing_field or fb_analyze(prob.forcing, prob.eps, lmax_cap=lmax_cap, jmax_cap=jmax_cap, config=config)
    check_resonance(prob.kappa, alpha.roots)
    denom = alpha.eigenvalues + prob.kappa ** 2
    return alpha.with_coeffs(alpha.coeffs / denom)


def apply_helmholtz_operator(field: FourierBesselField, kappa: float) -> FourierBesselField:
    """系数空间中的 (Δ + κ²)：乘以 λ_{jℓ} + κ²"""
    return field.with_coeffs(field.coeffs * (field.eigenvalues + kappa ** 2))


def eigenmode(j: int, ell: int) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """ψ_{jℓ}(r, θ) = J_|ℓ|(j_{|ℓ|,j} r) e^{iℓθ}，j 从 1 计"""
    if j < 1 or abs(ell) > NU_MAX:
        raise ParameterError(f"mode (j={j}, l={ell}) needs j >= 1 and |l| <= {NU_MAX}")
    root = float(bessel_roots(abs(ell), j)[j - 1])

    def mode(r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
        return bessel_j(abs(ell), root * r) * np.exp(1j * ell * theta)

    return mode


def manufactured_forcing(kappa: float, j: int = 2, ell: int = 0) -> Tuple[Callable, Callable]:
    """u* = ψ_{jℓ}，f = (κ² - j_{ℓ,j}²) u*；返回 (forcing, exact)"""
    exact = eigenmode(j, ell)
    root = float(bessel_roots(abs(ell), j)[j - 1])
    scale = kappa ** 2 - root ** 2

    def forcing(r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return scale * exact(r, theta)

    return forcing, exact


def eigen_forcing(kappa: float, j: int, ell: int) -> Tuple[Callable, Callable]:
    """f = ψ_{jℓ}，u = ψ_{jℓ} / (κ² - j_{ℓ,j}²)；返回 (forcing, exact)"""
    forcing = eigenmode(j, ell)
    root = float(bessel_roots(abs(ell), j)[j - 1])
    gap = kappa ** 2 - root ** 2
    scale = 1.0 / gap if gap else math.inf

    def exact(r: np.ndarray, theta: np.ndarray) -> np.ndarray:
        return scale * forcing(r, theta)

    return forcing, exact


def boundary_residual(field: FourierBesselField, n_theta: int = 256, eps: float = 1e-12,
                      config: Optional[RuntimeConfig] = None) -> float:
    """max_θ |u(1, θ)|"""
    theta = 2.0 * math.pi * np.arange(n_theta) / n_theta
    return float(np.max(np.abs(fb_synthesize(field, np.array([1.0]), theta, eps=eps, config=config))))


def summarize_field(field: FourierBesselField) -> Dict[str, Any]:
    return {
        'jmax': field.jmax,
        'lmax': field.lmax,
        'max_coeff': float(np.max(np.abs(field.coeffs))) if field.coeffs.size else 0.0,
        'energy': field.energy(),
    }
