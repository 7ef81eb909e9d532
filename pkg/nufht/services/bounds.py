"""
误差界与参数选择
Hankel 渐近系数 a_ℓ(ν)、截断误差界 B_asy / B_loc、交叉点 z 的求解、局部项数 L 的选择，
以及按 (ν, ε 十进位, M) 缓存的参数表
"""

import math
import logging
import threading
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .config import RuntimeConfig, load_runtime_config
from .errors import ConvergenceError, DomainError, ParameterError
from .special import siegel_psi

logger = logging.getLogger(__name__)

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)

MAX_COEFF_INDEX = 45
MAX_ASYMPTOTIC_TERMS = 20
MAX_LOCAL_TERMS = 2000

NU_MAX = 100
EPS_DECADES = tuple(range(-4, -16, -1))  # 1e-4 ... 1e-15
EPS_MIN = 1e-15
EPS_MAX = 1e-4

_RESIDUAL_TOL = 1e-10


def asymptotic_coeff(nu: float, ell: int) -> float:
    """a_ℓ(ν) = Π_{i=1..ℓ} (4ν² - (2i-1)²) / (ℓ! 8^ℓ)，按乘积递推构造"""
    if ell < 0 or ell > MAX_COEFF_INDEX:
        raise ParameterError(f"asymptotic coefficient index must lie in [0, {MAX_COEFF_INDEX}], got {ell}")
    return _coeff_table(float(nu))[ell]


@lru_cache(maxsize=512)
def _coeff_table(nu: float) -> Tuple[float, ...]:
    mu = 4.0 * nu * nu
    a = [1.0]
    for ell in range(1, MAX_COEFF_INDEX + 1):
        a.append(a[-1] * (mu - (2 * ell - 1) ** 2) / (8.0 * ell))
    return tuple(a)


@dataclass(frozen=True)
class AsymptoticCoeffs:
    """Hankel 展开 J_ν(x) ~ √(2/πx) Σ ... 的系数与相位 φ = -(2ν+1)π/4"""
    nu: float
    a: Tuple[float, ...]
    phi: float

    @classmethod
    def build(cls, nu: float, count: int) -> 'AsymptoticCoeffs':
        if count < 1 or count > MAX_COEFF_INDEX + 1:
            raise ParameterError(f"coefficient count must lie in [1, {MAX_COEFF_INDEX + 1}], got {count}")
        return cls(nu=float(nu), a=_coeff_table(float(nu))[:count], phi=-(2.0 * nu + 1.0) * math.pi / 4.0)


def b_asy(z: float, nu: float, M: int) -> float:
    """M 对渐近项截断误差界（首个被舍去项的大小）"""
    if z <= 0:
        raise DomainError(f"b_asy needs z > 0, got {z}")
    a = _coeff_table(float(nu))
    return SQRT_2_OVER_PI * (abs(a[2 * M]) * z ** -(2 * M + 0.5)
                             + abs(a[2 * M + 1]) * z ** -(2 * M + 1.5))


def _b_asy_log_slope(z: float, nu: float, M: int) -> float:
    """d log B_asy / d log z"""
    a = _coeff_table(float(nu))
    t1 = abs(a[2 * M]) * z ** -(2 * M + 0.5)
    t2 = abs(a[2 * M + 1]) * z ** -(2 * M + 1.5)
    return -((2 * M + 0.5) * t1 + (2 * M + 1.5) * t2) / (t1 + t2)


def b_loc(omega_R: float, nu: int, L: int) -> float:
    """Wimp 展开保留 ℓ = 0..L 时的截断误差界；Siegel 界不适用时返回 +∞"""
    if omega_R < 0:
        raise DomainError(f"b_loc needs omega_R >= 0, got {omega_R}")
    if omega_R == 0:
        return 0.0
    if L < 0:
        return math.inf
    denom_plus = 2 * L + 2 + nu
    if omega_R >= denom_plus:
        return math.inf
    beta = float(siegel_psi(omega_R / denom_plus))
    gamma = 0.0
    if L + 1 >= nu / 2:
        denom_minus = 2 * L + 2 - nu
        if denom_minus <= 0 or omega_R >= denom_minus:
            return math.inf
        gamma = float(siegel_psi(omega_R / denom_minus))
    if beta + gamma >= 0:
        return math.inf
    exponent = 0.5 * nu * (beta - gamma) + (L + 1) * (beta + gamma)
    return 2.0 * math.exp(exponent) / -math.expm1(beta + gamma)


def _check_eps(eps: float) -> None:
    if not (EPS_MIN * (1 - 1e-9) <= eps <= EPS_MAX * (1 + 1e-9)):
        raise ParameterError(f"tolerance {eps:g} outside the supported range [1e-15, 1e-4]")


def select_num_asymptotic_terms(nu: int, eps: float) -> int:
    """M = min(⌊1 + ν/5 - log₁₀(ε)/4⌋, 20)"""
    _check_eps(eps)
    # ν/5 + d/4 的小数部分是 0.05 的整数倍，1e-12 不会跨过取整边界
    m = math.floor(1 + nu / 5.0 - math.log10(eps) / 4.0 + 1e-12)
    return max(1, min(m, MAX_ASYMPTOTIC_TERMS))


def solve_crossover(nu: int, eps: float, M: int) -> float:
    """求 B_asy(z; ν, M) = ε 的根，括区间内的对数域 Newton，越界时二分"""
    if M < 1 or M > MAX_ASYMPTOTIC_TERMS:
        raise ParameterError(f"M must lie in [1, {MAX_ASYMPTOTIC_TERMS}], got {M}")
    if eps <= 0:
        raise ParameterError(f"tolerance must be positive, got {eps}")
    target = math.log(eps)

    def xi(t: float) -> float:
        return math.log(b_asy(math.exp(t), nu, M)) - target

    lo = max(float(nu), 1.0)
    # B_asy 在 z → 0 时发散，向左退总能括住
    for _ in range(200):
        if b_asy(lo, nu, M) >= eps:
            break
        lo *= 0.5
    else:
        raise ConvergenceError(f"could not bracket crossover for nu={nu}, eps={eps:g}, M={M}")
    hi = 2.0 * lo
    for _ in range(200):
        if b_asy(hi, nu, M) < eps:
            break
        hi *= 2.0
    else:
        raise ConvergenceError(f"could not bracket crossover for nu={nu}, eps={eps:g}, M={M}")

    t_lo, t_hi = math.log(lo), math.log(hi)
    t = 0.5 * (t_lo + t_hi)
    for _ in range(200):
        f = xi(t)
        if abs(f) <= _RESIDUAL_TOL:
            break
        if f > 0:
            t_lo = t
        else:
            t_hi = t
        step = f / _b_asy_log_slope(math.exp(t), nu, M)
        t_new = t - step
        if not (t_lo < t_new < t_hi):
            t_new = 0.5 * (t_lo + t_hi)
        t = t_new
    else:
        raise ConvergenceError(f"crossover Newton did not converge for nu={nu}, eps={eps:g}, M={M}")

    z = math.exp(t)
    # 保证 B_asy(z) ≤ ε 严格成立
    while b_asy(z, nu, M) > eps:
        z *= 1.0 + 1e-12
    return z


def select_local_terms(nu: int, eps: float, z: float) -> int:
    """最小的 L ≥ 0 使 B_loc(z; ν, L) < ε"""
    start = max(0, math.ceil((z - nu) / 2.0) - 1)
    for L in range(start, MAX_LOCAL_TERMS + 1):
        if b_loc(z, nu, L) < eps:
            return L
    logger.error("Local term count exceeds %d for nu=%s, eps=%g, z=%.6g", MAX_LOCAL_TERMS, nu, eps, z)
    raise ConvergenceError(
        f"no L <= {MAX_LOCAL_TERMS} satisfies B_loc(z={z:.6g}; nu={nu}) < {eps:g}; parameters are inconsistent"
    )


class ExpansionParams(BaseModel):
    """(ν, ε, M) 对应的交叉点 z 与局部项数 L"""
    model_config = ConfigDict(frozen=True)

    nu: int = Field(..., ge=0, le=NU_MAX, description="Bessel 阶数")
    eps: float = Field(..., gt=0, lt=1, description="十进位对齐后的容差")
    M: int = Field(..., ge=1, le=MAX_ASYMPTOTIC_TERMS, description="渐近项对数")
    z: float = Field(..., gt=0, description="交叉点 ωr")
    L: int = Field(..., ge=0, description="Wimp 展开的最高项序号")

    @model_validator(mode='after')
    def _check_bounds(self) -> 'ExpansionParams':
        if b_asy(self.z, self.nu, self.M) > self.eps:
            raise ValueError(f"B_asy(z={self.z}) exceeds eps={self.eps:g} for nu={self.nu}, M={self.M}")
        if not b_loc(self.z, self.nu, self.L) < self.eps:
            raise ValueError(f"B_loc(z={self.z}, L={self.L}) is not below eps={self.eps:g} for nu={self.nu}")
        return self

    @property
    def decade(self) -> int:
        return int(round(math.log10(self.eps)))

    def as_row(self) -> str:
        return f"{self.nu},{self.decade},{self.M},{self.z!r},{self.L}"


def eps_decade(eps: float) -> int:
    """把 ε 对齐到十进位；介于两个十进位之间时取更严格的一个"""
    _check_eps(eps)
    lg = math.log10(eps)
    nearest = round(lg)
    if abs(lg - nearest) < 1e-9:
        return int(nearest)
    return int(math.floor(lg))


def _check_nu(nu: Union[int, float]) -> int:
    if isinstance(nu, bool) or float(nu) != int(nu):
        raise ParameterError(f"transform order must be an integer, got {nu}")
    nu = int(nu)
    if not 0 <= nu <= NU_MAX:
        raise ParameterError(f"transform order must lie in [0, {NU_MAX}], got {nu}")
    return nu


def compute_params(nu: int, decade: int, M: Optional[int] = None) -> ExpansionParams:
    eps = 10.0 ** decade
    if M is None:
        M = select_num_asymptotic_terms(nu, eps)
    z = solve_crossover(nu, eps, M)
    L = select_local_terms(nu, eps, z)
    return ExpansionParams(nu=nu, eps=eps, M=M, z=z, L=L)


class ParamTable:
    """(ν, ε 十进位, M) → ExpansionParams 的惰性缓存，插入加锁，条目一旦写入不再修改"""

    def __init__(self, source: Optional[Union[str, Path]] = None):
        self._entries: Dict[Tuple[int, int, int], ExpansionParams] = {}
        self._lock = threading.Lock()
        self._source = source
        self._source_loaded = source is None

    @classmethod
    def from_config(cls, config: RuntimeConfig) -> 'ParamTable':
        """以 RuntimeConfig.param_table_file 作为惰性载入的来源"""
        return cls(source=config.param_table_file)

    def __len__(self) -> int:
        return len(self._entries)

    def _load_source(self) -> None:
        if self._source_loaded:
            return
        self._source_loaded = True
        path = Path(self._source)
        if path.exists():
            try:
                count = self.load(path)
                logger.info("Loaded %d parameter rows from %s", count, path)
            except (OSError, ValueError) as e:
                logger.warning("Ignoring parameter table %s: %s", path, str(e))

    def get(self, nu: Union[int, float], eps: float, M: Optional[int] = None) -> ExpansionParams:
        self._load_source()
        nu = _check_nu(nu)
        decade = eps_decade(eps)
        if M is None:
            M = select_num_asymptotic_terms(nu, 10.0 ** decade)
        key = (nu, decade, int(M))
        entry = self._entries.get(key)
        if entry is not None:
            return entry
        # 并发时可能重复计算同一条目，结果相同
        entry = compute_params(nu, decade, int(M))
        with self._lock:
            return self._entries.setdefault(key, entry)

    def insert(self, params: ExpansionParams) -> ExpansionParams:
        key = (params.nu, params.decade, params.M)
        with self._lock:
            return self._entries.setdefault(key, params)

    def warm(self, orders: Iterable[int] = range(NU_MAX + 1),
             decades: Iterable[int] = EPS_DECADES) -> int:
        """填满整张表（M 取启发式值），返回条目数"""
        decades = list(decades)
        for nu in orders:
            for d in decades:
                self.get(nu, 10.0 ** d)
        logger.info("Parameter table warm: %d entries", len(self))
        return len(self)

    def rows(self) -> List[ExpansionParams]:
        return [self._entries[key] for key in sorted(self._entries, key=lambda k: (k[0], -k[1], k[2]))]

    def dump(self, path: Union[str, Path]) -> int:
        rows = self.rows()
        lines = ["nu,eps_decade,M,z,L"] + [row.as_row() for row in rows]
        Path(path).write_text("\n".join(lines) + "\n", encoding='utf-8')
        return len(rows)

    def load(self, path: Union[str, Path]) -> int:
        """读入 dump 文件，每行都重新校验两个误差界"""
        count = 0
        for lineno, line in enumerate(Path(path).read_text(encoding='utf-8').splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith('#') or line.startswith('nu,'):
                continue
            try:
                nu, decade, M, z, L = line.split(',')
                params = ExpansionParams(nu=int(nu), eps=10.0 ** int(decade), M=int(M), z=float(z), L=int(L))
            except ValueError as e:
                raise ParameterError(f"{path}:{lineno}: invalid parameter row ({str(e).splitlines()[0]})") from e
            self.insert(params)
            count += 1
        return count


def get_params(table: 'ParamTable', nu: int, eps: float) -> ExpansionParams:
    """查表（或计算并缓存）(ν, ε) 的展开参数"""
    return table.get(nu, eps)


param_table = ParamTable.from_config(load_runtime_config())
