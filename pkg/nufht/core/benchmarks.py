"""
实验脚本：缩放与精度实验，结果以 CSV 行输出
计时只覆盖 apply；建计划的耗时写入日志
"""

import csv
import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, TextIO, Union

import numpy as np
from pydantic import BaseModel, Field

from services.config import RuntimeConfig, load_runtime_config
from services.errors import ParameterError
from services.special import bessel_roots
from services.transform import build_plan, dht_direct

logger = logging.getLogger(__name__)

CSV_FIELDS = ('experiment', 'n', 'm', 'p', 'nu', 'eps', 'time_ms', 'rel_err')
DEFAULT_MAX_N = 1 << 14
FIXED_SIZE = 1000
# p = ω_max r_max：1e4 起倍增，末点取 1e6
P_SCALING_PRODUCTS = tuple(1e4 * 2 ** k for k in range(7)) + (1e6,)
FIXED_PRODUCT = 1e5
PROBE_NONZEROS = 1000
ACCURACY_EPS = (1e-4, 1e-6, 1e-8, 1e-10, 1e-12)
SWEEP_EPS = (1e-4, 1e-6, 1e-8, 1e-10, 1e-12, 1e-14)
SWEEP_ORDERS = (0, 1, 2, 5, 10, 20, 50, 100)


class BenchRecord(BaseModel):
    """CSV 中的一行"""
    experiment: str = Field(..., description="实验名，直接求和的对照行带 ':direct' 后缀")
    n: int = Field(..., ge=1, description="点数")
    m: int = Field(..., ge=1, description="频率数")
    p: float = Field(..., ge=0, description="空间-频率乘积")
    nu: int = Field(..., ge=0, description="阶数")
    eps: float = Field(..., gt=0, description="容差")
    time_ms: float = Field(..., ge=0, description="apply 墙钟时间（毫秒）")
    rel_err: Optional[float] = Field(None, ge=0, le=1, description="相对 2-范数误差")

    def as_row(self) -> Dict[str, str]:
        return {
            'experiment': self.experiment,
            'n': str(self.n),
            'm': str(self.m),
            'p': f"{self.p:.6g}",
            'nu': str(self.nu),
            'eps': f"{self.eps:.0e}",
            'time_ms': f"{self.time_ms:.3f}",
            'rel_err': '' if self.rel_err is None else f"{self.rel_err:.3e}",
        }

    @property
    def exceeds_tolerance(self) -> bool:
        return self.rel_err is not None and self.rel_err > 10.0 * self.eps


@dataclass(frozen=True)
class BenchCase:
    """一次实验配置：点、频率与是否测误差"""
    experiment: str
    nu: int
    eps: float
    freqs: np.ndarray
    points: np.ndarray
    measure_error: bool = False


def space_frequency_product(freqs: np.ndarray, points: np.ndarray) -> float:
    return float((np.max(freqs) - np.min(freqs)) * (np.max(points) - np.min(points)))


def _sizes(start: int, max_n: int) -> List[int]:
    if max_n < start:
        return [max_n]
    return [1 << k for k in range(int(math.log2(start)), int(math.log2(max_n)) + 1)]


def equispaced(count: int, upper: float) -> np.ndarray:
    return np.linspace(0.0, upper, count)


def fourier_bessel_points(nu: int, n: int, m: Optional[int] = None) -> tuple:
    """ω_j = j_{ν,j}（j = 1..m），r_k = j_{ν,k} / j_{ν,n+1}（k = 1..n）"""
    m = n if m is None else m
    roots = bessel_roots(nu, max(n + 1, m))
    return roots[:m].copy(), roots[:n] / roots[n]


def exp_points(n: int) -> np.ndarray:
    """ω_j = r_j = 10^{log10 j - log10(n)/2}"""
    j = np.arange(1, n + 1, dtype=float)
    return 10.0 ** (np.log10(j) - math.log10(n) / 2.0)


# ---------------------------------------------------------------------------
# 实验定义
# ---------------------------------------------------------------------------

def _n_scaling(max_n: int, eps: float, nu: int) -> Iterator[BenchCase]:
    side = math.sqrt(FIXED_PRODUCT)
    for n in _sizes(1024, max_n):
        yield BenchCase('n-scaling', nu, eps, equispaced(FIXED_SIZE, side), equispaced(n, side))


def _m_scaling(max_n: int, eps: float, nu: int) -> Iterator[BenchCase]:
    side = math.sqrt(FIXED_PRODUCT)
    for m in _sizes(1024, max_n):
        yield BenchCase('m-scaling', nu, eps, equispaced(m, side), equispaced(FIXED_SIZE, side))


def _p_scaling(max_n: int, eps: float, nu: int) -> Iterator[BenchCase]:
    size = min(FIXED_SIZE, max_n)
    for p in P_SCALING_PRODUCTS:
        side = math.sqrt(p)
        yield BenchCase('p-scaling', nu, eps, equispaced(size, side), equispaced(size, side))


def _fourier_bessel(max_n: int, eps: float, nu: int) -> Iterator[BenchCase]:
    for n in _sizes(1024, max_n):
        freqs, points = fourier_bessel_points(nu, n)
        yield BenchCase('fourier-bessel', nu, eps, freqs, points)


def _exp_points(max_n: int, eps: float, nu: int) -> Iterator[BenchCase]:
    for n in _sizes(1024, max_n):
        values = exp_points(n)
        yield BenchCase('exp-points', nu, eps, values, values.copy(), measure_error=True)


def _eps_sweep(max_n: int, eps: float, nu: int) -> Iterator[BenchCase]:
    freqs, points = fourier_bessel_points(nu, min(FIXED_SIZE, max_n))
    for tol in SWEEP_EPS:
        yield BenchCase('eps-sweep', nu, tol, freqs, points, measure_error=True)


def _nu_sweep(max_n: int, eps: float, nu: int) -> Iterator[BenchCase]:
    for order in SWEEP_ORDERS:
        freqs, points = fourier_bessel_points(order, min(FIXED_SIZE, max_n))
        yield BenchCase('nu-sweep', order, eps, freqs, points, measure_error=True)


def _accuracy(max_n: int, eps: float, nu: int) -> Iterator[BenchCase]:
    freqs, points = fourier_bessel_points(nu, min(FIXED_SIZE, max_n))
    for tol in ACCURACY_EPS:
        yield BenchCase('accuracy', nu, tol, freqs, points, measure_error=True)


EXPERIMENTS: Dict[str, Callable[[int, float, int], Iterator[BenchCase]]] = {
    'n-scaling': _n_scaling,
    'm-scaling': _m_scaling,
    'p-scaling': _p_scaling,
    'fourier-bessel': _fourier_bessel,
    'exp-points': _exp_points,
    'eps-sweep': _eps_sweep,
    'nu-sweep': _nu_sweep,
    'accuracy': _accuracy,
}


# ---------------------------------------------------------------------------
# 运行
# ---------------------------------------------------------------------------

def sparse_probe(rng: np.random.Generator, n: int, nonzeros: int = PROBE_NONZEROS) -> tuple:
    """稀疏系数向量：返回 (c, 非零下标)"""
    idx = np.sort(rng.choice(n, size=min(nonzeros, n), replace=False))
    c = np.zeros(n)
    c[idx] = rng.standard_normal(idx.shape[0])
    return c, idx


def relative_error(approx: np.ndarray, exact: np.ndarray) -> float:
    scale = float(np.linalg.norm(exact))
    diff = float(np.linalg.norm(approx - exact))
    return diff / scale if scale > 0 else diff


def run_case(case: BenchCase, rng: np.random.Generator, config: RuntimeConfig,
             with_direct: bool = False) -> List[BenchRecord]:
    n, m = case.points.shape[0], case.freqs.shape[0]
    p = space_frequency_product(case.freqs, case.points)

    start = time.perf_counter()
    plan = build_plan(case.nu, case.eps, case.freqs, case.points, config=config)
    logger.info("Bench %s n=%d m=%d: plan built in %.1f ms", case.experiment, n, m,
                (time.perf_counter() - start) * 1e3)

    if case.measure_error:
        c, idx = sparse_probe(rng, n)
    else:
        c, idx = rng.standard_normal(n), None

    start = time.perf_counter()
    g = plan.apply(c)
    elapsed = (time.perf_counter() - start) * 1e3

    rel_err = None
    if idx is not None:
        rel_err = relative_error(g, dht_direct(case.nu, case.freqs, case.points[idx], c[idx]))
        if rel_err > 1.0:
            logger.warning("Bench %s n=%d eps=%g: rel_err %.3e clipped to 1", case.experiment, n, case.eps, rel_err)
            rel_err = 1.0

    records = [BenchRecord(experiment=case.experiment, n=n, m=m, p=p, nu=case.nu, eps=case.eps,
                           time_ms=elapsed, rel_err=rel_err)]
    if with_direct:
        start = time.perf_counter()
        dht_direct(case.nu, case.freqs, case.points, c)
        records.append(BenchRecord(experiment=f"{case.experiment}:direct", n=n, m=m, p=p, nu=case.nu,
                                   eps=case.eps, time_ms=(time.perf_counter() - start) * 1e3))
    return records


def run_experiment(name: str, seed: int = 0, max_n: int = DEFAULT_MAX_N, eps: float = 1e-8, nu: int = 0,
                   with_direct: bool = False, config: Optional[RuntimeConfig] = None) -> List[BenchRecord]:
    if name not in EXPERIMENTS:
        raise ParameterError(f"unknown experiment '{name}', expected one of: {', '.join(EXPERIMENTS)}")
    if max_n < 1:
        raise ParameterError(f"max_n must be positive, got {max_n}")
    config = config or load_runtime_config()
    rng = np.random.default_rng(seed)
    records: List[BenchRecord] = []
    for case in EXPERIMENTS[name](max_n, eps, nu):
        records.extend(run_case(case, rng, config, with_direct=with_direct))
    logger.info("Experiment %s finished: %d rows", name, len(records))
    return records


def write_csv(records: List[BenchRecord], out: Union[str, Path, TextIO]) -> None:
    if isinstance(out, (str, Path)):
        with open(out, 'w', newline='', encoding='utf-8') as handle:
            write_csv(records, handle)
        return
    writer = csv.DictWriter(out, fieldnames=CSV_FIELDS, lineterminator='\n')
    writer.writeheader()
    for record in records:
        writer.writerow(record.as_row())
