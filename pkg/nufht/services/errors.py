"""
NUFHT 异常类型
服务层抛出这些异常，管理命令再把它们映射成退出码
"""


class NufhtError(Exception):
    """所有 NUFHT 异常的基类"""


class DomainError(NufhtError, ValueError):
    """参数超出数学定义域（x < 0、ν < 0、未排序或非有限数组等）"""


class ParameterError(NufhtError, ValueError):
    """不支持的 ν / ε、未知后端、长度不一致"""


class ConvergenceError(NufhtError):
    """迭代或加倍过程在上限内未收敛"""


class GridSizeError(NufhtError):
    """NUFFT 细网格超过内存上限"""

    def __init__(self, required: int, limit: int):
        self.required = int(required)
        self.limit = int(limit)
        super().__init__(
            f"fine grid of {self.required} points exceeds the configured cap {self.limit} "
            f"(raise NUFHT_NUFFT_MAX_GRID to at least {self.required})"
        )


class ResonanceError(ConvergenceError):
    """κ² 与某个 Dirichlet 特征值过于接近"""

    def __init__(self, j: int, ell: int, kappa: float, root: float):
        self.j = int(j)
        self.ell = int(ell)
        super().__init__(
            f"kappa={kappa:.12g} resonates with mode (j={self.j}, l={self.ell}), "
            f"j_(l,j)={root:.12g}"
        )
