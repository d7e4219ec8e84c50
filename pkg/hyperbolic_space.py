"""
双曲空间 H^n 的径向几何

功能：
1. HyperbolicSpace：维数 n、ρ = (n-1)/2、单位球面面积常数
2. RadialGrid / RadialFunction：径向网格与 K 不变函数的采样表示
3. 体积密度 J(r)、球体积、径向拉普拉斯算子（正号约定）
4. 截断 L^p 范数及其指数尾项估计

曲率归一化为 -1。
"""
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy import integrate, special

from config import DEFAULT_SETTINGS, debug_print

# 拉普拉斯差分格式的阶
STENCIL_ORDER = 2


@dataclass(frozen=True)
class HyperbolicSpace:
    """实双曲空间 H^n（曲率 -1）"""
    dimension: int
    rho: float
    surface_const: float

    def __post_init__(self):
        if self.dimension < 2:
            raise ValueError(f"维数必须 ≥ 2，收到 n={self.dimension}")

    @property
    def eigen_floor(self) -> float:
        """L^2 谱底 ρ²"""
        return self.rho ** 2


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """均匀径向网格，首点为 0"""
    points: np.ndarray = field(repr=False)
    step: float
    r_max: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or len(pts) < 2:
            raise ValueError("径向网格至少需要 2 个点")
        if pts[0] != 0.0:
            raise ValueError("径向网格首点必须为 0")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("径向网格必须严格递增")
        # 径向 Laplace 差分与 Simpson 求积都按等距网格计算
        if self.step <= 0 or not np.allclose(np.diff(pts), self.step, rtol=1e-9, atol=0.0):
            raise ValueError(f"径向网格必须是步长 {self.step} 的等距网格")
        if not np.isclose(self.r_max, pts[-1], rtol=1e-12, atol=0.0):
            raise ValueError(f"r_max={self.r_max} 与网格末点 {pts[-1]} 不一致")
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, r_max: Optional[float] = None, step: Optional[float] = None) -> "RadialGrid":
        """
        构造 [0, r_max] 上步长为 step 的均匀网格

        r_max 会被调整为 step 的整数倍（向上取整）。
        """
        r_max = DEFAULT_SETTINGS.r_max if r_max is None else float(r_max)
        step = DEFAULT_SETTINGS.grid_step if step is None else float(step)
        if step <= 0 or r_max <= 0:
            raise ValueError(f"网格参数必须为正: r_max={r_max}, step={step}")
        count = int(np.ceil(r_max / step - 1e-9))
        points = step * np.arange(count + 1)
        return cls(points=points, step=step, r_max=float(points[-1]))

    def __len__(self) -> int:
        return len(self.points)

    def restricted(self, radius: float) -> "RadialGrid":
        """截取 [0, radius] 部分"""
        keep = self.points <= radius + 1e-12
        return RadialGrid(points=self.points[keep], step=self.step, r_max=float(self.points[keep][-1]))

    def coarsened(self) -> "RadialGrid":
        """每隔一个点取样（步长加倍），用于收敛阶检查"""
        return RadialGrid(points=self.points[::2], step=2 * self.step, r_max=float(self.points[::2][-1]))


@dataclass(frozen=True, eq=False)
class RadialFunction:
    """径向网格上的复值采样（K 不变函数）"""
    grid: RadialGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.grid.points.shape:
            raise ValueError(f"采样长度 {vals.shape} 与网格长度 {self.grid.points.shape} 不一致")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, grid: RadialGrid, func) -> "RadialFunction":
        return cls(grid=grid, values=func(grid.points))

    def scaled(self, factor: complex) -> "RadialFunction":
        return RadialFunction(self.grid, factor * self.values)

    def __add__(self, other: "RadialFunction") -> "RadialFunction":
        if len(other.grid) != len(self.grid):
            raise ValueError("两个径向函数的网格不一致")
        return RadialFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "RadialFunction") -> "RadialFunction":
        return self + other.scaled(-1.0)

    def restricted(self, radius: float) -> "RadialFunction":
        grid = self.grid.restricted(radius)
        return RadialFunction(grid, self.values[: len(grid)])

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if len(self.values) else 0.0


@dataclass(frozen=True)
class NormEstimate:
    """截断范数与尾项估计"""
    value: float
    tail: float           # ∫_R^∞ 部分的估计（对 |f|^p J 积分），发散时为 inf
    decay_rate: float     # 被积函数在末段的指数增长率（负数表示衰减）


def make_space(n: int) -> HyperbolicSpace:
    """
    创建 H^n

    Args:
        n: 维数，n ≥ 2

    Returns:
        HyperbolicSpace: ρ = (n-1)/2，surface_const = 2π^{n/2}/Γ(n/2)
    """
    if int(n) != n or n < 2:
        raise ValueError(f"维数必须是 ≥ 2 的整数，收到 n={n}")
    n = int(n)
    surface = 2.0 * np.pi ** (n / 2.0) / special.gamma(n / 2.0)
    debug_print(f"🔧 创建 H^{n}: ρ={(n - 1) / 2}, ω={surface:.6f}")
    return HyperbolicSpace(dimension=n, rho=(n - 1) / 2.0, surface_const=float(surface))


def volume_density(space: HyperbolicSpace, r: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """J(r) = ω·sinh(r)^{n-1}"""
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise ValueError(f"半径必须非负，收到 r={r}")
    density = space.surface_const * np.sinh(arr) ** (space.dimension - 1)
    return float(density) if np.ndim(r) == 0 else density


def ball_volume(space: HyperbolicSpace, r: float) -> float:
    """Vol(B(r)) = ∫_0^r J(s) ds"""
    if r < 0:
        raise ValueError(f"半径必须非负，收到 r={r}")
    value, _ = integrate.quad(lambda s: volume_density(space, s), 0.0, r, epsabs=1e-13, epsrel=1e-12)
    return float(value)


def radial_laplacian(space: HyperbolicSpace, f: RadialFunction) -> RadialFunction:
    """
    正号径向拉普拉斯 Δf = -f'' - (n-1)coth(r) f'

    内点用二阶中心差分；r=0 处用偶延拓 f_{-1}=f_1 得 Δf(0) = -n·f''(0)；
    末点用二阶单侧差分。
    """
    grid = f.grid
    if len(grid) < 5:
        raise ValueError(f"径向网格至少需要 5 个点才能定义差分格式，收到 {len(grid)}")
    h = grid.step
    r = grid.points
    v = f.values
    n = space.dimension

    first = np.empty_like(v)
    second = np.empty_like(v)
    first[1:-1] = (v[2:] - v[:-2]) / (2 * h)
    second[1:-1] = (v[2:] - 2 * v[1:-1] + v[:-2]) / h ** 2
    first[-1] = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * h)
    second[-1] = (2 * v[-1] - 5 * v[-2] + 4 * v[-3] - v[-4]) / h ** 2

    out = np.empty_like(v)
    out[1:] = -second[1:] - (n - 1) * first[1:] / np.tanh(r[1:])
    # 偶延拓
    out[0] = -n * 2 * (v[1] - v[0]) / h ** 2
    return RadialFunction(grid, out)


def _integrand_cumulative(space: HyperbolicSpace, f: RadialFunction, p: float):
    r = f.grid.points
    integrand = np.abs(f.values) ** p * volume_density(space, r)
    return r, integrand, integrate.cumulative_trapezoid(integrand, r, initial=0.0)


def lp_norm(space: HyperbolicSpace, f: RadialFunction, p: float, R: Optional[float] = None) -> float:
    """
    截断 L^p 范数 (∫_0^R |f|^p J dr)^{1/p}

    使用累积梯形公式，被积函数非负，结果关于 R 单调不减。
    """
    if p < 1:
        raise ValueError(f"p 必须 ≥ 1，收到 p={p}")
    R = f.grid.r_max if R is None else R
    if R > f.grid.r_max + 1e-12:
        raise ValueError(f"截断半径 R={R} 超出网格 R_max={f.grid.r_max}")
    r, _, cumulative = _integrand_cumulative(space, f, p)
    mass = float(np.interp(R, r, cumulative))
    return max(mass, 0.0) ** (1.0 / p)


def lp_norm_estimate(space: HyperbolicSpace, f: RadialFunction, p: float, R: Optional[float] = None,
                     window: float = 5.0) -> NormEstimate:
    """
    截断范数与指数尾项估计

    在 [R-window, R] 上对 log(|f|^p J) 做线性拟合得到增长率 κ；
    κ < 0 时尾项约为 g(R)/|κ|，否则视为发散（inf）。
    """
    value = lp_norm(space, f, p, R)
    R = f.grid.r_max if R is None else R
    r, integrand, _ = _integrand_cumulative(space, f, p)
    mask = (r >= max(R - window, r[1])) & (r <= R)
    positive = mask & (integrand > 0)
    if positive.sum() < 3:
        return NormEstimate(value=value, tail=0.0, decay_rate=-np.inf)
    slope, intercept = np.polyfit(r[positive], np.log(integrand[positive]), 1)
    if slope >= 0:
        tail = np.inf
    else:
        tail = float(np.exp(intercept + slope * R) / -slope)
    return NormEstimate(value=value, tail=tail, decay_rate=float(slope))
