"""
平移热半群 T(t) = e^{-t(Δ-c)}

功能：
1. evolve：谱乘子实现（前向变换 → 乘 e^{-t(λ²+ρ²-c)} → 反演）
2. evolve_eigen：本征函数上的精确作用因子 e^{-tz}
3. orbit_trace：轨道的截断 L^p 范数序列
4. heat_kernel_h3 / heat_oracle_h3：H^3 显式热核与径向卷积（独立于谱路径的核对）
   heat_oracle_collocation：一般维数上径向热方程的 Chebyshev 配置与矩阵指数
5. windowed_evolution_error：窗口化本征展开的数值演化与精确演化之差
6. evolve_tensor：乘积空间上的张量半群
7. submarkov_check：c = 0 时的正性与 L^∞ 压缩
"""
from dataclasses import dataclass, replace
from functools import partial
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, interpolate, linalg

from config import DEFAULT_SETTINGS, NumericsSettings, debug_print, verbose_print
from hyperbolic_space import HyperbolicSpace, RadialFunction, RadialGrid, lp_norm
from spectral_regions import BranchCutError, on_branch_cut
from spherical_transform import forward_transform, inverse_transform, spectral_grid_for

DECAYING = "decaying"
GROWING = "growing"
UNIMODULAR = "unimodular"

# 热核卷积每次处理的输出半径个数
ORACLE_ROWS = 256
# 窗口截断引入的相对误差目标 e^{-WINDOW_EXPONENT}
WINDOW_EXPONENT = 40.0
# 配置法：每单位半径的正半轴节点数及上下限
COLLOCATION_DENSITY = 4.0
COLLOCATION_MIN = 64
COLLOCATION_MAX = 600


@dataclass(frozen=True)
class SemigroupConfig:
    """T(t) = e^{-t(Δ-c)} 作用在 L^p_# 上"""
    space: HyperbolicSpace
    p: float
    c: float
    t: float = 0.0

    def __post_init__(self):
        if self.p <= 1:
            raise ValueError(f"p 必须 > 1，收到 p={self.p}")
        if self.t < 0:
            raise ValueError(f"时间必须非负，收到 t={self.t}")

    def at(self, t: float) -> "SemigroupConfig":
        return replace(self, t=float(t))


@dataclass(frozen=True)
class SubmarkovReport:
    min_value: float
    input_max: float
    output_max: float
    noise_floor: float
    positive: bool
    contraction: bool


def multiplier(config: SemigroupConfig, lam: np.ndarray) -> np.ndarray:
    """e^{-t(λ² + ρ² - c)}，不读取 p"""
    rho2 = config.space.rho ** 2
    return np.exp(-config.t * (np.asarray(lam) ** 2 + rho2 - config.c))


def evolve(config: SemigroupConfig, f: RadialFunction,
           settings: Optional[NumericsSettings] = None) -> RadialFunction:
    """
    谱乘子演化 T(t)f

    λ 方向只积分到乘子相对衰减 e^{-multiplier_floor} 处：Λ = min(Λ_max, √(floor/t))。

    Raises:
        TruncationError: 前向或反演截断检查失败
    """
    settings = settings or DEFAULT_SETTINGS
    lam_max = settings.lam_max
    if config.t > 0:
        lam_max = min(lam_max, float(np.sqrt(settings.multiplier_floor / config.t)))
    grid = spectral_grid_for(f.grid.r_max, lam_max, settings)
    spectral = forward_transform(config.space, f, grid, settings=settings)
    evolved = spectral.scaled(multiplier(config, grid.points))
    debug_print(f"⏱️  evolve: t={config.t}, c={config.c}, Λ={lam_max:.3f}, {len(grid)} 个谱节点")
    return inverse_transform(config.space, evolved, f.grid, settings=settings)


def classify_eigen(z: complex) -> str:
    """T(t) 作用 e^{-tz}：Re z > 0 衰减，Re z < 0 增长"""
    real = complex(z).real
    if real > 0:
        return DECAYING
    if real < 0:
        return GROWING
    return UNIMODULAR


def evolve_eigen(config: SemigroupConfig, z: complex) -> complex:
    """
    本征值 z（Δ - c 的本征值）上的作用因子 e^{-tz}

    Raises:
        BranchCutError: z + c - ρ² 落在 (-∞, 0] 上
    """
    z = complex(z)
    if on_branch_cut(z + config.c - config.space.rho ** 2):
        raise BranchCutError(f"z={z} 使 z + c - ρ² 落在割线上 (c={config.c}, ρ²={config.space.rho ** 2})")
    return complex(np.exp(-config.t * z))


def orbit_trace(config: SemigroupConfig, f, times: Sequence[float], R: Optional[float] = None,
                settings: Optional[NumericsSettings] = None) -> List[Tuple[float, float]]:
    """
    轨道范数序列 [(t, ‖T(t)f‖_{L^p(B_R)})]

    f 可以是 RadialFunction（谱乘子演化），也可以是本征展开
    （提供 evolved(t) 与 materialize()，按 e^{-tz} 精确演化）。
    """
    times = [float(t) for t in times]
    if any(t < 0 for t in times):
        raise ValueError(f"时间必须非负: {times}")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError(f"时间序列必须严格递增: {times}")
    if not isinstance(f, RadialFunction) and f.c != config.c:
        raise ValueError(f"本征展开的平移 c={f.c} 与配置 c={config.c} 不一致")
    trace = []
    for t in times:
        if isinstance(f, RadialFunction):
            snapshot = evolve(config.at(t), f, settings=settings)
        else:
            snapshot = f.evolved(t).materialize()
        trace.append((t, lp_norm(config.space, snapshot, config.p, R)))
        verbose_print(f"   t={t:.6g}: ‖T(t)f‖ = {trace[-1][1]:.6e}")
    return trace


# ---------------------------------------------------------------- H^3 显式热核

def heat_kernel_h3(t: float, r) -> np.ndarray:
    """p_t(r) = (4πt)^{-3/2} (r/sinh r) e^{-t - r²/(4t)}"""
    if t <= 0:
        raise ValueError(f"热核要求 t > 0，收到 t={t}")
    r = np.asarray(r, dtype=float)
    ratio = np.ones_like(r)
    positive = r > 0
    ratio[positive] = r[positive] / np.sinh(r[positive])
    value = (4.0 * np.pi * t) ** -1.5 * ratio * np.exp(-t - r ** 2 / (4.0 * t))
    return float(value) if value.ndim == 0 else value


def _log_sinh(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return x + np.log(-np.expm1(-2.0 * x)) - np.log(2.0)


def _spherical_mean_kernel_h3(t: float, r: np.ndarray, s: np.ndarray) -> np.ndarray:
    """
    K_t(r, s) = ∫_{S(s)} p_t(d(x_r, y)) dσ(y)
              = 2π (sinh s / sinh r)(4πt)^{-3/2} e^{-t} 2t e^{-(r-s)²/4t}(1 - e^{-rs/t})
    r = 0 时退化为 4π s sinh s (4πt)^{-3/2} e^{-t - s²/4t}。
    """
    rr = r[:, None]
    ss = s[None, :]
    prefactor = (4.0 * np.pi * t) ** -1.5 * np.exp(-t)
    kernel = np.empty((len(r), len(s)))
    at_origin = r == 0
    if np.any(at_origin):
        kernel[at_origin] = 4.0 * np.pi * prefactor * s * np.exp(_log_sinh(s) - s ** 2 / (4.0 * t))
    rest = ~at_origin
    if np.any(rest):
        rp = rr[rest]
        exponent = _log_sinh(ss) - _log_sinh(rp) - (rp - ss) ** 2 / (4.0 * t)
        kernel[rest] = (2.0 * np.pi * prefactor * 2.0 * t * np.exp(exponent)
                        * -np.expm1(-rp * ss / t))
    return kernel


def heat_oracle_h3(f: RadialFunction, t: float, c: float = 0.0,
                   out_grid: Optional[RadialGrid] = None) -> RadialFunction:
    """
    H^3 上的径向卷积 (T(t)f)(r) = e^{tc} ∫_0^R f(s) K_t(r, s) ds

    Args:
        f: 输入径向函数（积分区间为其网格）
        t: 时间，> 0
        c: 平移
        out_grid: 输出网格，缺省为 f 的网格
    """
    if t <= 0:
        raise ValueError(f"热核卷积要求 t > 0，收到 t={t}")
    out_grid = f.grid if out_grid is None else out_grid
    s = f.grid.points
    out = np.empty(len(out_grid), dtype=complex)
    for start in range(0, len(out_grid), ORACLE_ROWS):
        stop = min(start + ORACLE_ROWS, len(out_grid))
        kernel = _spherical_mean_kernel_h3(t, out_grid.points[start:stop], s)
        out[start:stop] = integrate.simpson(kernel * f.values[None, :], x=s, axis=1)
    return RadialFunction(out_grid, np.exp(t * c) * out)


# ---------------------------------------------------------------- 一般维数的配置法核对

def collocation_size(radius: float, frequency: float = 0.0) -> int:
    """正半轴配置点数 M：[-R, R] 上共用 2M+2 个 Chebyshev 点"""
    size = int(np.ceil(radius * (COLLOCATION_DENSITY + 2.0 * frequency)))
    return int(min(COLLOCATION_MAX, max(COLLOCATION_MIN, size)))


def radial_collocation(space: HyperbolicSpace, radius: float, size: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    径向算子 -Δ = ∂_r² + (n-1)coth r ∂_r 的 Chebyshev 配置矩阵

    在 [-R, R] 上取 N = 2·size+1 阶 Chebyshev 点（原点不是节点），两端 Dirichlet 零边界，
    再按偶函数 u(-r) = u(r) 折叠到正半轴。

    Returns:
        (正半轴节点（递减）, size×size 矩阵)
    """
    if radius <= 0 or size < 2:
        raise ValueError(f"配置参数无效: R={radius}, size={size}")
    order = 2 * size + 1
    x = np.cos(np.pi * np.arange(order + 1) / order)
    weights = np.ones(order + 1)
    weights[[0, -1]] = 2.0
    weights *= (-1.0) ** np.arange(order + 1)
    diff = np.outer(weights, 1.0 / weights) / (x[:, None] - x[None, :] + np.eye(order + 1))
    diff -= np.diag(diff.sum(axis=1))
    diff /= radius
    nodes = radius * x[1:size + 1]
    first = diff[1:size + 1, 1:order]
    second = (diff @ diff)[1:size + 1, 1:order]
    operator = second + ((space.dimension - 1) / np.tanh(nodes))[:, None] * first
    return nodes, operator[:, :size] + operator[:, size:][:, ::-1]


def heat_oracle_collocation(space: HyperbolicSpace, sampler: Callable[[np.ndarray], np.ndarray], t: float,
                            c: float, radius: float, out_grid: RadialGrid,
                            size: Optional[int] = None) -> RadialFunction:
    """
    任意维数上 T(t)(f·1_{[0,R]}) 的独立核对：配置矩阵的矩阵指数作用于 f 的节点值

    Args:
        sampler: 在递增半径数组上求 f 的函数
        t: 时间，> 0
        radius: 窗口半径 R（Dirichlet 边界）
        out_grid: 输出网格，须在 [0, R] 内
        size: 正半轴配置点数，缺省按 collocation_size(radius)
    """
    if t <= 0:
        raise ValueError(f"配置法核对要求 t > 0，收到 t={t}")
    if out_grid.r_max >= radius:
        raise ValueError(f"输出网格 r ≤ {out_grid.r_max} 必须位于窗口 R={radius} 之内")
    size = collocation_size(radius) if size is None else size
    nodes, operator = radial_collocation(space, radius, size)
    initial = np.asarray(sampler(nodes[::-1]), dtype=complex)[::-1]
    evolved = linalg.expm(t * (operator + c * np.eye(size))) @ initial
    full = np.concatenate([[0.0], evolved, evolved[::-1], [0.0]])
    x = np.cos(np.pi * np.arange(2 * size + 2) / (2 * size + 1))
    values = interpolate.BarycentricInterpolator(radius * x, full)(out_grid.points)
    debug_print(f"🔍 配置法: n={space.dimension}, R={radius:.1f}, M={size}, t={t:.4f}")
    return RadialFunction(out_grid, values)


def window_radius(expansion, t: float, interior: float) -> float:
    """
    窗口半径：卷积被积函数在 s* = r + 2|Im μ|t 处达峰，
    再向外延伸使高斯因子降到 e^{-WINDOW_EXPONENT}
    """
    drift = 2.0 * max(abs(atom.mu.imag) for atom in expansion.atoms) * t
    return interior + drift + float(np.sqrt(4.0 * t * WINDOW_EXPONENT))


def windowed_evolution_error(config: SemigroupConfig, expansion, t: float, window: Optional[float] = None,
                             interior: float = 5.0, step: float = 1.0 / 32.0,
                             settings: Optional[NumericsSettings] = None) -> float:
    """
    窗口化本征展开 f·1_{[0,R_w]} 的数值演化与精确演化 e^{-tz} 在内部 [0, interior] 上的相对 L^p 误差

    H^3 上用显式热核卷积；其他维数用径向热方程的 Chebyshev 配置（heat_oracle_collocation）。
    两条路径都不经过 λ 方向的反演。
    """
    settings = settings or DEFAULT_SETTINGS
    if t <= 0:
        raise ValueError(f"窗口演化要求 t > 0，收到 t={t}")
    radius = window_radius(expansion, t, interior) if window is None else window
    if radius <= interior:
        raise ValueError(f"窗口半径 {radius} 必须大于内部半径 {interior}")
    grid = RadialGrid.uniform(radius, step)
    inner = grid.restricted(interior)
    if config.space.dimension == 3:
        numeric = heat_oracle_h3(expansion.materialize(grid, settings=settings), t, config.c, out_grid=inner)
    else:
        frequency = max(abs(atom.mu.real) for atom in expansion.atoms)
        numeric = heat_oracle_collocation(config.space, partial(expansion.values_at, settings=settings), t,
                                          config.c, radius, inner, collocation_size(radius, frequency))
    exact = expansion.evolved(t).materialize(inner, settings=settings)
    scale = lp_norm(config.space, exact, config.p)
    error = lp_norm(config.space, numeric - exact, config.p)
    debug_print(f"🔍 窗口演化: R_w={radius:.1f}, t={t:.4f}, 相对误差 {error / scale:.3e}")
    return float(error / scale) if scale > 0 else float(error)


# ---------------------------------------------------------------- 张量积与次马尔可夫性

def evolve_tensor(configs: Sequence[SemigroupConfig], factors: Sequence[RadialFunction],
                  settings: Optional[NumericsSettings] = None) -> List[RadialFunction]:
    """
    乘积空间 X_1 × ... × X_k 上的 T(t)(f_1 ⊗ ... ⊗ f_k) = ⊗ T_i(t) f_i

    各因子使用各自的平移 c_i，总平移为 Σc_i；要求 t 与 p 一致。
    """
    _check_tensor(configs, factors)
    return [evolve(cfg, f, settings=settings) for cfg, f in zip(configs, factors)]


def _check_tensor(configs: Sequence[SemigroupConfig], factors: Sequence) -> None:
    if not configs or len(configs) != len(factors):
        raise ValueError("配置与因子数目必须一致且非空")
    if len({cfg.t for cfg in configs}) != 1 or len({cfg.p for cfg in configs}) != 1:
        raise ValueError("张量半群要求各因子的 t 与 p 相同")


def factor_shifts(eigenvalues: Sequence[complex], c: float) -> List[float]:
    """
    把总平移 c 分给各因子：c_i = Re e_i - (Σ Re e_j - c)/k

    e_i 为各因子的 Δ_i 本征值；总本征值 z = Σe_i - c 为纯虚数时每个因子的作用都是单模的。
    """
    real = [complex(e).real for e in eigenvalues]
    excess = (sum(real) - c) / len(real)
    return [value - excess for value in real]


def evolve_tensor_eigen(configs: Sequence[SemigroupConfig], eigenvalues: Sequence[complex]) -> complex:
    """
    ⊗ T_i(t) 在 ⊗ φ_i 上的作用因子 Π e^{-t(e_i - c_i)}

    Raises:
        BranchCutError: 某个因子的 e_i - ρ_i² 落在 (-∞, 0] 上
    """
    _check_tensor(configs, eigenvalues)
    factor = 1.0 + 0j
    for cfg, e in zip(configs, eigenvalues):
        factor *= evolve_eigen(cfg, complex(e) - cfg.c)
    return factor


def submarkov_check(config: SemigroupConfig, f: RadialFunction, noise_floor: float = 1e-8,
                    settings: Optional[NumericsSettings] = None) -> SubmarkovReport:
    """c = 0 时 e^{-tΔ} 保持非负并且不增大上确界（容许求积噪声 noise_floor·max|f|）"""
    if config.c != 0:
        raise ValueError(f"次马尔可夫性只对 c = 0 成立，收到 c={config.c}")
    if np.any(f.values.real < 0) or np.any(f.values.imag != 0):
        raise ValueError("输入必须是非负实函数")
    out = evolve(config, f, settings=settings)
    input_max = float(np.max(f.values.real))
    floor = noise_floor * input_max
    min_value = float(np.min(out.values.real))
    output_max = float(np.max(out.values.real))
    return SubmarkovReport(min_value=min_value, input_max=input_max, output_max=output_max,
                           noise_floor=floor, positive=min_value >= -floor,
                           contraction=output_max <= input_max + floor)
