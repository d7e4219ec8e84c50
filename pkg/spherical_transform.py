"""
球 Fourier 变换及其反演

功能：
1. SpectralGrid：复合 Gauss-Legendre 面板离散 (0, Λ_max]
2. forward_transform：Ff(λ) = ∫_0^R f(r) φ_{-λ}(r) J(r) dr，Simpson 求积 + Richardson 误差估计，可加复偏移
3. inverse_transform：κ_n ∫ g(λ) φ_λ(r) |c(λ)|^{-2} dλ，噪声底以下的谱值置零后检查密度加权尾项
4. calibrate_inversion_constant：用高斯鼓包的往返最小二乘确定 κ_n（结果缓存）
5. 解析性与单射性的数值见证
"""
from dataclasses import dataclass, field
from typing import Iterator, Optional, Tuple

import numpy as np
from scipy import integrate, special

from calibration_cache import cache_result
from config import DEFAULT_SETTINGS, NumericsSettings, debug_print, info_print
from hyperbolic_space import HyperbolicSpace, RadialFunction, RadialGrid, volume_density
from spherical_functions import lp_strip, plancherel_density, spherical_table

# 每次求球函数表时处理的 λ 个数
LAMBDA_BLOCK = 128
# 截断检查使用的末段比例
TAIL_FRACTION = 0.05
INVERSE_TAIL_FRACTION = 0.1
# ODE 求得的 φ_λ 给变换值带来的噪声 ≈ ODE_NOISE_FACTOR·rtol·∫|f|J dr
ODE_NOISE_FACTOR = 100.0
# 模不超过 NOISE_SAFETY 倍噪声估计的谱值按零处理
NOISE_SAFETY = 10.0


class TruncationError(ValueError):
    """截断误差主导：前向积分尾项过大或反演积分不收敛"""


@dataclass(frozen=True, eq=False)
class SpectralGrid:
    """(0, Λ_max] 上的求积节点与权重"""
    points: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    lam_max: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or len(pts) == 0:
            raise ValueError("谱网格不能为空")
        if np.any(pts <= 0) or np.any(np.diff(pts) <= 0):
            raise ValueError("谱网格必须严格递增且全部为正")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))

    @classmethod
    def gauss_legendre(cls, lam_max: float, panel_width: float, nodes: int) -> "SpectralGrid":
        """
        复合 Gauss-Legendre 面板

        Args:
            lam_max: 截断频率
            panel_width: 面板宽度上限（实际宽度使面板数为整数）
            nodes: 每个面板的节点数
        """
        if lam_max <= 0 or panel_width <= 0 or nodes < 2:
            raise ValueError(f"谱网格参数无效: Λ_max={lam_max}, width={panel_width}, nodes={nodes}")
        panels = int(np.ceil(lam_max / panel_width))
        width = lam_max / panels
        x, w = special.roots_legendre(nodes)
        left = width * np.arange(panels)
        points = (left[:, None] + 0.5 * width * (x[None, :] + 1.0)).ravel()
        weights = np.tile(0.5 * width * w, panels)
        return cls(points=points, weights=weights, lam_max=float(lam_max))

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True, eq=False)
class SpectralFunction:
    """谱侧函数：网格上的复值采样"""
    grid: SpectralGrid
    values: np.ndarray = field(repr=False)
    offset: complex = 0j
    strip_half_width: Optional[float] = None   # 已知解析的条带半宽
    error_estimate: float = 0.0                # Richardson 求积误差估计
    tail_estimate: float = 0.0                 # 截断尾项相对估计
    noise: Optional[np.ndarray] = field(default=None, repr=False)   # 逐节点噪声底，缺省为 0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.grid.points.shape:
            raise ValueError(f"谱采样长度 {vals.shape} 与谱网格长度 {self.grid.points.shape} 不一致")
        object.__setattr__(self, "values", vals)
        noise = np.zeros(vals.shape) if self.noise is None else np.broadcast_to(
            np.abs(np.asarray(self.noise, dtype=float)), vals.shape).copy()
        object.__setattr__(self, "noise", noise)

    def scaled(self, factor) -> "SpectralFunction":
        """逐点乘以标量或与网格等长的数组；噪声底随 |factor| 缩放"""
        factor = np.asarray(factor)
        return SpectralFunction(self.grid, factor * self.values, self.offset, self.strip_half_width,
                                self.error_estimate, self.tail_estimate, self.noise * np.abs(factor))

    def signal(self) -> np.ndarray:
        """噪声底以下的值置零后的采样"""
        return np.where(np.abs(self.values) > self.noise, self.values, 0.0)


def spectral_grid_for(radius: float, lam_max: Optional[float] = None,
                      settings: Optional[NumericsSettings] = None) -> SpectralGrid:
    """
    与径向截断半径匹配的谱网格

    λ 方向被积函数的振荡频率不超过 2R，面板宽度取 min(panel_width, 3/R)。
    """
    settings = settings or DEFAULT_SETTINGS
    lam_max = settings.lam_max if lam_max is None else lam_max
    width = min(settings.panel_width, 3.0 / max(radius, 1e-12))
    return SpectralGrid.gauss_legendre(lam_max, width, settings.panel_nodes)


def _blocks(values: np.ndarray) -> Iterator[Tuple[int, int]]:
    for start in range(0, len(values), LAMBDA_BLOCK):
        yield start, min(start + LAMBDA_BLOCK, len(values))


def _transform_values(space: HyperbolicSpace, f: RadialFunction, lambdas: np.ndarray,
                      settings: NumericsSettings) -> Tuple[np.ndarray, float, float, float]:
    """
    对任意复 λ 计算 Ff，返回 (值, Richardson 误差, 相对尾项, 噪声底)

    偶数 n 时被积函数在 r = 0 处为奇函数，Simpson 的端点误差按 h^4 λ² 增长，
    Richardson 估计会把它计入噪声底；奇数 n 时被积函数为偶函数，误差呈谱精度。
    """
    r = f.grid.points
    weighted = f.values * volume_density(space, r)
    tail_start = r[-1] * (1.0 - TAIL_FRACTION)
    tail_mask = r >= tail_start
    values = np.empty(len(lambdas), dtype=complex)
    error = 0.0
    tail = 0.0
    for start, stop in _blocks(lambdas):
        # φ_{-λ} = φ_λ
        table = spherical_table(space, lambdas[start:stop], r, settings=settings)
        integrand = table * weighted[None, :]
        fine = integrate.simpson(integrand, x=r, axis=1)
        coarse = integrate.simpson(integrand[:, ::2], x=r[::2], axis=1)
        values[start:stop] = fine
        error = max(error, float(np.max(np.abs(fine - coarse))) / 15.0)
        magnitude = np.abs(integrand)
        total = integrate.trapezoid(magnitude, x=r, axis=1)
        tail_part = integrate.trapezoid(magnitude[:, tail_mask], x=r[tail_mask], axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(total > 0, tail_part / np.where(total > 0, total, 1.0), 0.0)
        tail = max(tail, float(np.max(ratio)))
    phi_noise = 0.0
    if space.dimension != 3:
        phi_noise = ODE_NOISE_FACTOR * settings.ode_rtol * float(integrate.trapezoid(np.abs(weighted), x=r))
    return values, error, tail, NOISE_SAFETY * max(error, phi_noise)


def forward_transform(space: HyperbolicSpace, f: RadialFunction, lam_grid: SpectralGrid,
                      lam_offset: complex = 0j, p: Optional[float] = None, check_tail: bool = True,
                      settings: Optional[NumericsSettings] = None) -> SpectralFunction:
    """
    前向球变换 Ff(λ + offset)

    Args:
        space: H^n
        f: 径向函数
        lam_grid: 谱网格（实部）
        lam_offset: 复偏移，用于在条带内求值
        p: 若给出且 p > 2，则要求 |Im offset| 不超过 L^p 条带半宽
        check_tail: 对截断尾项做检查；窗口截断的输入（有意紧支撑）可关闭

    Raises:
        TruncationError: 尾项估计超过 tail_tol
    """
    settings = settings or DEFAULT_SETTINGS
    lam_offset = complex(lam_offset)
    strip_half_width = None
    if p is not None and p > 2:
        strip_half_width = lp_strip(space, p).half_width
        if abs(lam_offset.imag) > strip_half_width + settings.boundary_tol:
            raise ValueError(f"偏移虚部 {lam_offset.imag} 超出 L^{p} 条带半宽 {strip_half_width}")
    lambdas = lam_grid.points + lam_offset
    values, error, tail, noise = _transform_values(space, f, lambdas, settings)
    if check_tail and tail > settings.tail_tol:
        raise TruncationError(f"前向变换被截断主导: 尾项相对估计 {tail:.3e} > {settings.tail_tol:.1e}，"
                              f"请增大 R_max（当前 {f.grid.r_max}）")
    debug_print(f"📊 前向变换: {len(lam_grid)} 个 λ, 误差估计 {error:.2e}, 尾项 {tail:.2e}, 噪声底 {noise:.2e}")
    return SpectralFunction(lam_grid, values, lam_offset, strip_half_width, error, tail, noise)


def inverse_tail(space: HyperbolicSpace, g: SpectralFunction) -> float:
    """
    反演被积函数 g·|c|^{-2} 在 [(1-INVERSE_TAIL_FRACTION)Λ_max, Λ_max] 上的质量占比

    只统计高于噪声底的谱值：噪声乘上 ~λ^{n-1} 的密度后不代表截断。
    """
    lam = g.grid.points
    magnitude = np.abs(g.signal() * plancherel_density(space, lam) * g.grid.weights)
    mass = float(magnitude.sum())
    if mass == 0:
        return 0.0
    return float(magnitude[lam >= (1.0 - INVERSE_TAIL_FRACTION) * g.grid.lam_max].sum()) / mass


def _inverse_raw(space: HyperbolicSpace, g: SpectralFunction, grid: RadialGrid,
                 settings: NumericsSettings) -> np.ndarray:
    if g.offset != 0:
        raise ValueError("反演只接受实 λ 网格上的谱函数（offset 必须为 0）")
    lam = g.grid.points
    tail = inverse_tail(space, g)
    if tail > settings.tail_tol:
        raise TruncationError(f"反演积分在 Λ_max={g.grid.lam_max} 处不收敛: 密度加权尾项 {tail:.3e}")
    weighted = g.signal() * plancherel_density(space, lam) * g.grid.weights
    out = np.zeros(len(grid), dtype=complex)
    for start, stop in _blocks(lam):
        table = spherical_table(space, lam[start:stop], grid.points, settings=settings)
        out += weighted[start:stop] @ table
    return out


def inverse_transform(space: HyperbolicSpace, g: SpectralFunction, grid: RadialGrid,
                      kappa: Optional[float] = None,
                      settings: Optional[NumericsSettings] = None) -> RadialFunction:
    """
    反演 f(r) = κ_n ∫_0^{Λ_max} g(λ) φ_λ(r) |c(λ)|^{-2} dλ

    Args:
        kappa: 反演常数，缺省时使用缓存的标定值
    """
    settings = settings or DEFAULT_SETTINGS
    if kappa is None:
        kappa = calibrate_inversion_constant(space, settings=settings)
    return RadialFunction(grid, kappa * _inverse_raw(space, g, grid, settings))


def gaussian_bump(grid: RadialGrid, width: float = 1.0, centre: float = 0.0) -> RadialFunction:
    """
    高斯鼓包 e^{-((r-centre)/width)^2}；centre ≠ 0 时取偶对称化
    e^{-((r-centre)/width)^2} + e^{-((r+centre)/width)^2}，保证在原点光滑
    """
    if width <= 0:
        raise ValueError(f"鼓包宽度必须为正，收到 {width}")
    r = grid.points
    values = np.exp(-((r - centre) / width) ** 2)
    if centre != 0:
        values = values + np.exp(-((r + centre) / width) ** 2)
    return RadialFunction(grid, values)


def _weighted_inner(space: HyperbolicSpace, u: np.ndarray, v: np.ndarray, r: np.ndarray) -> complex:
    return complex(integrate.simpson(np.conj(u) * v * volume_density(space, r), x=r))


@cache_result()
def calibrate_inversion_constant(space: HyperbolicSpace, width: float = 1.0,
                                 settings: Optional[NumericsSettings] = None) -> float:
    """
    标定反演常数 κ_n

    对参考鼓包 e^{-(r/w)^2} 做 κ=1 的往返得 v，取使 ‖κv - f‖_{L²} 最小的 κ = Re⟨v,f⟩/⟨v,v⟩。
    结果按 (space, width, settings) 缓存，重复调用返回同一值。
    """
    settings = settings or DEFAULT_SETTINGS
    radius = max(12.0, 6.0 * width)
    grid = RadialGrid.uniform(radius, settings.grid_step)
    bump = gaussian_bump(grid, width)
    spectral = forward_transform(space, bump, spectral_grid_for(radius, settings=settings), settings=settings)
    raw = _inverse_raw(space, spectral, grid, settings)
    r = grid.points
    kappa = _weighted_inner(space, raw, bump.values, r).real / _weighted_inner(space, raw, raw, r).real
    info_print(f"🔧 H^{space.dimension} 反演常数标定完成: κ = {kappa:.12g} (参考宽度 {width})")
    return float(kappa)


def analytic_inversion_constant(space: HyperbolicSpace) -> float:
    """κ_n 的解析值 2^{n-2}/(π·ω_{n-1})，用于核对标定结果"""
    return 2.0 ** (space.dimension - 2) / (np.pi * space.surface_const)


def relative_l2_error(space: HyperbolicSpace, approx: RadialFunction, exact: RadialFunction) -> float:
    """L²(J dr) 相对误差"""
    r = exact.grid.points
    diff = approx.values - exact.values
    num = _weighted_inner(space, diff, diff, r).real
    den = _weighted_inner(space, exact.values, exact.values, r).real
    return float(np.sqrt(max(num, 0.0) / den)) if den > 0 else float(np.sqrt(max(num, 0.0)))


def cauchy_riemann_residual(space: HyperbolicSpace, f: RadialFunction, centre: complex,
                            delta: float = 1e-3, settings: Optional[NumericsSettings] = None) -> float:
    """
    解析性见证：在 centre 附近的小方格上计算 |∂_x F + i ∂_y F| / max|F|
    """
    settings = settings or DEFAULT_SETTINGS
    centre = complex(centre)
    mesh = np.array([centre + delta, centre - delta, centre + 1j * delta, centre - 1j * delta, centre])
    values, *_ = _transform_values(space, f, mesh, settings)
    d_x = (values[0] - values[1]) / (2 * delta)
    d_y = (values[2] - values[3]) / (2 * delta)
    scale = max(float(np.max(np.abs(values))), 1e-300)
    return float(abs(d_x + 1j * d_y) / scale)


def recovery_constant(space: HyperbolicSpace, lam_grid: SpectralGrid, kappa: Optional[float] = None,
                      settings: Optional[NumericsSettings] = None) -> float:
    """
    单射性见证常数 C = κ_n Σ_j w_j |c(λ_j)|^{-2}

    实 λ 时 |φ_λ| ≤ 1，故 sup|inverse(g)| ≤ C·max|g|。
    """
    if kappa is None:
        kappa = calibrate_inversion_constant(space, settings=settings or DEFAULT_SETTINGS)
    return float(kappa * np.sum(lam_grid.weights * plancherel_density(space, lam_grid.points)))
