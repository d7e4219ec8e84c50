"""
L^p 谱区域代数

功能：
1. ParabolicRegion：P_p - c，顶点 c_p = 4ρ²/p(1-1/p)，半宽 b_p = ρ|2/p-1|
2. region_contains：用主值平方根判断 w 属于内部/边界/外部
3. imaginary_axis_section：点谱与虚轴的交 [-Y, Y]
4. sector_bound：P_p 所在扇形的半角与解析角下界
5. OmegaRegion / strip_image：Ω 与条带 S_p
6. 乘积空间：阈值求和、‖ρ‖ 几何、Ω' 与 h(z)；欧氏/紧因子的实谱求和

本模块只做复平面几何，不依赖数值积分。
"""
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from config import DEFAULT_SETTINGS
from spherical_functions import LpStrip, dual_exponent

INTERIOR = "interior"
BOUNDARY = "boundary"
EXTERIOR = "exterior"

SECTION_INTERVAL = "interval"
SECTION_POINT = "point"
SECTION_EMPTY = "empty"


class BranchCutError(ValueError):
    """z + c - ρ² 落在主值平方根的割线 (-∞, 0] 上"""


def apex_threshold(rho: float, p: float) -> float:
    """c_p = 4ρ²/p·(1 - 1/p)"""
    if p <= 1:
        raise ValueError(f"p 必须 > 1，收到 p={p}")
    if rho <= 0:
        raise ValueError(f"ρ 必须为正，收到 ρ={rho}")
    return 4.0 * rho ** 2 / p * (1.0 - 1.0 / p)


def strip_half_width(rho: float, p: float) -> float:
    """b_p = ρ|2/p - 1|"""
    if p <= 1:
        raise ValueError(f"p 必须 > 1，收到 p={p}")
    return rho * abs(2.0 / p - 1.0)


def principal_root(w: complex) -> complex:
    return complex(np.sqrt(complex(w)))


def on_branch_cut(w: complex) -> bool:
    w = complex(w)
    return w.imag == 0.0 and w.real <= 0.0


@dataclass(frozen=True)
class ParabolicRegion:
    """P_p - c"""
    rho_norm: float
    p: float
    c: float

    def __post_init__(self):
        if self.p <= 1:
            raise ValueError(f"p 必须 > 1，收到 p={self.p}")
        if self.rho_norm <= 0:
            raise ValueError(f"ρ 必须为正，收到 ρ={self.rho_norm}")

    @property
    def b_p(self) -> float:
        return strip_half_width(self.rho_norm, self.p)

    @property
    def apex(self) -> float:
        return apex_threshold(self.rho_norm, self.p)

    @property
    def ray_start(self) -> float:
        """被排除射线的端点 ρ² - c"""
        return self.rho_norm ** 2 - self.c

    def parameter(self, w: complex) -> complex:
        """w + c = ρ² + z² 的主值解 z"""
        return principal_root(complex(w) + self.c - self.rho_norm ** 2)


def make_region(rho: float, p: float, c: float) -> ParabolicRegion:
    return ParabolicRegion(rho_norm=float(rho), p=float(p), c=float(c))


def region_contains(region: ParabolicRegion, w: complex, tol: Optional[float] = None) -> str:
    """
    判断 w 相对 P_p - c 的位置

    p = 2 时区域退化为射线 [ρ² - c, ∞)，射线上的点记为 boundary。
    """
    tol = DEFAULT_SETTINGS.boundary_tol if tol is None else tol
    gap = abs(region.parameter(w).imag) - region.b_p
    if abs(gap) <= tol:
        return BOUNDARY
    return INTERIOR if gap < 0 else EXTERIOR


@dataclass(frozen=True)
class AxisSection:
    """点谱与虚轴的交"""
    kind: str
    half_length: Optional[float]   # interval 时为 Y，point 时为 0，empty 时为 None
    reason: str

    @property
    def has_interior(self) -> bool:
        return self.kind == SECTION_INTERVAL and self.half_length is not None and self.half_length > 0


def imaginary_axis_section(region: ParabolicRegion, tol: Optional[float] = None) -> AxisSection:
    """
    Ω ∩ iℝ

    p > 2：c > c_p 时为 [-Y, Y]，Y = 2b_p√(c - c_p)；c = c_p 时为 {0}；c < c_p 时为空。
    p = 2：c ≥ ρ² 时为 {0}，否则为空。
    p < 2：点谱为空（区域与 p' 相同，但没有 L^p 本征函数）。
    """
    tol = DEFAULT_SETTINGS.boundary_tol if tol is None else tol
    p, c = region.p, region.c
    if p < 2:
        return AxisSection(SECTION_EMPTY, None, f"p={p} < 2 时点谱为空")
    if p == 2:
        if c >= region.rho_norm ** 2:
            return AxisSection(SECTION_POINT, 0.0, "p = 2 时区域退化为实射线")
        return AxisSection(SECTION_EMPTY, None, "p = 2 且 c < ρ²，射线不含 0")
    gap = c - region.apex
    if abs(gap) <= tol:
        return AxisSection(SECTION_POINT, 0.0, f"c = c_p = {region.apex}")
    if gap < 0:
        return AxisSection(SECTION_EMPTY, None, f"c = {c} < c_p = {region.apex}")
    return AxisSection(SECTION_INTERVAL, 2.0 * region.b_p * float(np.sqrt(gap)), f"c > c_p = {region.apex}")


@dataclass(frozen=True)
class SectorBound:
    half_angle: float          # P_p 所在扇形 {|arg w| ≤ α_p}
    analyticity_angle: float   # θ_p ≥ π/2 - α_p


def sector_bound(p: float) -> SectorBound:
    """α_p = arctan(|p-2| / (2√(p-1)))，对 p ↔ p' 对称"""
    if p <= 1:
        raise ValueError(f"p 必须 > 1，收到 p={p}")
    alpha = float(np.arctan(abs(p - 2.0) / (2.0 * np.sqrt(p - 1.0))))
    return SectorBound(half_angle=alpha, analyticity_angle=float(np.pi / 2 - alpha))


def boundary_points(region: ParabolicRegion, count: int = 1000, x_max: Optional[float] = None) -> np.ndarray:
    """
    P_p - c 的边界采样 w = ρ² + (x ± i b_p)² - c

    Returns:
        np.ndarray: 形状 (count, 3) 的数组，列为 x、上支 w、下支 w（复数）
    """
    if count < 2:
        raise ValueError("边界采样点数至少为 2")
    x_max = 4.0 * max(region.rho_norm, 1.0) if x_max is None else x_max
    x = np.linspace(-x_max, x_max, count)
    base = region.rho_norm ** 2 - region.c
    upper = base + (x + 1j * region.b_p) ** 2
    lower = base + (x - 1j * region.b_p) ** 2
    return np.column_stack([x.astype(complex), upper, lower])


def dual_region(region: ParabolicRegion) -> ParabolicRegion:
    """p' = p/(p-1) 对应的区域，与原区域为同一抛物线"""
    return ParabolicRegion(region.rho_norm, dual_exponent(region.p), region.c)


@dataclass(frozen=True)
class OmegaRegion:
    """Ω = int(P_p - c) \\ {z ∈ ℝ : z ≤ ρ² - c}"""
    parent: ParabolicRegion

    def contains(self, z: complex, tol: Optional[float] = None) -> bool:
        z = complex(z)
        if z.imag == 0.0 and z.real <= self.parent.ray_start:
            return False
        return region_contains(self.parent, z, tol) == INTERIOR

    def spectral_parameter(self, z: complex) -> complex:
        """μ = √(z + c - ρ²)，在割线上拒绝"""
        w = complex(z) + self.parent.c - self.parent.rho_norm ** 2
        if on_branch_cut(w):
            raise BranchCutError(f"z={z} 位于被排除射线 z ≤ ρ² - c = {self.parent.ray_start} 上")
        return principal_root(w)


def omega_region(region: ParabolicRegion) -> OmegaRegion:
    if region.p <= 2:
        raise ValueError(f"Ω 只在 p > 2 时非空，收到 p={region.p}")
    return OmegaRegion(parent=region)


def strip_image(region: ParabolicRegion, p: Optional[float] = None) -> LpStrip:
    """Ω 在 z ↦ √(z + c - ρ²) 下的像 S_p = {Re μ > 0, |Im μ| < ρ|2/p - 1|}"""
    p = region.p if p is None else p
    if p <= 2:
        raise ValueError(f"条带 S_p 只在 p > 2 时存在，收到 p={p}")
    return LpStrip(p=float(p), half_width=strip_half_width(region.rho_norm, p))


def branch_jumps(region: ParabolicRegion, path: Sequence[complex]) -> float:
    """
    沿离散路径的 √(z + c - ρ²) 最大跳变与步长之比

    路径停留在 Ω 内时，该值有界（不出现符号翻转）。
    """
    omega = OmegaRegion(region)
    roots = np.array([omega.spectral_parameter(z) for z in path])
    steps = np.abs(np.diff(np.asarray(path, dtype=complex)))
    jumps = np.abs(np.diff(roots))
    return float(np.max(jumps / np.maximum(steps, 1e-300)))


# ---------------------------------------------------------------- 乘积空间

def product_threshold(thresholds: Iterable[float]) -> float:
    """c_p = Σ c_{p,i}"""
    values = list(thresholds)
    if not values:
        raise ValueError("阈值列表不能为空")
    return float(sum(values))


def product_rho(rhos: Sequence[float]) -> float:
    """‖ρ‖ = √(Σ ρ_i²)"""
    if not rhos:
        raise ValueError("因子列表不能为空")
    return float(np.sqrt(np.sum(np.square(rhos))))


def product_region(rhos: Sequence[float], p: float, c: float) -> ParabolicRegion:
    """乘积空间的区域 P_p - c，其顶点等于各因子顶点之和"""
    return ParabolicRegion(rho_norm=product_rho(rhos), p=float(p), c=float(c))


def product_apex(rhos: Sequence[float], p: float) -> float:
    """‖ρ‖ 几何下的顶点，等于各因子顶点之和"""
    return apex_threshold(product_rho(rhos), p)


def upper_omega_contains(region: ParabolicRegion, z: complex, tol: Optional[float] = None) -> bool:
    """Ω' = int(P_p - c) ∩ {Im z > 0}"""
    z = complex(z)
    return z.imag > 0 and region_contains(region, z, tol) == INTERIOR


def higher_rank_parameter(region: ParabolicRegion, z: complex) -> complex:
    """h(z) = ‖ρ‖^{-1}√(z + c - ‖ρ‖²)，将 Ω' 映到 {|Im h| < |1 - 2/p|}"""
    w = complex(z) + region.c - region.rho_norm ** 2
    if on_branch_cut(w):
        raise BranchCutError(f"z={z} 位于割线上")
    return principal_root(w) / region.rho_norm


@dataclass(frozen=True)
class RealSpectrum:
    """实谱模型：若干射线 [a, ∞) 与有限点集"""
    rays: Tuple[float, ...] = ()
    points: Tuple[float, ...] = ()

    def is_real(self) -> bool:
        return all(np.isreal(v) for v in self.rays + self.points)

    def meets_imaginary_axis(self) -> List[float]:
        """与 iℝ 的交（至多 {0}），内部总为空"""
        hits = [0.0] if (0.0 in self.points or any(a <= 0.0 for a in self.rays)) else []
        return hits


def real_spectrum_sum(first: RealSpectrum, second: RealSpectrum) -> RealSpectrum:
    """Minkowski 和：射线+射线、射线+点、点+点"""
    rays = set()
    for a in first.rays:
        for b in second.rays:
            rays.add(a + b)
        for q in second.points:
            rays.add(a + q)
    for q in first.points:
        for b in second.rays:
            rays.add(q + b)
    points = {q1 + q2 for q1 in first.points for q2 in second.points}
    return RealSpectrum(rays=tuple(sorted(rays)), points=tuple(sorted(points)))
