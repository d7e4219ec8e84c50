"""
混沌证据的构造与证书

功能：
1. EigenAtom / EigenExpansion：本征映射 F(z) = φ_{-√(z+c-ρ²)} 的有限组合，按 e^{-tz} 精确演化
2. eigen_map / product_eigen_map：秩一与乘积空间上的本征映射
3. periodic_point：虚轴截面上的周期点
4. density_fit：L² Gram 最小二乘（岭正则化），嵌套字典上报告原始残差并在容差内检查单调
5. small_seed_recovery：小种子 g 演化后逼近目标
6. certify / certify_product：汇总为 ChaosCertificate（JSON 稳定输出）
7. nonchaos_diagnostics：p ≤ 2 时候选本征函数离开 L^p 的增长见证

约定：z 是 Δ - c 的本征值，T(t) 作用为 e^{-tz}，Re z > 0 为衰减。
"""
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from functools import partial
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from config import DEFAULT_SETTINGS, VERSION, NumericsSettings, debug_print, info_print, verbose_print
from heat_semigroup import (SemigroupConfig, evolve_eigen, evolve_tensor_eigen, factor_shifts, orbit_trace,
                            windowed_evolution_error)
from hyperbolic_space import HyperbolicSpace, RadialFunction, RadialGrid, lp_norm, radial_laplacian, volume_density
from spectral_regions import (SECTION_EMPTY, AxisSection, BranchCutError, OmegaRegion,
                              ParabolicRegion, apex_threshold, higher_rank_parameter, imaginary_axis_section,
                              make_region, on_branch_cut, principal_root, product_region, product_threshold,
                              sector_bound, upper_omega_contains)
from spherical_functions import dual_exponent, lp_membership, spherical_table
from spherical_transform import gaussian_bump

SCHEMA_VERSION = "1.0"

VERDICT_CHAOTIC = "chaotic-evidence"
VERDICT_SUBSPACE = "subspace-chaotic-evidence"
VERDICT_NONE = "no-evidence"

GATE_SECTION_EMPTY = "imaginary-axis section empty"
GATE_NO_INTERIOR = "section has empty interior"
GATE_EIGEN = "eigen-map residual"
GATE_PERIODIC = "periodic point"
GATE_DECAY = "decay witness"
GATE_SMALL_SEED = "small-seed recovery"
GATE_DENSITY = "density fit"

# 证书使用的径向网格
CERT_RADIUS = 12.0
CERT_STEP = 1.0 / 128.0
# 本征残差检查
EIGEN_STEP = 1.0 / 64.0
EIGEN_SAMPLES = 20
EIGEN_FACTOR_TOL = 1e-12
# B_0 见证：实本征值 z_j = max(0, ρ²-c) + 0.15j
DECAY_SPACING = 0.15
DECAY_ATOMS = 3
DECAY_TIMES = tuple(5.0 * k for k in range(13))
DECAY_RATIO = 1e-3
# 小种子
SEED_RATIO = 0.01
SEED_FIT_TIMES = (10.0, 20.0)
SEED_RECOVERY_FACTOR = 1.5
# 稠密性拟合字典
DENSITY_BASE = 25
DENSITY_LEVELS = 3
DENSITY_RANGE = (0.1, 6.0)
GROWING_BASE = 12
GROWING_ROW = 0.8
GROWING_MARGIN = 0.05
# 嵌套拟合残差单调性的相对容差；绝对容差取 √ridge_factor
MONOTONE_RTOL = 1e-3
# 乘积空间上 Ω' 的小虚部
PRODUCT_DECAY_IMAG = 0.01
PRODUCT_STEP = 1.0 / 32.0


# ---------------------------------------------------------------- 本征原子与展开

@dataclass(frozen=True)
class EigenAtom:
    """F(z) 的一项：z 为 Δ - c 的本征值，mu = √(z + c - ρ²)"""
    z: complex
    mu: complex
    coefficient: complex = 1.0 + 0j

    @classmethod
    def from_eigenvalue(cls, space: HyperbolicSpace, c: float, z: complex,
                        coefficient: complex = 1.0) -> "EigenAtom":
        w = complex(z) + c - space.rho ** 2
        if on_branch_cut(w):
            raise BranchCutError(f"z={z} 位于被排除射线 z ≤ ρ² - c = {space.rho ** 2 - c} 上")
        return cls(z=complex(z), mu=principal_root(w), coefficient=complex(coefficient))

    def with_coefficient(self, coefficient: complex) -> "EigenAtom":
        return EigenAtom(self.z, self.mu, complex(coefficient))


@dataclass(frozen=True, eq=False)
class EigenExpansion:
    """Σ a_j F(z_j)，演化为 Σ a_j e^{-t z_j} F(z_j)"""
    space: HyperbolicSpace
    p: float
    c: float
    atoms: Tuple[EigenAtom, ...]
    grid: Optional[RadialGrid] = None

    def __post_init__(self):
        if not self.atoms:
            raise ValueError("本征展开至少需要一个原子")
        object.__setattr__(self, "atoms", tuple(self.atoms))

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([atom.coefficient for atom in self.atoms], dtype=complex)

    def values_at(self, points: np.ndarray, settings: Optional[NumericsSettings] = None) -> np.ndarray:
        """在任意递增半径上求值"""
        table = spherical_table(self.space, [atom.mu for atom in self.atoms], points, settings=settings)
        return self.coefficients @ table

    def materialize(self, grid: Optional[RadialGrid] = None,
                    settings: Optional[NumericsSettings] = None) -> RadialFunction:
        grid = self.grid if grid is None else grid
        if grid is None:
            raise ValueError("本征展开没有网格，请显式给出")
        return RadialFunction(grid, self.values_at(grid.points, settings))

    def evolved(self, t: float) -> "EigenExpansion":
        config = SemigroupConfig(self.space, self.p, self.c, t)
        atoms = tuple(atom.with_coefficient(atom.coefficient * evolve_eigen(config, atom.z)) for atom in self.atoms)
        return EigenExpansion(self.space, self.p, self.c, atoms, self.grid)


def eigen_map(space: HyperbolicSpace, c: float, z: complex, grid: RadialGrid,
              settings: Optional[NumericsSettings] = None) -> RadialFunction:
    """
    F(z) = φ_{-μ} = φ_μ，μ = √(z + c - ρ²)（主值）

    Raises:
        BranchCutError: z 在被排除射线上
    """
    atom = EigenAtom.from_eigenvalue(space, c, z)
    return RadialFunction(grid, spherical_table(space, [atom.mu], grid.points, settings=settings)[0])


def eigen_residual(space: HyperbolicSpace, f: RadialFunction, eigenvalue: complex) -> float:
    """‖Δ_h f - eigenvalue·f‖_{L²} / ‖f‖_{L²}，不含末点（单侧差分）"""
    residual = radial_laplacian(space, f) - f.scaled(complex(eigenvalue))
    inner = f.grid.points[-2]
    scale = lp_norm(space, f.restricted(inner), 2.0)
    return float(lp_norm(space, residual.restricted(inner), 2.0) / scale)


def product_eigen_map(spaces: Sequence[HyperbolicSpace], c: float, z: complex, grids: Sequence[RadialGrid],
                      p: Optional[float] = None,
                      settings: Optional[NumericsSettings] = None) -> Tuple[List[RadialFunction], List[complex]]:
    """
    乘积空间上的 F(z) = ⊗ φ_{h(z)ρ_i}，h(z) = ‖ρ‖^{-1}√(z + c - ‖ρ‖²)

    Returns:
        (因子列表, 各因子的 Δ 本征值 (hρ_i)² + ρ_i²)；本征值之和为 z + c
    """
    if len(spaces) != len(grids) or not spaces:
        raise ValueError("因子空间与网格数目必须一致且非空")
    region = product_region([s.rho for s in spaces], p if p is not None else 2.0, c)
    if p is not None and p > 2 and not upper_omega_contains(region, z):
        raise ValueError(f"z={z} 不在 Ω' = int(P_p - c) ∩ {{Im z > 0}} 内")
    h = higher_rank_parameter(region, z)
    factors, eigenvalues = [], []
    for space, grid in zip(spaces, grids):
        lam = h * space.rho
        factors.append(RadialFunction(grid, spherical_table(space, [lam], grid.points, settings=settings)[0]))
        eigenvalues.append(complex(lam ** 2 + space.rho ** 2))
    return factors, eigenvalues


# ---------------------------------------------------------------- 周期点

def periodic_point(space: HyperbolicSpace, config: SemigroupConfig, t_period: float,
                   harmonics: Sequence[Tuple[int, complex]], grid: Optional[RadialGrid] = None,
                   settings: Optional[NumericsSettings] = None) -> EigenExpansion:
    """
    f = Σ a_k F(2πik/T)，T(T)f = f

    每个 z_k 必须落在虚轴截面内部 |2πk/T| < Y。
    """
    settings = settings or DEFAULT_SETTINGS
    if t_period <= 0:
        raise ValueError(f"周期必须为正，收到 T={t_period}")
    if not harmonics:
        raise ValueError("至少需要一个谐波")
    section = imaginary_axis_section(make_region(space.rho, config.p, config.c), settings.boundary_tol)
    if not section.has_interior:
        raise ValueError(f"虚轴截面没有内部: {section.reason}")
    atoms = []
    for k, coefficient in harmonics:
        if int(k) != k or k == 0:
            raise ValueError(f"谐波次数必须是非零整数，收到 k={k}")
        y = 2.0 * np.pi * k / t_period
        if abs(y) >= section.half_length:
            raise ValueError(f"|2πk/T| = {abs(y):.6g} ≥ Y = {section.half_length:.6g}（k={k}, T={t_period:.6g}）")
        atoms.append(EigenAtom.from_eigenvalue(space, config.c, 1j * y, coefficient))
    return EigenExpansion(space, config.p, config.c, tuple(atoms), grid)


def period_defect(expansion: EigenExpansion, t_period: float) -> float:
    """max_k |e^{-T z_k} - 1|"""
    config = SemigroupConfig(expansion.space, expansion.p, expansion.c, t_period)
    return float(max(abs(evolve_eigen(config, atom.z) - 1.0) for atom in expansion.atoms))


# ---------------------------------------------------------------- 稠密性拟合

@dataclass(frozen=True, eq=False)
class DensityFit:
    coefficients: np.ndarray = field(repr=False)
    residual_l2: float
    residual_lp: float
    condition_number: float
    ridge: float
    size: int
    rescued_residual_l2: Optional[float] = None   # 残差回升时，上一解补零后的残差


def _trapezoid_weights(points: np.ndarray) -> np.ndarray:
    dr = np.diff(points)
    weights = np.zeros(len(points))
    weights[:-1] += dr / 2.0
    weights[1:] += dr / 2.0
    return weights


def _nested_axis(lo: float, hi: float, count: int) -> np.ndarray:
    """左端点网格 lo + jΔ，count 加倍时包含原网格（二分细化）"""
    return lo + (hi - lo) * np.arange(count) / count


def decaying_dictionary(space: HyperbolicSpace, c: float, level: int = 0, base: int = DENSITY_BASE,
                        x_range: Tuple[float, float] = DENSITY_RANGE) -> List[EigenAtom]:
    """
    U_0 ⊂ Ω ∩ {Re z > 0} 上的原子：实 μ ∈ [x_lo, x_hi)，共 base·2^level 个

    x_lo 平移到 √max(c - ρ², 0) 之后，保证 Re z = μ² + ρ² - c > 0。
    """
    if level < 0 or base < 1:
        raise ValueError(f"字典参数无效: level={level}, base={base}")
    shift = float(np.sqrt(max(c - space.rho ** 2, 0.0)))
    mus = _nested_axis(x_range[0] + shift, x_range[1] + shift, base * 2 ** level)
    return [EigenAtom.from_eigenvalue(space, c, mu ** 2 + space.rho ** 2 - c) for mu in mus]


def growing_dictionary(space: HyperbolicSpace, c: float, p: float, level: int = 0, base: int = GROWING_BASE,
                       row: float = GROWING_ROW, margin: float = GROWING_MARGIN) -> List[EigenAtom]:
    """
    U_∞ ⊂ Ω ∩ {Re z < 0} 上的原子：μ = x ± i·row·b_p，x ∈ [0.05X, 0.95X)，
    X = √(y² + c - ρ² - margin)，保证 Re z ≤ -margin
    """
    b = make_region(space.rho, p, c).b_p
    y = row * b
    reach = y ** 2 + c - space.rho ** 2 - margin
    if p <= 2 or reach <= 0:
        raise ValueError(f"Ω ∩ {{Re z < 0}} 中没有可用的采样行 (p={p}, c={c})")
    xs = _nested_axis(0.05 * np.sqrt(reach), 0.95 * np.sqrt(reach), base * 2 ** level)
    atoms = []
    for sign in (1.0, -1.0):
        for x in xs:
            mu = x + 1j * sign * y
            atoms.append(EigenAtom.from_eigenvalue(space, c, mu ** 2 + space.rho ** 2 - c))
    return atoms


def density_fit(space: HyperbolicSpace, config: SemigroupConfig, target: RadialFunction,
                dictionary: Sequence[EigenAtom], p: Optional[float] = None, radius: Optional[float] = None,
                settings: Optional[NumericsSettings] = None) -> DensityFit:
    """
    在截断 L²(J dr) 中用 Σ a_j F(z_j) 逼近目标

    Gram 矩阵加岭 ridge_factor·trace 后用 Hermite 求解器求解，报告条件数；
    残差同时给出 L² 与 L^p（相对于目标范数）。
    """
    settings = settings or DEFAULT_SETTINGS
    p = config.p if p is None else p
    if not dictionary:
        raise ValueError("字典不能为空")
    zs = np.array([atom.z for atom in dictionary])
    gaps = np.abs(zs[:, None] - zs[None, :]) + np.eye(len(zs))
    if np.any(gaps <= 1e-12):
        raise ValueError("字典原子必须两两不同")
    target = target.restricted(target.grid.r_max if radius is None else radius)
    r = target.grid.points
    table = spherical_table(space, [atom.mu for atom in dictionary], r, settings=settings)
    weights = _trapezoid_weights(r) * volume_density(space, r)
    projected = table.conj() * weights[None, :]
    gram = projected @ table.T
    rhs = projected @ target.values
    ridge = settings.ridge_factor * float(np.trace(gram).real)
    system = gram + ridge * np.eye(len(dictionary))
    coefficients = linalg.solve(system, rhs, assume_a="her")
    condition = float(np.linalg.cond(system))
    return _fit_report(space, target, table, weights, coefficients, p, ridge, condition)


def _fit_report(space, target, table, weights, coefficients, p, ridge, condition) -> DensityFit:
    l2, lp = _fit_residuals(space, target, table, weights, coefficients, p)
    return DensityFit(coefficients=np.asarray(coefficients), residual_l2=l2, residual_lp=lp,
                      condition_number=condition, ridge=ridge, size=len(coefficients))


def _fit_residuals(space, target, table, weights, coefficients, p) -> Tuple[float, float]:
    residual = target.values - coefficients @ table
    l2 = float(np.sqrt(np.sum(np.abs(residual) ** 2 * weights) / np.sum(np.abs(target.values) ** 2 * weights)))
    lp = lp_norm(space, RadialFunction(target.grid, residual), p) / lp_norm(space, target, p)
    return l2, float(lp)


def padded_residual(space: HyperbolicSpace, target: RadialFunction, previous: DensityFit,
                    previous_atoms: Sequence[EigenAtom], atoms: Sequence[EigenAtom],
                    settings: Optional[NumericsSettings] = None) -> float:
    """上一层的解按最近原子补零嵌入新字典后的 L² 残差；嵌套字典上等于上一层残差"""
    zs = np.array([atom.z for atom in atoms])
    padded = np.zeros(len(atoms), dtype=complex)
    for coefficient, old in zip(previous.coefficients, previous_atoms):
        padded[int(np.argmin(np.abs(zs - old.z)))] = coefficient
    r = target.grid.points
    table = spherical_table(space, [atom.mu for atom in atoms], r, settings=settings)
    weights = _trapezoid_weights(r) * volume_density(space, r)
    return _fit_residuals(space, target, table, weights, padded, 2.0)[0]


def monotone_within(residuals: Sequence[float], rtol: float = MONOTONE_RTOL, atol: float = 0.0) -> bool:
    """残差序列在容差内不增：r_{k+1} ≤ r_k(1 + rtol) + atol"""
    return all(b <= a * (1.0 + rtol) + atol for a, b in zip(residuals, residuals[1:]))


def nested_density_fits(space: HyperbolicSpace, config: SemigroupConfig, target: RadialFunction,
                        dictionaries: Sequence[Sequence[EigenAtom]],
                        settings: Optional[NumericsSettings] = None) -> List[DensityFit]:
    """
    沿嵌套字典依次拟合，报告每层的原始残差

    若某层残差高于上一层（岭求解病态），另外给出上一解补零后的残差 rescued_residual_l2，
    原始残差不被替换。
    """
    settings = settings or DEFAULT_SETTINGS
    fits: List[DensityFit] = []
    previous_atoms: Sequence[EigenAtom] = ()
    for atoms in dictionaries:
        fit = density_fit(space, config, target, atoms, settings=settings)
        if fits and fit.residual_l2 > fits[-1].residual_l2:
            rescued = padded_residual(space, target, fits[-1], previous_atoms, atoms, settings)
            fit = replace(fit, rescued_residual_l2=rescued)
            verbose_print(f"   字典 {len(atoms)} 个原子的残差 {fit.residual_l2:.3e} 高于上一层，"
                          f"补零上一解的残差 {rescued:.3e}")
        fits.append(fit)
        previous_atoms = atoms
        debug_print(f"📊 拟合: {len(atoms)} 个原子, L² 残差 {fit.residual_l2:.3e}, cond {fit.condition_number:.2e}")
    return fits


# ---------------------------------------------------------------- 小种子

@dataclass(frozen=True)
class SmallSeedTrace:
    """(t, ‖g(t)‖/‖f‖, ‖T(t)g(t) - f‖/‖f‖)，以及拟合残差"""
    times: Tuple[float, ...]
    seed_ratios: Tuple[float, ...]
    recovery_errors: Tuple[float, ...]
    fit_residual: float

    def rows(self) -> List[List[float]]:
        return [[t, g, e] for t, g, e in zip(self.times, self.seed_ratios, self.recovery_errors)]


def small_seed_recovery(space: HyperbolicSpace, config: SemigroupConfig, target: RadialFunction,
                        dictionary: Sequence[EigenAtom], t_list: Sequence[float],
                        settings: Optional[NumericsSettings] = None) -> SmallSeedTrace:
    """
    f ≈ Σ a_j F(z_j)（Re z_j < 0），g(t) = Σ a_j e^{t z_j} F(z_j)，
    则 ‖g(t)‖ ~ e^{t·max Re z_j} → 0 而 T(t)g(t) = Σ a_j F(z_j) ≈ f
    """
    settings = settings or DEFAULT_SETTINGS
    if not dictionary:
        raise ValueError("字典不能为空")
    omega = OmegaRegion(make_region(space.rho, config.p, config.c))
    for atom in dictionary:
        if atom.z.real >= 0:
            raise ValueError(f"小种子字典要求 Re z < 0，收到 z={atom.z}")
        if config.p > 2 and not omega.contains(atom.z, settings.boundary_tol):
            raise ValueError(f"原子 z={atom.z} 不在 Ω 内")
    fit = density_fit(space, config, target, dictionary, settings=settings)
    grid = target.grid
    expansion = EigenExpansion(space, config.p, config.c,
                               tuple(atom.with_coefficient(a) for atom, a in zip(dictionary, fit.coefficients)),
                               grid)
    scale = lp_norm(space, target, config.p)
    ratios, errors = [], []
    for t in t_list:
        seed_atoms = tuple(atom.with_coefficient(atom.coefficient * np.exp(t * atom.z)) for atom in expansion.atoms)
        seed = EigenExpansion(space, config.p, config.c, seed_atoms, grid)
        recovered = seed.evolved(t).materialize()
        ratios.append(lp_norm(space, seed.materialize(), config.p) / scale)
        errors.append(lp_norm(space, recovered - target, config.p) / scale)
    return SmallSeedTrace(tuple(float(t) for t in t_list), tuple(ratios), tuple(errors), fit.residual_lp)


def small_seed_eigenvalue(rho_norm: float, b: float, c: float) -> complex:
    """
    Ω ∩ {Re z < 0} 中的一个原子：y₀² = (b² + max(ρ² - c, 0))/2，s = y₀² + c - ρ²，
    μ₀ = √(s/2) + i y₀，z₀ = -s/2 + 2i x₀ y₀
    """
    y0 = float(np.sqrt((b ** 2 + max(rho_norm ** 2 - c, 0.0)) / 2.0))
    s = y0 ** 2 + c - rho_norm ** 2
    if s <= 0:
        raise ValueError(f"c={c} 不超过阈值，Ω ∩ {{Re z < 0}} 为空")
    mu = np.sqrt(s / 2.0) + 1j * y0
    return complex(mu ** 2 + rho_norm ** 2 - c)


# ---------------------------------------------------------------- 证书

@dataclass
class ChaosCertificate:
    """混沌证据报告；字段顺序即 JSON 输出顺序"""
    schema_version: str
    library_version: str
    kind: str
    config: Dict[str, Any]
    tolerances: Dict[str, Any]
    region: Dict[str, Any]
    verdict: str
    failed_gate: Optional[str] = None
    reasons: List[str] = field(default_factory=list)
    eigen_residual: Optional[float] = None
    periodic: List[Dict[str, Any]] = field(default_factory=list)
    periodic_error: Optional[float] = None
    decay_trace: List[List[float]] = field(default_factory=list)
    smallseed_trace: Dict[str, Any] = field(default_factory=dict)
    density_residuals: List[Dict[str, Any]] = field(default_factory=list)


def _jsonable(value):
    if isinstance(value, dict):
        return {key: _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(item) for item in value.tolist()]
    if isinstance(value, (complex, np.complexfloating)):
        return [_jsonable(value.real), _jsonable(value.imag)]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def certificate_to_json(certificate: ChaosCertificate) -> str:
    """稳定字段顺序的 JSON；复数写成 [re, im]，非有限数写成 null"""
    return json.dumps(_jsonable(asdict(certificate)), indent=2, ensure_ascii=False) + "\n"


def certificate_from_json(text: str) -> ChaosCertificate:
    data = json.loads(text)
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"不支持的证书版本: {data.get('schema_version')}（当前 {SCHEMA_VERSION}）")
    return ChaosCertificate(**{f.name: data[f.name] for f in fields(ChaosCertificate) if f.name in data})


def region_summary(region: ParabolicRegion, section: AxisSection) -> Dict[str, Any]:
    sector = sector_bound(region.p)
    return {
        "rho": region.rho_norm,
        "p": region.p,
        "c": region.c,
        "c_p": region.apex,
        "b_p": region.b_p,
        "section": section.kind,
        "Y": section.half_length,
        "section_reason": section.reason,
        "sector_half_angle": sector.half_angle,
        "analyticity_angle": sector.analyticity_angle,
    }


def _section_gate(region: ParabolicRegion, section: AxisSection) -> Optional[str]:
    if region.p <= 2:
        return GATE_NO_INTERIOR
    if section.kind == SECTION_EMPTY:
        return GATE_SECTION_EMPTY
    if not section.has_interior:
        return GATE_NO_INTERIOR
    return None


def default_targets(grid: RadialGrid) -> List[Tuple[str, RadialFunction]]:
    """目标族：宽度 1 与 1.5 的鼓包，以及中心 1 的偶对称平移鼓包"""
    return [
        ("gaussian w=1", gaussian_bump(grid, 1.0)),
        ("gaussian w=1.5", gaussian_bump(grid, 1.5)),
        ("shifted centre=1 w=1", gaussian_bump(grid, 1.0, centre=1.0)),
    ]


def _sample_strip(rng: np.random.Generator, count: int, half_width: float,
                  upper_only: bool = False) -> np.ndarray:
    x = rng.uniform(0.05, 1.5, count)
    lo = 0.05 * half_width if upper_only else -0.95 * half_width
    y = rng.uniform(lo, 0.95 * half_width, count)
    return x + 1j * y


def eigen_map_residuals(space: HyperbolicSpace, config: SemigroupConfig, seed: int,
                        count: int = EIGEN_SAMPLES, step: float = EIGEN_STEP,
                        settings: Optional[NumericsSettings] = None) -> List[float]:
    """对 Ω 中 count 个种子化随机 z 计算 F(z) 的本征残差"""
    region = make_region(space.rho, config.p, config.c)
    rng = np.random.default_rng(seed)
    grid = RadialGrid.uniform(CERT_RADIUS, step)
    residuals = []
    for mu in _sample_strip(rng, count, region.b_p):
        z = complex(mu ** 2 + space.rho ** 2 - config.c)
        residuals.append(eigen_residual(space, eigen_map(space, config.c, z, grid, settings), z + config.c))
    return residuals


def _periodic_report(space: HyperbolicSpace, config: SemigroupConfig, half_length: float,
                     settings: NumericsSettings) -> List[Dict[str, Any]]:
    method = "heat-kernel" if space.dimension == 3 else "collocation"
    plans = [(4.0 * np.pi / half_length, [(1, 1.0)]),
             (8.0 * np.pi / half_length, [(1, 1.0), (2, 0.5)])]
    entries = []
    for period, harmonics in plans:
        expansion = periodic_point(space, config, period, harmonics, settings=settings)
        entries.append({
            "period": period,
            "harmonics": [k for k, _ in harmonics],
            "z": [atom.z for atom in expansion.atoms],
            "eigen_factor_error": period_defect(expansion, period),
            "windowed_error": windowed_evolution_error(config, expansion, period, step=1.0 / 64.0,
                                                       settings=settings),
            "method": method,
        })
    return entries


def decay_witness(space: HyperbolicSpace, config: SemigroupConfig, grid: RadialGrid,
                  times: Sequence[float] = DECAY_TIMES) -> List[List[float]]:
    """B_0 见证：实本征值原子之和的轨道范数"""
    start = max(0.0, space.rho ** 2 - config.c)
    atoms = tuple(EigenAtom.from_eigenvalue(space, config.c, start + DECAY_SPACING * j)
                  for j in range(1, DECAY_ATOMS + 1))
    expansion = EigenExpansion(space, config.p, config.c, atoms, grid)
    return [[t, norm] for t, norm in orbit_trace(config, expansion, times)]


def _decay_passes(trace: Sequence[Sequence[float]]) -> bool:
    norms = [norm for _, norm in trace]
    monotone = all(b < a for a, b in zip(norms, norms[1:]))
    return monotone and norms[-1] <= DECAY_RATIO * norms[0]


def _small_seed_report(space: HyperbolicSpace, config: SemigroupConfig, grid: RadialGrid,
                       target: RadialFunction, settings: NumericsSettings) -> Dict[str, Any]:
    region = make_region(space.rho, config.p, config.c)
    z0 = small_seed_eigenvalue(space.rho, region.b_p, config.c)
    atom = EigenAtom.from_eigenvalue(space, config.c, z0)
    final = math.ceil(math.log(1.0 / SEED_RATIO) / -z0.real)
    exact = small_seed_recovery(space, config, eigen_map(space, config.c, z0, grid, settings), [atom],
                                [final / 2.0, float(final)], settings)
    fitted = small_seed_recovery(space, config, target, growing_dictionary(space, config.c, config.p),
                                 SEED_FIT_TIMES, settings)
    return {
        "z0": z0,
        "exact": exact.rows(),
        "exact_fit_residual": exact.fit_residual,
        "fitted": fitted.rows(),
        "fitted_fit_residual": fitted.fit_residual,
        # 拟合系数可能很大且相互抵消，‖g(t)‖ 的单调性只报告不作闸门
        "fitted_seed_decreasing": all(b[1] < a[1] for a, b in zip(fitted.rows(), fitted.rows()[1:])),
    }


def _seed_passes(report: Dict[str, Any]) -> bool:
    exact_rows = report["exact"]
    exact_ok = (all(b[1] < a[1] for a, b in zip(exact_rows, exact_rows[1:]))
                and exact_rows[-1][1] <= SEED_RATIO * (1 + 1e-6)
                and all(row[2] <= SEED_RECOVERY_FACTOR * report["exact_fit_residual"] + 1e-9 for row in exact_rows))
    fitted_ok = all(row[2] <= SEED_RECOVERY_FACTOR * report["fitted_fit_residual"] + 1e-9
                    for row in report["fitted"])
    return exact_ok and fitted_ok


def _density_report(space: HyperbolicSpace, config: SemigroupConfig, name: str, target: RadialFunction,
                    settings: NumericsSettings) -> Dict[str, Any]:
    dictionaries = [decaying_dictionary(space, config.c, level) for level in range(DENSITY_LEVELS)]
    fits = nested_density_fits(space, config, target, dictionaries, settings)
    return {
        "target": name,
        "sizes": [fit.size for fit in fits],
        "residual_l2": [fit.residual_l2 for fit in fits],
        "residual_lp": [fit.residual_lp for fit in fits],
        "condition_number": [fit.condition_number for fit in fits],
        "ridge": [fit.ridge for fit in fits],
        "rescued_residual_l2": [fit.rescued_residual_l2 for fit in fits],
        "monotone": monotone_within([fit.residual_l2 for fit in fits], atol=float(np.sqrt(settings.ridge_factor))),
    }


def _run_jobs(jobs, max_workers: int) -> List[Any]:
    """并发执行子实验，结果按提交顺序收集"""
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = [pool.submit(job) for job in jobs]
        return [future.result() for future in futures]


def certify(space: HyperbolicSpace, p: float, c: float,
            targets: Optional[Sequence[Tuple[str, RadialFunction]]] = None, seed: int = 0,
            settings: Optional[NumericsSettings] = None) -> ChaosCertificate:
    """
    组装秩一混沌证据

    闸门依次为：截面、本征残差、周期点、B_0 见证、小种子、稠密性拟合；
    第一个失败的闸门写入 failed_gate，判定为 no-evidence。闸门失败不抛异常。
    """
    settings = settings or DEFAULT_SETTINGS
    config = SemigroupConfig(space, float(p), float(c))
    region = make_region(space.rho, p, c)
    section = imaginary_axis_section(region, settings.boundary_tol)
    certificate = ChaosCertificate(
        schema_version=SCHEMA_VERSION,
        library_version=VERSION,
        kind="rank-one",
        config={"dimension": space.dimension, "p": float(p), "c": float(c), "seed": int(seed),
                "grid_radius": CERT_RADIUS, "grid_step": CERT_STEP},
        tolerances=settings.tolerances(),
        region=region_summary(region, section),
        verdict=VERDICT_NONE,
    )
    info_print(f"🚀 开始证书: H^{space.dimension}, p={p}, c={c}, seed={seed}")
    gate = _section_gate(region, section)
    if gate is not None:
        certificate.failed_gate = gate
        certificate.reasons = [section.reason]
        info_print(f"⚠️  {VERDICT_NONE}: {gate}")
        return certificate

    grid = RadialGrid.uniform(CERT_RADIUS, CERT_STEP)
    targets = list(targets) if targets is not None else default_targets(grid)
    jobs = [
        partial(eigen_map_residuals, space, config, seed, settings=settings),
        partial(_periodic_report, space, config, section.half_length, settings),
        partial(decay_witness, space, config, grid),
        partial(_small_seed_report, space, config, grid, targets[0][1], settings),
    ] + [partial(_density_report, space, config, name, target, settings) for name, target in targets]
    residuals, periodic, decay, seed_report, *density = _run_jobs(jobs, settings.max_workers)

    certificate.eigen_residual = max(residuals)
    certificate.periodic = periodic
    certificate.periodic_error = max(max(e["eigen_factor_error"], e["windowed_error"]) for e in periodic)
    certificate.decay_trace = decay
    certificate.smallseed_trace = seed_report
    certificate.density_residuals = density

    checks = [
        (GATE_EIGEN, certificate.eigen_residual <= 10.0 * EIGEN_STEP ** 2,
         f"本征残差 {certificate.eigen_residual:.3e}（阈值 {10.0 * EIGEN_STEP ** 2:.3e}）"),
        (GATE_PERIODIC, all(e["eigen_factor_error"] <= EIGEN_FACTOR_TOL
                            and e["windowed_error"] <= settings.periodic_tol for e in periodic),
         f"周期误差 {certificate.periodic_error:.3e}"),
        (GATE_DECAY, _decay_passes(decay), f"B_0 轨道末/初 = {decay[-1][1] / decay[0][1]:.3e}"),
        (GATE_SMALL_SEED, _seed_passes(seed_report), "小种子比值与恢复误差"),
        (GATE_DENSITY, all(d["monotone"] and d["residual_l2"][-1] <= settings.residual_threshold for d in density),
         "拟合残差 " + ", ".join(f"{d['target']}: {d['residual_l2'][-1]:.3e}"
                                + ("" if d["monotone"] else "（不单调）") for d in density)),
    ]
    return _conclude(certificate, checks, VERDICT_CHAOTIC)


def _conclude(certificate: ChaosCertificate, checks, success: str) -> ChaosCertificate:
    certificate.reasons = [message for _, _, message in checks]
    for gate, passed, message in checks:
        if not passed:
            certificate.failed_gate = gate
            certificate.verdict = VERDICT_NONE
            info_print(f"⚠️  {VERDICT_NONE}: {gate}（{message}）")
            return certificate
    certificate.verdict = success
    info_print(f"✅ {success}")
    return certificate


# ---------------------------------------------------------------- 乘积空间

def _tensor_lp_norm(spaces: Sequence[HyperbolicSpace], terms: Sequence[Tuple[complex, np.ndarray, np.ndarray]],
                    grids: Sequence[RadialGrid], p: float) -> float:
    """两因子乘积上 ‖Σ a F1 ⊗ F2‖_{L^p}"""
    values = sum(a * np.outer(f1, f2) for a, f1, f2 in terms)
    w1 = _trapezoid_weights(grids[0].points) * volume_density(spaces[0], grids[0].points)
    w2 = _trapezoid_weights(grids[1].points) * volume_density(spaces[1], grids[1].points)
    return float((w1 @ np.abs(values) ** p @ w2) ** (1.0 / p))


def _tensor_configs(spaces: Sequence[HyperbolicSpace], p: float, c: float, eigenvalues: Sequence[complex],
                    t: float = 0.0) -> List[SemigroupConfig]:
    return [SemigroupConfig(space, p, shift, t) for space, shift in zip(spaces, factor_shifts(eigenvalues, c))]


def _tensor_factor(spaces: Sequence[HyperbolicSpace], p: float, c: float, eigenvalues: Sequence[complex],
                   t: float) -> complex:
    """⊗ T_i(t) 在 F(z) 上的作用因子，按因子的本征值逐个演化"""
    return evolve_tensor_eigen(_tensor_configs(spaces, p, c, eigenvalues, t), eigenvalues)


def _product_periodic(spaces: Sequence[HyperbolicSpace], p: float, c: float, z: complex,
                      grids: Sequence[RadialGrid], settings: NumericsSettings) -> Dict[str, Any]:
    """
    乘积周期点 F(z)，z = iy，周期 2π/y

    因子误差取张量作用因子与 1 之差；窗口误差把各因子 T_i(T)φ_i 与 e^{-T z_i}φ_i 的相对误差
    合成为 Π(1 + e_i) - 1。
    """
    period = 2.0 * np.pi / z.imag
    _, eigenvalues = product_eigen_map(spaces, c, z, grids, p, settings)
    configs = _tensor_configs(spaces, p, c, eigenvalues, period)
    defect = abs(evolve_tensor_eigen(configs, eigenvalues) - 1.0)
    combined = 1.0
    for space, cfg, e in zip(spaces, configs, eigenvalues):
        atom = EigenAtom.from_eigenvalue(space, cfg.c, complex(e) - cfg.c)
        expansion = EigenExpansion(space, p, cfg.c, (atom,))
        combined *= 1.0 + windowed_evolution_error(cfg, expansion, period, step=1.0 / 64.0, settings=settings)
    methods = ["heat-kernel" if space.dimension == 3 else "collocation" for space in spaces]
    return {"period": period, "harmonics": [1], "z": [z], "eigen_factor_error": defect,
            "windowed_error": combined - 1.0, "method": "tensor " + " x ".join(methods)}


def certify_product(spaces: Sequence[HyperbolicSpace], p: float, c: float, seed: int = 0,
                    settings: Optional[NumericsSettings] = None) -> ChaosCertificate:
    """
    两个秩一因子乘积上的子空间混沌证据（本征层面）

    Ω' = int(P_p - c) ∩ {Im z > 0}，F(z) = φ_{h(z)ρ_1} ⊗ φ_{h(z)ρ_2}。
    不做稠密性拟合：结论只针对 F(Ω') 张成的闭子空间。
    """
    settings = settings or DEFAULT_SETTINGS
    if len(spaces) != 2:
        raise ValueError(f"乘积证书只支持两个因子，收到 {len(spaces)} 个")
    rhos = [space.rho for space in spaces]
    region = product_region(rhos, p, c)
    threshold = product_threshold(apex_threshold(rho, p) for rho in rhos)
    section = imaginary_axis_section(region, settings.boundary_tol)
    summary = region_summary(region, section)
    summary["factor_threshold_sum"] = threshold
    certificate = ChaosCertificate(
        schema_version=SCHEMA_VERSION,
        library_version=VERSION,
        kind="product",
        config={"dimensions": [space.dimension for space in spaces], "p": float(p), "c": float(c),
                "seed": int(seed), "grid_radius": CERT_RADIUS, "grid_step": PRODUCT_STEP},
        tolerances=settings.tolerances(),
        region=summary,
        verdict=VERDICT_NONE,
    )
    info_print(f"🚀 开始乘积证书: {' × '.join(f'H^{s.dimension}' for s in spaces)}, p={p}, c={c}")
    gate = _section_gate(region, section)
    if gate is not None:
        certificate.failed_gate = gate
        certificate.reasons = [section.reason]
        info_print(f"⚠️  {VERDICT_NONE}: {gate}")
        return certificate

    width = 1.0 - 2.0 / p
    norm = region.rho_norm
    grids = [RadialGrid.uniform(CERT_RADIUS, PRODUCT_STEP) for _ in spaces]
    eigen_grids = [RadialGrid.uniform(CERT_RADIUS, EIGEN_STEP) for _ in spaces]

    # 本征残差：Ω' 中的种子化随机点
    rng = np.random.default_rng(seed)
    residuals = []
    for h in _sample_strip(rng, EIGEN_SAMPLES, width, upper_only=True):
        z = complex((h * norm) ** 2 + norm ** 2 - c)
        factors, eigenvalues = product_eigen_map(spaces, c, z, eigen_grids, p, settings)
        residuals.extend(eigen_residual(s, f, e) for s, f, e in zip(spaces, factors, eigenvalues))
    certificate.eigen_residual = max(residuals)

    # 周期点：张量本征因子，并逐因子做窗口演化
    periodic = _product_periodic(spaces, p, c, 0.5j * section.half_length, eigen_grids, settings)
    certificate.periodic = [periodic]
    certificate.periodic_error = max(periodic["eigen_factor_error"], periodic["windowed_error"])

    # B_0 见证：Ω' 中 Re z > 0 的原子
    start = max(0.0, norm ** 2 - c)
    decay_terms = []
    for j in range(1, DECAY_ATOMS + 1):
        z = start + DECAY_SPACING * j + 1j * PRODUCT_DECAY_IMAG
        factors, eigenvalues = product_eigen_map(spaces, c, z, grids, p, settings)
        decay_terms.append((eigenvalues, factors[0].values, factors[1].values))
    certificate.decay_trace = [
        [t, _tensor_lp_norm(spaces, [(_tensor_factor(spaces, p, c, e, t), f1, f2) for e, f1, f2 in decay_terms],
                            grids, p)]
        for t in DECAY_TIMES
    ]

    # 小种子（单原子）：g(t) = e^{t z0}F(z0)，恢复经由各因子的半群
    z0 = small_seed_eigenvalue(norm, norm * width, c)
    factors, eigenvalues = product_eigen_map(spaces, c, z0, grids, p, settings)
    base_norm = _tensor_lp_norm(spaces, [(1.0, factors[0].values, factors[1].values)], grids, p)
    final = math.ceil(math.log(1.0 / SEED_RATIO) / -z0.real)
    rows = []
    for t in (final / 2.0, float(final)):
        seed = complex(np.exp(t * z0))
        seed_norm = _tensor_lp_norm(spaces, [(seed, factors[0].values, factors[1].values)], grids, p)
        recovered = seed * _tensor_factor(spaces, p, c, eigenvalues, t)
        rows.append([t, seed_norm / base_norm, abs(recovered - 1.0)])
    certificate.smallseed_trace = {"z0": z0, "exact": rows, "exact_fit_residual": 0.0, "fitted": [],
                                   "fitted_fit_residual": None}

    checks = [
        (GATE_EIGEN, certificate.eigen_residual <= 10.0 * EIGEN_STEP ** 2,
         f"本征残差 {certificate.eigen_residual:.3e}"),
        (GATE_PERIODIC, (periodic["eigen_factor_error"] <= EIGEN_FACTOR_TOL
                         and periodic["windowed_error"] <= settings.periodic_tol),
         f"周期因子误差 {periodic['eigen_factor_error']:.3e}，窗口误差 {periodic['windowed_error']:.3e}"),
        (GATE_DECAY, _decay_passes(certificate.decay_trace), "B_0 张量轨道"),
        (GATE_SMALL_SEED, rows[-1][1] <= SEED_RATIO * (1 + 1e-6) and all(row[2] <= 1e-9 for row in rows),
         f"小种子比值 {rows[-1][1]:.3e}，恢复误差 {max(row[2] for row in rows):.3e}"),
    ]
    certificate = _conclude(certificate, checks, VERDICT_SUBSPACE)
    certificate.reasons.append("乘积空间只给出 F(Ω') 张成子空间上的证据，未做稠密性拟合")
    return certificate


# ---------------------------------------------------------------- 非混沌诊断

@dataclass(frozen=True)
class NonChaosEntry:
    lam: complex
    radii: Tuple[float, ...]
    norms: Tuple[float, ...]
    ratios: Tuple[float, ...]
    diverging: bool
    dual_membership: Optional[str]


@dataclass(frozen=True)
class NonChaosReport:
    p: float
    section: Dict[str, Any]
    entries: Tuple[NonChaosEntry, ...]


def nonchaos_diagnostics(space: HyperbolicSpace, p: float, lambdas: Sequence[complex], c: float = 0.0,
                         radii: Sequence[float] = (10.0, 20.0, 40.0, 80.0), step: float = 1.0 / 64.0,
                         growth_margin: float = 0.3,
                         settings: Optional[NumericsSettings] = None) -> NonChaosReport:
    """
    1 < p ≤ 2 时 φ_λ 的截断范数随 R 加倍的增长

    比值持续超过 1 + growth_margin 即视为发散（φ_λ ∉ L^p）；
    p < 2 时另给出 φ_λ 对共轭指数 p' > 2 的条带成员关系。
    """
    if not 1 < p <= 2:
        raise ValueError(f"非混沌诊断要求 1 < p ≤ 2，收到 p={p}")
    radii = tuple(float(r) for r in radii)
    if len(radii) < 2 or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError(f"截断半径必须严格递增且至少两个: {radii}")
    grid = RadialGrid.uniform(radii[-1], step)
    table = spherical_table(space, lambdas, grid.points, settings=settings)
    entries = []
    for lam, values in zip(np.atleast_1d(np.asarray(lambdas, dtype=complex)), table):
        phi = RadialFunction(grid, values)
        norms = tuple(lp_norm(space, phi, p, R) for R in radii)
        ratios = tuple(b / a for a, b in zip(norms, norms[1:]))
        dual = lp_membership(space, lam, dual_exponent(p)) if p < 2 else None
        entries.append(NonChaosEntry(lam=complex(lam), radii=radii, norms=norms, ratios=ratios,
                                     diverging=all(ratio >= 1.0 + growth_margin for ratio in ratios),
                                     dual_membership=dual))
    section = imaginary_axis_section(make_region(space.rho, p, c))
    return NonChaosReport(p=float(p), section={"kind": section.kind, "Y": section.half_length,
                                               "reason": section.reason}, entries=tuple(entries))
