"""
球函数 φ_λ 与 Harish-Chandra c 函数

功能：
1. spherical_fn / spherical_table：径向本征 ODE 的正则解，φ_λ(0)=1
   - n=3 使用闭式 sin(λr)/(λ sinh r)
   - 其余维数用 scipy.integrate.solve_ivp 积分 u = e^{ρr}φ_λ，r≈0 处用级数起步
2. c_function / plancherel_density：Gamma 商公式，|c(λ)|^{-2} 为 Plancherel 密度
3. fit_c_function：在 [25, 35] 上做两项渐近拟合，用于核对 c 函数
4. lp_membership：按 |Im λ| 与 ρ(1-2/p) 的关系判断 φ_λ 是否属于 L^p
"""
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special

from config import DEFAULT_SETTINGS, NumericsSettings, debug_print
from hyperbolic_space import HyperbolicSpace, RadialFunction, RadialGrid

INSIDE = "inside"
BOUNDARY = "boundary"
OUTSIDE = "outside"

# 级数起步半径满足 |λ²+ρ²|·r0² ≤ SERIES_LIMIT
SERIES_LIMIT = 2e-5
SERIES_MAX_RADIUS = 1e-2


@dataclass(frozen=True)
class LpStrip:
    """谱参数条带 {|Im λ| ≤ ρ(1-2/p)}"""
    p: float
    half_width: float

    def contains(self, lam: complex, tol: float = 0.0) -> bool:
        return abs(complex(lam).imag) < self.half_width - tol


def dual_exponent(p: float) -> float:
    """共轭指数 p' = p/(p-1)"""
    if p <= 1:
        raise ValueError(f"p 必须 > 1，收到 p={p}")
    return p / (p - 1.0)


def lp_strip(space: HyperbolicSpace, p: float) -> LpStrip:
    if p <= 2:
        raise ValueError(f"L^p 条带只在 p > 2 时存在，收到 p={p}")
    return LpStrip(p=float(p), half_width=space.rho * (1.0 - 2.0 / p))


def _series(space: HyperbolicSpace, mu: np.ndarray, r: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """φ 与 φ' 在 r≈0 处的四阶级数，mu = λ²+ρ²"""
    n = space.dimension
    a = -mu / (2.0 * n)
    b = -a * (mu + 2.0 * (n - 1) / 3.0) / (4.0 * (n + 2))
    value = 1.0 + a * r ** 2 + b * r ** 4
    slope = 2.0 * a * r + 4.0 * b * r ** 3
    return value, slope


def _closed_form_h3(lambdas: np.ndarray, points: np.ndarray) -> np.ndarray:
    lam = lambdas[:, None]
    r = points[None, :]
    table = np.ones((len(lambdas), len(points)), dtype=complex)
    positive = points > 0
    if np.any(positive):
        rp = r[:, positive]
        # sin(λr)/λ = r·sinc(λr/π)，λ→0 时自然取到极限 r
        table[:, positive] = np.sinc(lam * rp / np.pi) * (rp / np.sinh(rp))
    return table


def _ode_table(space: HyperbolicSpace, lambdas: np.ndarray, points: np.ndarray,
               settings: NumericsSettings) -> np.ndarray:
    """
    对一组 λ 同时积分 u = e^{ρr}φ_λ：
        u'' + 2ρ(coth r - 1)u' + (λ² - 2ρ²(coth r - 1))u = 0
    coth r - 1 = 2/expm1(2r)，避免大 r 时的相消。
    """
    rho = space.rho
    lam2 = lambdas.astype(complex) ** 2
    mu = lam2 + rho ** 2
    m = len(lambdas)
    r0 = min(SERIES_MAX_RADIUS, float(np.sqrt(SERIES_LIMIT / max(np.max(np.abs(mu)), 1e-300))))

    table = np.empty((m, len(points)), dtype=complex)
    near = points <= r0
    if np.any(near):
        value, _ = _series(space, mu[:, None], points[None, near])
        table[:, near] = value
    far = ~near
    if not np.any(far):
        return table

    phi0, dphi0 = _series(space, mu, np.array(r0))
    scale0 = np.exp(rho * r0)
    y0 = np.concatenate([scale0 * phi0, scale0 * (dphi0 + rho * phi0)]).astype(complex)

    def rhs(r, y):
        u, du = y[:m], y[m:]
        k = 2.0 / np.expm1(2.0 * r)
        return np.concatenate([du, -2.0 * rho * k * du - (lam2 - 2.0 * rho ** 2 * k) * u])

    t_eval = points[far]
    solution = integrate.solve_ivp(rhs, (r0, float(t_eval[-1])), y0, method="DOP853", t_eval=t_eval,
                                   rtol=settings.ode_rtol, atol=settings.ode_atol)
    if not solution.success:
        raise RuntimeError(f"球函数 ODE 积分失败: {solution.message}")
    table[:, far] = solution.y[:m] * np.exp(-rho * t_eval)[None, :]
    return table


def spherical_table(space: HyperbolicSpace, lambdas: Iterable[complex], points: np.ndarray,
                    method: str = "auto", settings: Optional[NumericsSettings] = None) -> np.ndarray:
    """
    批量计算 φ_λ(r)

    Args:
        space: H^n
        lambdas: 谱参数序列（复数）
        points: 递增的非负半径
        method: "auto"（n=3 用闭式）、"closed" 或 "ode"

    Returns:
        np.ndarray: 形状 (len(lambdas), len(points)) 的复数表
    """
    settings = settings or DEFAULT_SETTINGS
    lambdas = np.atleast_1d(np.asarray(lambdas, dtype=complex))
    points = np.asarray(points, dtype=float)
    if not np.all(np.isfinite(lambdas)):
        raise ValueError("谱参数 λ 必须有限")
    if method not in ("auto", "closed", "ode"):
        raise ValueError(f"未知的求值方式: {method}")
    if method == "closed" and space.dimension != 3:
        raise ValueError("闭式仅适用于 n = 3")
    if method == "closed" or (method == "auto" and space.dimension == 3):
        return _closed_form_h3(lambdas, points)
    debug_print(f"🔧 ODE 求球函数: n={space.dimension}, {len(lambdas)} 个 λ, r ≤ {points[-1]:.2f}")
    return _ode_table(space, lambdas, points, settings)


def spherical_fn(space: HyperbolicSpace, lam: complex, grid: RadialGrid, method: str = "auto",
                 settings: Optional[NumericsSettings] = None) -> RadialFunction:
    """φ_λ 在网格上的采样，φ_λ = φ_{-λ}"""
    values = spherical_table(space, [lam], grid.points, method=method, settings=settings)[0]
    return RadialFunction(grid, values)


def c_function(space: HyperbolicSpace, lam: complex) -> complex:
    """
    Harish-Chandra c 函数，按渐近式 φ_λ(r) ≈ c(λ)e^{(iλ-ρ)r} + c(-λ)e^{(-iλ-ρ)r} 归一化

    c(λ) = 2^{2ρ-1} Γ(n/2) Γ(iλ) / (√π Γ(iλ+ρ))；H^3 上即 1/(iλ)。
    """
    lam = complex(lam)
    if lam == 0:
        raise ValueError("λ = 0 是 c 函数的极点")
    if space.dimension == 3:
        return 1.0 / (1j * lam)
    rho = space.rho
    log_value = ((2 * rho - 1) * np.log(2.0) + special.gammaln(space.dimension / 2.0)
                 + special.loggamma(1j * lam) - 0.5 * np.log(np.pi) - special.loggamma(1j * lam + rho))
    return complex(np.exp(log_value))


def plancherel_density(space: HyperbolicSpace, lam) -> np.ndarray:
    """|c(λ)|^{-2}，λ > 0；接受标量或数组"""
    arr = np.asarray(lam, dtype=float)
    if np.any(arr <= 0):
        raise ValueError(f"Plancherel 密度要求 λ > 0，收到 {lam}")
    if space.dimension == 3:
        density = arr ** 2
    else:
        rho = space.rho
        log_c = ((2 * rho - 1) * np.log(2.0) + special.gammaln(space.dimension / 2.0)
                 + special.loggamma(1j * arr) - 0.5 * np.log(np.pi) - special.loggamma(1j * arr + rho))
        density = np.exp(-2.0 * np.real(log_c))
    return float(density) if np.ndim(lam) == 0 else density


def fit_c_function(space: HyperbolicSpace, lam: float, window: Sequence[float] = (25.0, 35.0),
                   step: float = 1.0 / 64.0, settings: Optional[NumericsSettings] = None) -> complex:
    """
    用 ODE 解在 window 上的采样拟合 e^{ρr}φ_λ = A e^{iλr} + B e^{-iλr}，返回 A ≈ c(λ)
    """
    grid = RadialGrid.uniform(window[1], step)
    phi = spherical_fn(space, lam, grid, method="ode", settings=settings)
    r = grid.points
    mask = (r >= window[0]) & (r <= window[1])
    u = phi.values[mask] * np.exp(space.rho * r[mask])
    design = np.column_stack([np.exp(1j * lam * r[mask]), np.exp(-1j * lam * r[mask])])
    coeffs, *_ = np.linalg.lstsq(design, u, rcond=None)
    return complex(coeffs[0])


def lp_membership(space: HyperbolicSpace, lam: complex, p: float,
                  tol: Optional[float] = None) -> str:
    """
    判断 φ_λ ∈ L^p（p > 2）

    Returns:
        str: "inside" / "boundary" / "outside"
    """
    if p <= 2:
        raise ValueError(f"L^p 成员判定要求 p > 2，收到 p={p}；p ≤ 2 请使用非混沌诊断")
    tol = DEFAULT_SETTINGS.boundary_tol if tol is None else tol
    half_width = lp_strip(space, p).half_width
    gap = abs(complex(lam).imag) - half_width
    if abs(gap) <= tol:
        return BOUNDARY
    return INSIDE if gap < 0 else OUTSIDE
