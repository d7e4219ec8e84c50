#!/usr/bin/env python3
"""
径向网格、体积密度、离散拉普拉斯与截断范数测试
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# 添加项目根目录到Python路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from hyperbolic_space import (RadialFunction, RadialGrid, ball_volume, lp_norm, lp_norm_estimate,
                              make_space, radial_laplacian, volume_density)
from spherical_functions import spherical_fn


def _masked_eigen_residual(space, lam, step, lo=0.1, hi=20.0):
    grid = RadialGrid.uniform(hi + 1.0, step)
    phi = spherical_fn(space, lam, grid)
    eigenvalue = complex(lam) ** 2 + space.rho ** 2
    residual = radial_laplacian(space, phi).values - eigenvalue * phi.values
    r = grid.points
    mask = (r >= lo) & (r <= hi)
    weight = volume_density(space, r[mask])
    num = np.sum(np.abs(residual[mask]) ** 2 * weight)
    den = np.sum(np.abs(eigenvalue * phi.values[mask]) ** 2 * weight)
    return float(np.sqrt(num / den))


def test_make_space_constants():
    h3 = make_space(3)
    assert h3.rho == 1.0
    assert h3.surface_const == pytest.approx(4 * np.pi)
    assert make_space(2).rho == 0.5
    assert make_space(2).surface_const == pytest.approx(2 * np.pi)
    assert h3.eigen_floor == 1.0


@pytest.mark.parametrize("n", [1, 0, 2.5])
def test_make_space_rejects_bad_dimension(n):
    with pytest.raises(ValueError):
        make_space(n)


def test_volume_density_and_ball_volume():
    h3 = make_space(3)
    assert volume_density(h3, 1.0) == pytest.approx(4 * np.pi * np.sinh(1.0) ** 2)
    assert volume_density(h3, 0.0) == 0.0
    with pytest.raises(ValueError):
        volume_density(h3, -1.0)
    # Vol(B(r)) = π(sinh 2r - 2r)
    for r in (0.5, 2.0, 5.0):
        assert ball_volume(h3, r) == pytest.approx(np.pi * (np.sinh(2 * r) - 2 * r), rel=1e-10)


def test_uniform_grid():
    grid = RadialGrid.uniform(1.0, 0.25)
    assert np.allclose(grid.points, [0, 0.25, 0.5, 0.75, 1.0])
    assert len(grid) == 5
    # r_max 向上取整为步长的整数倍
    assert RadialGrid.uniform(1.1, 0.25).r_max == pytest.approx(1.25)
    assert grid.restricted(0.5).r_max == 0.5
    assert grid.coarsened().step == 0.5
    with pytest.raises(ValueError):
        RadialGrid.uniform(1.0, 0.0)
    with pytest.raises(ValueError):
        RadialGrid(points=np.array([0.1, 0.2, 0.3]), step=0.1, r_max=0.3)


def test_radial_function_arithmetic():
    grid = RadialGrid.uniform(1.0, 0.25)
    f = RadialFunction.from_callable(grid, lambda r: r)
    g = f.scaled(2.0) - f
    assert np.allclose(g.values, f.values)
    assert f.sup_norm() == 1.0
    with pytest.raises(ValueError):
        RadialFunction(grid, np.zeros(3))
    with pytest.raises(ValueError):
        f + RadialFunction(RadialGrid.uniform(2.0, 0.25), np.zeros(9))


def test_laplacian_of_constant_vanishes():
    space = make_space(4)
    grid = RadialGrid.uniform(5.0, 1.0 / 64.0)
    ones = RadialFunction(grid, np.ones(len(grid)))
    assert np.max(np.abs(radial_laplacian(space, ones).values)) < 1e-9


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0, 1 + 0.2j])
def test_spherical_function_eigen_relation(n, lam):
    space = make_space(n)
    assert _masked_eigen_residual(space, lam, 1.0 / 256.0) <= 1e-4


@pytest.mark.parametrize("lam", [1.0, 2.0, 1 + 0.2j])
def test_laplacian_second_order_convergence(lam):
    space = make_space(3)
    fine = _masked_eigen_residual(space, lam, 1.0 / 256.0)
    coarse = _masked_eigen_residual(space, lam, 1.0 / 128.0)
    assert coarse / fine >= 3.5


def test_lp_norm_of_constant_matches_ball_volume():
    space = make_space(3)
    grid = RadialGrid.uniform(3.0, 1.0 / 512.0)
    ones = RadialFunction(grid, np.ones(len(grid)))
    assert lp_norm(space, ones, 2.0, 2.0) == pytest.approx(np.sqrt(ball_volume(space, 2.0)), rel=1e-5)
    with pytest.raises(ValueError):
        lp_norm(space, ones, 2.0, 4.0)
    with pytest.raises(ValueError):
        lp_norm(space, ones, 0.5)


def test_lp_norm_monotone_in_radius():
    space = make_space(2)
    grid = RadialGrid.uniform(20.0, 1.0 / 64.0)
    phi = spherical_fn(space, 1.0, grid)
    norms = [lp_norm(space, phi, 1.5, R) for R in (2.0, 5.0, 10.0, 20.0)]
    assert all(b >= a for a, b in zip(norms, norms[1:]))


def test_norm_estimate_tail():
    space = make_space(3)
    grid = RadialGrid.uniform(12.0, 1.0 / 64.0)
    bump = RadialFunction.from_callable(grid, lambda r: np.exp(-r ** 2))
    estimate = lp_norm_estimate(space, bump, 2.0, R=8.0)
    assert estimate.decay_rate < 0
    assert estimate.tail < 1e-3 * estimate.value ** 2
    ones = RadialFunction(grid, np.ones(len(grid)))
    growing = lp_norm_estimate(space, ones, 2.0)
    assert growing.decay_rate == pytest.approx(2.0, abs=1e-2)
    assert growing.tail == np.inf


def test_grid_rejects_non_uniform_points():
    with pytest.raises(ValueError):
        RadialGrid(points=np.array([0.0, 0.25, 0.75, 1.0]), step=0.25, r_max=1.0)
    # 步长与点距不符
    with pytest.raises(ValueError):
        RadialGrid(points=np.array([0.0, 0.25, 0.5, 0.75]), step=0.5, r_max=0.75)
    with pytest.raises(ValueError):
        RadialGrid(points=np.array([0.0, 0.25, 0.5, 0.75]), step=0.25, r_max=2.0)
    with pytest.raises(ValueError):
        RadialGrid(points=np.array([0.0, 0.25, 0.5]), step=-0.25, r_max=0.5)
    grid = RadialGrid(points=np.array([0.0, 0.25, 0.5, 0.75]), step=0.25, r_max=0.75)
    assert len(grid.coarsened()) == 2


@pytest.mark.parametrize("n", [2, 3, 5])
def test_volume_density_is_derivative_of_ball_volume(n):
    space = make_space(n)
    delta = 1e-4
    for R in (0.5, 1.5, 3.0):
        derivative = (ball_volume(space, R + delta) - ball_volume(space, R - delta)) / (2 * delta)
        assert derivative == pytest.approx(volume_density(space, R), rel=1e-7)


def test_lp_norm_is_homogeneous():
    space = make_space(3)
    grid = RadialGrid.uniform(8.0, 1.0 / 128.0)
    bump = RadialFunction.from_callable(grid, lambda r: np.exp(-r ** 2))
    for p in (1.5, 2.0, 4.0):
        base = lp_norm(space, bump, p)
        assert lp_norm(space, bump.scaled(2 - 1j), p) == pytest.approx(abs(2 - 1j) * base, rel=1e-12)
        assert lp_norm(space, bump.scaled(-3.0), p) == pytest.approx(3.0 * base, rel=1e-12)


def test_l4_norm_converges_only_inside_strip():
    space = make_space(3)
    grid = RadialGrid.uniform(20.0, 1.0 / 64.0)
    # 实 λ：|φ_1|^4 J ~ e^{-2r}，截断范数随 R 收敛
    phi = spherical_fn(space, 1.0, grid)
    assert lp_norm(space, phi, 4.0, 10.0) == pytest.approx(lp_norm(space, phi, 4.0, 20.0), rel=1e-6)
    inside = lp_norm_estimate(space, spherical_fn(space, 0.3j, grid), 4.0)
    assert inside.decay_rate == pytest.approx(-0.8, abs=0.05)
    assert np.isfinite(inside.tail)
    # |Im λ| = 0.8 超出半宽 0.5 的条带
    outside = spherical_fn(space, 0.8j, grid)
    estimate = lp_norm_estimate(space, outside, 4.0)
    assert estimate.decay_rate == pytest.approx(1.2, abs=0.05)
    assert estimate.tail == np.inf
    assert lp_norm(space, outside, 4.0, 20.0) > 10 * lp_norm(space, outside, 4.0, 10.0)
