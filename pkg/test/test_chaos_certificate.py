#!/usr/bin/env python3
"""
混沌证据构造与证书测试

包含 H^3, p=4, c=1 以及 H^2、H^4、H^5 的完整证书流程（各耗时数分钟）。
"""

import json
import sys
from pathlib import Path

import numpy as np
import pytest

# 添加项目根目录到Python路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

import chaos_certificate
import heat_semigroup
from chaos_certificate import (GATE_NO_INTERIOR, GATE_PERIODIC, GATE_SECTION_EMPTY, SCHEMA_VERSION, VERDICT_CHAOTIC,
                               VERDICT_NONE, VERDICT_SUBSPACE, EigenAtom, EigenExpansion, certificate_from_json,
                               certificate_to_json, certify, certify_product, decay_witness, decaying_dictionary,
                               density_fit, eigen_map, eigen_residual, growing_dictionary, monotone_within,
                               nested_density_fits, nonchaos_diagnostics, padded_residual, period_defect,
                               periodic_point, product_eigen_map, small_seed_eigenvalue, small_seed_recovery)
from config import DEFAULT_SETTINGS
from heat_semigroup import SemigroupConfig
from hyperbolic_space import RadialGrid, make_space
from spectral_regions import BranchCutError, OmegaRegion, make_region
from spherical_transform import gaussian_bump

H3 = make_space(3)
CONFIG = SemigroupConfig(H3, 4.0, 1.0)


@pytest.fixture(scope="module")
def grid():
    return RadialGrid.uniform(12.0, 1.0 / 128.0)


@pytest.fixture(scope="module")
def full_certificate():
    return certify(H3, 4.0, 1.0, seed=7)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_eigen_map_satisfies_eigen_relation(n):
    space = make_space(n)
    grid = RadialGrid.uniform(12.0, 1.0 / 64.0)
    c = 1.0
    for z in (0.2 + 0.3j, -0.1 + 0.4j, 1.5 - 0.2j):
        f = eigen_map(space, c, z, grid)
        assert f.values[0] == pytest.approx(1.0)
        # Δ F(z) = (z + c) F(z)
        assert eigen_residual(space, f, z + c) <= 10.0 * (1.0 / 64.0) ** 2


def test_eigen_map_rejects_branch_cut():
    grid = RadialGrid.uniform(2.0, 1.0 / 64.0)
    with pytest.raises(BranchCutError):
        eigen_map(H3, 1.0, -0.5, grid)
    with pytest.raises(BranchCutError):
        EigenAtom.from_eigenvalue(H3, 0.0, -2.0)


def test_product_eigen_map_eigenvalues_sum():
    spaces = [make_space(3), make_space(3)]
    grids = [RadialGrid.uniform(8.0, 1.0 / 64.0)] * 2
    z = 0.4 + 0.5j
    factors, eigenvalues = product_eigen_map(spaces, 2.0, z, grids, p=4.0)
    assert sum(eigenvalues) == pytest.approx(z + 2.0)
    for space, f, e in zip(spaces, factors, eigenvalues):
        assert eigen_residual(space, f, e) <= 10.0 * (1.0 / 64.0) ** 2
    with pytest.raises(ValueError):
        product_eigen_map(spaces, 2.0, 0.4 - 0.5j, grids, p=4.0)


def test_periodic_point_construction():
    expansion = periodic_point(H3, CONFIG, 8 * np.pi, [(1, 1.0)])
    assert expansion.atoms[0].z == pytest.approx(0.25j)
    assert period_defect(expansion, 8 * np.pi) <= 1e-12
    two = periodic_point(H3, CONFIG, 16 * np.pi, [(1, 1.0), (2, 0.5)])
    assert period_defect(two, 16 * np.pi) <= 1e-12
    # |2π/T| = 0.5 = Y 不在截面内部
    with pytest.raises(ValueError):
        periodic_point(H3, CONFIG, 4 * np.pi, [(1, 1.0)])
    with pytest.raises(ValueError):
        periodic_point(H3, CONFIG, 8 * np.pi, [(0, 1.0)])
    with pytest.raises(ValueError):
        periodic_point(H3, SemigroupConfig(H3, 4.0, 0.5), 8 * np.pi, [(1, 1.0)])


def test_expansion_evolution_is_exact(grid):
    atoms = (EigenAtom.from_eigenvalue(H3, 1.0, 0.3), EigenAtom.from_eigenvalue(H3, 1.0, 0.1 + 0.2j, 0.5))
    expansion = EigenExpansion(H3, 4.0, 1.0, atoms, grid)
    later = expansion.evolved(2.0)
    assert np.allclose(later.coefficients, [np.exp(-0.6), 0.5 * np.exp(-0.2 - 0.4j)])
    with pytest.raises(ValueError):
        EigenExpansion(H3, 4.0, 1.0, (), grid)
    with pytest.raises(ValueError):
        EigenExpansion(H3, 4.0, 1.0, atoms).materialize()


def test_decay_witness_reaches_threshold(grid):
    trace = decay_witness(H3, CONFIG, grid)
    norms = [norm for _, norm in trace]
    assert trace[0][0] == 0.0 and trace[-1][0] == 60.0
    assert all(b < a for a, b in zip(norms, norms[1:]))
    assert norms[-1] < 1e-3 * norms[0]


def test_small_seed_exact_recovery(grid):
    region = make_region(H3.rho, 4.0, 1.0)
    z0 = small_seed_eigenvalue(H3.rho, region.b_p, 1.0)
    assert z0.real < 0
    assert OmegaRegion(region).contains(z0)
    atom = EigenAtom.from_eigenvalue(H3, 1.0, z0)
    target = eigen_map(H3, 1.0, z0, grid)
    final = float(np.ceil(np.log(100.0) / -z0.real))
    trace = small_seed_recovery(H3, CONFIG, target, [atom], [final / 2, final])
    assert trace.seed_ratios[0] > trace.seed_ratios[1]
    assert trace.seed_ratios[-1] <= 0.01
    assert max(trace.recovery_errors) <= 1.5 * trace.fit_residual + 1e-9
    with pytest.raises(ValueError):
        small_seed_eigenvalue(H3.rho, region.b_p, 0.5)
    with pytest.raises(ValueError):
        small_seed_recovery(H3, CONFIG, target, [EigenAtom.from_eigenvalue(H3, 1.0, 0.5)], [1.0])


def test_dictionaries_are_nested():
    coarse = decaying_dictionary(H3, 1.0, 0)
    fine = decaying_dictionary(H3, 1.0, 1)
    assert len(coarse) == 25 and len(fine) == 50
    fine_z = np.array([atom.z for atom in fine])
    assert all(np.min(np.abs(fine_z - atom.z)) < 1e-12 for atom in coarse)
    assert all(atom.z.real > 0 for atom in fine)
    growing = growing_dictionary(H3, 1.0, 4.0)
    assert len(growing) == 24
    assert all(atom.z.real <= -0.05 + 1e-12 for atom in growing)
    with pytest.raises(ValueError):
        growing_dictionary(H3, 0.5, 4.0)


def test_density_fits_decrease(grid):
    target = gaussian_bump(grid, 1.0)
    dictionaries = [decaying_dictionary(H3, 1.0, level) for level in range(3)]
    fits = nested_density_fits(H3, CONFIG, target, dictionaries)
    residuals = [fit.residual_l2 for fit in fits]
    assert [fit.size for fit in fits] == [25, 50, 100]
    assert monotone_within(residuals, atol=np.sqrt(DEFAULT_SETTINGS.ridge_factor))
    assert residuals[-1] <= 5e-2
    assert all(fit.ridge > 0 for fit in fits)


def test_density_fit_rejects_repeated_atoms(grid):
    atom = EigenAtom.from_eigenvalue(H3, 1.0, 0.5)
    with pytest.raises(ValueError):
        density_fit(H3, CONFIG, gaussian_bump(grid, 1.0), [atom, atom])
    with pytest.raises(ValueError):
        density_fit(H3, CONFIG, gaussian_bump(grid, 1.0), [])


def test_certificate_gates_before_computation():
    empty = certify(H3, 4.0, 0.5, seed=7)
    assert empty.verdict == VERDICT_NONE
    assert empty.failed_gate == GATE_SECTION_EMPTY
    assert empty.region["c_p"] == pytest.approx(0.75)
    for p in (2.0, 1.5):
        degenerate = certify(H3, p, 5.0, seed=7)
        assert degenerate.verdict == VERDICT_NONE
        assert degenerate.failed_gate == GATE_NO_INTERIOR


def test_certificate_json_round_trip():
    certificate = certify(H3, 4.0, 0.5, seed=3)
    certificate.periodic = [{"z": [0.25j], "windowed_error": float("nan")}]
    text = certificate_to_json(certificate)
    data = json.loads(text)
    assert list(data)[:3] == ["schema_version", "library_version", "kind"]
    assert data["periodic"][0]["z"] == [[0.0, 0.25]]
    assert data["periodic"][0]["windowed_error"] is None
    restored = certificate_from_json(text)
    assert restored.failed_gate == GATE_SECTION_EMPTY
    assert certificate_to_json(restored) == text
    data["schema_version"] = "0.0"
    with pytest.raises(ValueError):
        certificate_from_json(json.dumps(data))


def test_full_certificate_h3(full_certificate):
    certificate = full_certificate
    assert certificate.schema_version == SCHEMA_VERSION
    assert certificate.verdict == VERDICT_CHAOTIC, certificate.reasons
    assert certificate.failed_gate is None
    assert certificate.region["Y"] == pytest.approx(0.5)
    assert certificate.eigen_residual <= 10.0 * (1.0 / 64.0) ** 2
    for entry in certificate.periodic:
        assert entry["eigen_factor_error"] <= 1e-12
        assert entry["windowed_error"] <= 1e-6
        assert entry["method"] == "heat-kernel"
    assert certificate.decay_trace[-1][1] <= 1e-3 * certificate.decay_trace[0][1]
    assert certificate.smallseed_trace["exact"][-1][1] <= 0.01
    assert len(certificate.density_residuals) == 3
    for report in certificate.density_residuals:
        residuals = report["residual_l2"]
        assert report["monotone"]
        assert monotone_within(residuals, atol=np.sqrt(DEFAULT_SETTINGS.ridge_factor))
        assert residuals[-1] <= 5e-2


def test_product_certificate_is_deterministic():
    spaces = [make_space(3), make_space(3)]
    first = certify_product(spaces, 4.0, 2.0, seed=5)
    second = certify_product(spaces, 4.0, 2.0, seed=5)
    assert first.verdict == VERDICT_SUBSPACE, first.reasons
    assert first.region["factor_threshold_sum"] == pytest.approx(1.5)
    assert first.region["Y"] == pytest.approx(1.0)
    assert certificate_to_json(first) == certificate_to_json(second)
    below = certify_product(spaces, 4.0, 1.0, seed=5)
    assert below.failed_gate == GATE_SECTION_EMPTY
    with pytest.raises(ValueError):
        certify_product([make_space(3)], 4.0, 2.0)


@pytest.mark.parametrize("p", [2.0, 1.5])
def test_nonchaos_divergence_witness(p):
    for c in (0.5, 1.0, 2.0, 5.0):
        report = nonchaos_diagnostics(H3, p, [1.0], c=c)
        assert report.section["kind"] != "interval"
    entry = report.entries[0]
    assert entry.diverging
    assert all(ratio >= 1.3 for ratio in entry.ratios)
    if p < 2:
        assert entry.dual_membership == "inside"
    else:
        assert entry.dual_membership is None


def test_nonchaos_rejects_large_p():
    with pytest.raises(ValueError):
        nonchaos_diagnostics(H3, 4.0, [1.0])
    with pytest.raises(ValueError):
        nonchaos_diagnostics(H3, 2.0, [1.0], radii=(10.0,))


def test_padded_residual_reproduces_previous_level(grid):
    target = gaussian_bump(grid, 1.0)
    dictionaries = [decaying_dictionary(H3, 1.0, level) for level in range(2)]
    fits = nested_density_fits(H3, CONFIG, target, dictionaries)
    padded = padded_residual(H3, target, fits[0], dictionaries[0], dictionaries[1])
    assert padded == pytest.approx(fits[0].residual_l2, rel=1e-8)
    # 报告的是该层自己的拟合残差
    direct = density_fit(H3, CONFIG, target, dictionaries[1])
    assert fits[1].residual_l2 == pytest.approx(direct.residual_l2, rel=1e-12)


def test_rising_residual_is_flagged_not_replaced(grid):
    target = gaussian_bump(grid, 1.0)
    # 先大后小的字典让残差回升
    dictionaries = [decaying_dictionary(H3, 1.0, 1), decaying_dictionary(H3, 1.0, 0)]
    fits = nested_density_fits(H3, CONFIG, target, dictionaries)
    assert fits[0].rescued_residual_l2 is None
    assert fits[1].rescued_residual_l2 is not None and np.isfinite(fits[1].rescued_residual_l2)
    direct = density_fit(H3, CONFIG, target, dictionaries[1])
    assert fits[1].residual_l2 == pytest.approx(direct.residual_l2, rel=1e-12)
    assert not monotone_within([fit.residual_l2 for fit in fits])


def test_monotone_within_tolerance():
    assert monotone_within([3e-2, 2e-2, 1e-2])
    assert monotone_within([1e-2, 1.000001e-2])
    assert not monotone_within([1e-2, 2e-2])
    assert monotone_within([1e-6, 2e-6], atol=1e-5)
    assert monotone_within([])


def test_density_needs_accumulating_dictionary(grid):
    target = gaussian_bump(grid, 1.0)
    accumulating = decaying_dictionary(H3, 1.0, 2)
    # μ = 6, 8, 10, ...：没有有限聚点，且远离目标的谱支撑
    sparse = [EigenAtom.from_eigenvalue(H3, 1.0, (6.0 + 2.0 * j) ** 2) for j in range(25)]
    dense_fit = density_fit(H3, CONFIG, target, accumulating)
    sparse_fit = density_fit(H3, CONFIG, target, sparse)
    assert dense_fit.residual_l2 <= 5e-2
    assert sparse_fit.residual_l2 >= 0.5
    assert sparse_fit.residual_l2 > 10 * dense_fit.residual_l2


def test_full_certificate_h5_uses_collocation():
    certificate = certify(make_space(5), 4.0, 4.0, seed=7)
    assert certificate.region["c_p"] == pytest.approx(3.0)
    assert certificate.verdict == VERDICT_CHAOTIC, certificate.reasons
    for entry in certificate.periodic:
        assert entry["method"] == "collocation"
        assert entry["eigen_factor_error"] <= 1e-12
        assert entry["windowed_error"] <= 1e-6


@pytest.mark.parametrize("n, c", [(2, 1.0), (4, 2.5)])
def test_even_dimension_certificates(n, c):
    certificate = certify(make_space(n), 4.0, c, seed=7)
    assert certificate.verdict == VERDICT_CHAOTIC, certificate.reasons
    assert certificate.periodic_error <= 1e-6
    assert all(report["monotone"] for report in certificate.density_residuals)


def test_product_certificate_detects_mismatched_eigenvalue(monkeypatch):
    original = chaos_certificate.product_eigen_map

    def shifted(*args, **kwargs):
        factors, eigenvalues = original(*args, **kwargs)
        eigenvalues = list(eigenvalues)
        eigenvalues[1] += 1e-6
        return factors, eigenvalues

    monkeypatch.setattr(chaos_certificate, "product_eigen_map", shifted)
    certificate = certify_product([make_space(3), make_space(3)], 4.0, 2.0, seed=5)
    assert certificate.verdict == VERDICT_NONE
    assert certificate.failed_gate == GATE_PERIODIC
    assert certificate.periodic[0]["eigen_factor_error"] > 1e-6


def test_product_certificate_detects_drifting_factor_semigroup(monkeypatch):
    original = heat_semigroup.evolve_eigen

    def drifting(config, z):
        return original(config, z) * np.exp(-1e-6 * config.t)

    monkeypatch.setattr(heat_semigroup, "evolve_eigen", drifting)
    certificate = certify_product([make_space(3), make_space(3)], 4.0, 2.0, seed=5)
    assert certificate.failed_gate == GATE_PERIODIC
    # 恢复误差同样经过各因子的半群
    assert max(row[2] for row in certificate.smallseed_trace["exact"]) > 1e-9


def test_product_small_seed_recovers_exactly():
    certificate = certify_product([make_space(3), make_space(3)], 4.0, 2.0, seed=5)
    rows = certificate.smallseed_trace["exact"]
    assert rows[-1][1] <= 0.01 * (1 + 1e-6)
    assert all(row[2] <= 1e-9 for row in rows)
    assert certificate.periodic[0]["method"] == "tensor heat-kernel x heat-kernel"
