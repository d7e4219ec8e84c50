#!/usr/bin/env python3
"""
命令行测试：通过子进程运行 cli.py，检查输出文件与退出码
"""

import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

# 添加项目根目录到Python路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from chaos_certificate import eigen_map
from cli import RunConfig, parse_complex_token, parse_profile, parse_time_list, parse_time_token
from heat_semigroup import heat_oracle_h3
from hyperbolic_space import RadialFunction, RadialGrid, lp_norm, make_space
from spherical_transform import gaussian_bump, relative_l2_error

CLI = project_root / "cli.py"
STEP = "0.0078125"


def run_cli(tmp_path: Path, *args: str) -> subprocess.CompletedProcess:
    env = dict(os.environ)
    env["HEAT_OUTPUT_DIR"] = str(tmp_path / "output")
    env["SQLITE_DB_PATH"] = str(tmp_path / "runs.db")
    return subprocess.run([sys.executable, str(CLI), *args], capture_output=True, text=True, env=env,
                          cwd=str(tmp_path))


def read_csv(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def test_time_tokens():
    assert parse_time_token("8pi") == pytest.approx(8 * np.pi)
    assert parse_time_token("pi/2") == pytest.approx(np.pi / 2)
    assert parse_time_token("-pi") == pytest.approx(-np.pi)
    assert parse_time_token("2*pi") == pytest.approx(2 * np.pi)
    assert parse_time_token("3pi/4") == pytest.approx(0.75 * np.pi)
    assert parse_time_token("0.5") == 0.5
    assert parse_time_token("1e-1") == pytest.approx(0.1)
    assert parse_time_list("0,8pi,16pi") == pytest.approx([0.0, 8 * np.pi, 16 * np.pi])
    for bad in ("", "pie", "abc", "/2"):
        with pytest.raises(ValueError):
            parse_time_token(bad)


def test_complex_tokens():
    assert parse_complex_token("i") == 1j
    assert parse_complex_token("-i") == -1j
    assert parse_complex_token("1+0.5i") == 1 + 0.5j
    assert parse_complex_token("0.5j") == 0.5j
    assert parse_complex_token("2") == 2
    with pytest.raises(ValueError):
        parse_complex_token("x")


def test_run_config_validation():
    with pytest.raises(ValidationError):
        RunConfig(command="sph", dimension=1, lam="1")
    with pytest.raises(ValidationError):
        RunConfig(command="region", p=0.5)
    with pytest.raises(ValidationError):
        RunConfig(command="evolve", times=[1.0, 0.5], profile="gaussian:1")
    with pytest.raises(ValidationError):
        RunConfig(command="evolve", t=1.0)
    with pytest.raises(ValidationError):
        RunConfig(command="certify", p=4.0, c=1.0)
    with pytest.raises(ValidationError):
        RunConfig(command="sph", lam="1", output_format="xlsx")
    config = RunConfig(command="evolve", t=0.5, profile="gaussian:1.5:2")
    assert config.settings().grid_step == config.grid_step
    assert "output" not in config.echo()
    assert parse_profile("gaussian:1.5:2") == (1.5, 2.0)
    with pytest.raises(ValueError):
        parse_profile("box:1")


def test_sph_normalized_csv(tmp_path):
    out = tmp_path / "phi.csv"
    result = run_cli(tmp_path, "sph", "--n", "3", "--lambda", "1", "--rmax", "10", "--h", "0.015625",
                     "-o", str(out))
    assert result.returncode == 0, result.stderr
    header = out.read_text(encoding="utf-8").splitlines()[:4]
    assert header[0].startswith("# library_version")
    assert any(line.startswith("# tolerances") for line in header)
    frame = read_csv(out)
    assert list(frame.columns) == ["r", "re_phi", "im_phi"]
    assert frame["r"].iloc[0] == 0.0
    assert frame["re_phi"].iloc[0] == pytest.approx(1.0)
    r = frame["r"].to_numpy()[1:]
    assert np.allclose(frame["re_phi"].to_numpy()[1:], np.sin(r) / np.sinh(r), atol=1e-12)


def test_sph_lambda_i_rho_is_constant(tmp_path):
    out = tmp_path / "const.csv"
    result = run_cli(tmp_path, "sph", "--n", "3", "--lambda", "i", "--rmax", "5", "-o", str(out))
    assert result.returncode == 0, result.stderr
    frame = read_csv(out)
    assert np.allclose(frame["re_phi"], 1.0, atol=1e-12)
    assert np.allclose(frame["im_phi"], 0.0, atol=1e-12)


def test_sph_json_format(tmp_path):
    out = tmp_path / "phi.json"
    result = run_cli(tmp_path, "sph", "--n", "2", "--lambda", "1", "--rmax", "2", "--h", "0.0625",
                     "--format", "json", "-o", str(out))
    assert result.returncode == 0, result.stderr
    data = json.loads(out.read_text(encoding="utf-8"))
    assert data["meta"]["command"] == "sph"
    assert data["columns"] == ["r", "re_phi", "im_phi"]
    assert data["rows"][0]["re_phi"] == pytest.approx(1.0)


def test_sph_rejects_dimension_one(tmp_path):
    result = run_cli(tmp_path, "sph", "--n", "1", "--lambda", "1")
    assert result.returncode == 2
    assert "dimension" in result.stderr


def test_default_output_directory(tmp_path):
    result = run_cli(tmp_path, "sph", "--n", "3", "--lambda", "2", "--rmax", "1", "--h", "0.125")
    assert result.returncode == 0, result.stderr
    assert (tmp_path / "output" / "sph.csv").exists()


def test_region_summary(tmp_path):
    out = tmp_path / "region.csv"
    result = run_cli(tmp_path, "region", "--n", "3", "--p", "4", "--c", "1", "--count", "101", "-o", str(out))
    assert result.returncode == 0, result.stderr
    summary = json.loads(result.stdout)
    assert summary["c_p"] == pytest.approx(0.75, abs=1e-12)
    assert summary["b_p"] == pytest.approx(0.5, abs=1e-12)
    assert summary["Y"] == pytest.approx(0.5, abs=1e-12)
    assert summary["sector_angle"] == pytest.approx(0.5235987755982988)
    stored = json.loads((tmp_path / "region.csv.json").read_text(encoding="utf-8"))
    assert stored["summary"] == summary
    frame = read_csv(out)
    assert list(frame.columns) == ["x", "re_upper", "im_upper", "re_lower", "im_lower"]
    assert len(frame) == 101
    assert np.allclose(frame["im_upper"], -frame["im_lower"])


def test_region_degenerate_and_empty(tmp_path):
    result = run_cli(tmp_path, "region", "--n", "3", "--p", "2", "--c", "2", "-o", str(tmp_path / "a.csv"))
    assert result.returncode == 0, result.stderr
    assert json.loads(result.stdout)["Y"] == "degenerate"
    result = run_cli(tmp_path, "region", "--n", "3", "--p", "4", "--c", "0.5", "-o", str(tmp_path / "b.csv"))
    assert json.loads(result.stdout)["Y"] == "empty"
    result = run_cli(tmp_path, "region", "--n", "3", "--p", "4", "--c", "0.75", "-o", str(tmp_path / "c.csv"))
    assert json.loads(result.stdout)["Y"] == 0.0


def test_region_rejects_small_p(tmp_path):
    result = run_cli(tmp_path, "region", "--p", "0.5")
    assert result.returncode == 2
    assert result.stdout == ""


def test_evolve_zero_time_round_trip(tmp_path):
    out = tmp_path / "t0.csv"
    result = run_cli(tmp_path, "evolve", "--n", "3", "--t", "0", "--profile", "gaussian:1", "--rmax", "12",
                     "--h", STEP, "-o", str(out))
    assert result.returncode == 0, result.stderr
    frame = read_csv(out)
    grid = RadialGrid.uniform(12.0, float(STEP))
    snapshot = RadialFunction(grid, frame["re"].to_numpy() + 1j * frame["im"].to_numpy())
    assert relative_l2_error(make_space(3), snapshot, gaussian_bump(grid, 1.0)) <= 1e-4


def test_evolve_matches_heat_kernel(tmp_path):
    out = tmp_path / "t1.csv"
    result = run_cli(tmp_path, "evolve", "--n", "3", "--c", "0", "--t", "1", "--profile", "gaussian:1",
                     "--rmax", "12", "--h", STEP, "-o", str(out))
    assert result.returncode == 0, result.stderr
    frame = read_csv(out)
    grid = RadialGrid.uniform(12.0, float(STEP))
    oracle = heat_oracle_h3(gaussian_bump(grid, 1.0), 1.0)
    assert np.max(np.abs(frame["re"].to_numpy() + 1j * frame["im"].to_numpy() - oracle.values)) <= 1e-5


def test_evolve_periodic_atoms(tmp_path):
    atoms = tmp_path / "atoms.json"
    atoms.write_text(json.dumps({"c": 1.0, "p": 4.0,
                                 "atoms": [{"z": [0.0, 0.25], "coefficient": [1.0, 0.0]}]}), encoding="utf-8")
    out = tmp_path / "orbit.csv"
    result = run_cli(tmp_path, "evolve", "--n", "3", "--atoms", str(atoms), "--times", "0,8pi,16pi",
                     "--rmax", "12", "--h", "0.015625", "-o", str(out))
    assert result.returncode == 0, result.stderr
    frame = read_csv(out)
    assert list(frame.columns) == ["t", "norm"]
    assert frame["t"].iloc[1] == pytest.approx(8 * np.pi)
    assert np.allclose(frame["norm"], frame["norm"].iloc[0], rtol=1e-10)


def test_evolve_atoms_exponent_conflict(tmp_path):
    atoms = tmp_path / "atoms.json"
    atoms.write_text(json.dumps({"c": 1.0, "p": 3.0,
                                 "atoms": [{"z": [0.0, 0.25], "coefficient": [1.0, 0.0]}]}), encoding="utf-8")
    out = tmp_path / "orbit.csv"
    result = run_cli(tmp_path, "evolve", "--n", "3", "--atoms", str(atoms), "--p", "4", "--times", "0,1",
                     "--rmax", "12", "--h", "0.015625", "-o", str(out))
    assert result.returncode == 2
    assert not out.exists()
    # 未给出 --p 时沿用文件中的 p
    result = run_cli(tmp_path, "evolve", "--n", "3", "--atoms", str(atoms), "--times", "0,1",
                     "--rmax", "12", "--h", "0.015625", "-o", str(out))
    assert result.returncode == 0, result.stderr
    grid = RadialGrid.uniform(12.0, 0.015625)
    expected = lp_norm(make_space(3), eigen_map(make_space(3), 1.0, 0.25j, grid), 3.0)
    assert read_csv(out)["norm"].iloc[0] == pytest.approx(expected, rel=1e-10)
    result = run_cli(tmp_path, "evolve", "--n", "3", "--atoms", str(atoms), "--p", "3", "--times", "0,1",
                     "--rmax", "12", "--h", "0.015625", "-o", str(out))
    assert result.returncode == 0, result.stderr


def test_evolve_rejects_bad_times(tmp_path):
    result = run_cli(tmp_path, "evolve", "--times", "1,0.5", "--profile", "gaussian:1")
    assert result.returncode == 2
    result = run_cli(tmp_path, "evolve", "--t", "1", "--times", "1,2", "--profile", "gaussian:1")
    assert result.returncode == 2
    result = run_cli(tmp_path, "evolve", "--t", "1")
    assert result.returncode == 2


def test_evolve_truncation_exit_code(tmp_path):
    # 宽鼓包在 R=4 处未衰减，前向变换被截断主导
    result = run_cli(tmp_path, "evolve", "--n", "3", "--t", "1", "--profile", "gaussian:3", "--rmax", "4",
                     "--h", "0.015625")
    assert result.returncode == 3
    assert "截断" in result.stderr


def test_certify_requires_seed(tmp_path):
    result = run_cli(tmp_path, "certify", "--n", "3", "--p", "4", "--c", "1")
    assert result.returncode == 2


def test_certify_below_threshold_is_deterministic(tmp_path):
    first = tmp_path / "a.json"
    second = tmp_path / "b.json"
    for out in (first, second):
        result = run_cli(tmp_path, "certify", "--n", "3", "--p", "4", "--c", "0.5", "--seed", "7", "-o", str(out))
        assert result.returncode == 0, result.stderr
    data = json.loads(first.read_text(encoding="utf-8"))
    assert data["verdict"] == "no-evidence"
    assert data["failed_gate"] == "imaginary-axis section empty"
    assert first.read_bytes() == second.read_bytes()


def test_full_certify_is_byte_identical(tmp_path):
    first = tmp_path / "a.json"
    second = tmp_path / "b.json"
    for out in (first, second):
        result = run_cli(tmp_path, "certify", "--n", "3", "--p", "4", "--c", "1", "--seed", "7", "-o", str(out))
        assert result.returncode == 0, result.stderr
    assert json.loads(first.read_text(encoding="utf-8"))["verdict"] == "chaotic-evidence"
    assert first.read_bytes() == second.read_bytes()


def test_certify_product_save_and_history(tmp_path):
    out = tmp_path / "product.json"
    result = run_cli(tmp_path, "certify", "--product", "3,3", "--p", "4", "--c", "2", "--seed", "1",
                     "--save", "-o", str(out))
    assert result.returncode == 0, result.stderr
    data = json.loads(out.read_text(encoding="utf-8"))
    assert data["kind"] == "product"
    assert data["verdict"] == "subspace-chaotic-evidence"

    history = run_cli(tmp_path, "history", "--limit", "5")
    assert history.returncode == 0, history.stderr
    assert "subspace-chaotic-evidence" in history.stdout
    assert "3x3" in history.stdout

    stored = run_cli(tmp_path, "history", "--id", "1")
    assert stored.returncode == 0, stored.stderr
    assert json.loads(stored.stdout) == data

    missing = run_cli(tmp_path, "history", "--id", "99")
    assert missing.returncode == 2


def test_certify_product_rejects_three_factors(tmp_path):
    result = run_cli(tmp_path, "certify", "--product", "3,3,3", "--p", "4", "--c", "2", "--seed", "1")
    assert result.returncode == 2


def test_entry_script(tmp_path):
    env = dict(os.environ)
    env["HEAT_OUTPUT_DIR"] = str(tmp_path / "output")
    result = subprocess.run([sys.executable, str(project_root / "run_cli.py"), "region", "--p", "4", "--c", "1"],
                            capture_output=True, text=True, env=env, cwd=str(tmp_path))
    assert result.returncode == 0, result.stderr
    assert json.loads(result.stdout)["Y"] == pytest.approx(0.5)
    assert (tmp_path / "output" / "region.csv").exists()
