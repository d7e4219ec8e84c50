"""
命令行入口

子命令：
1. sph：在径向网格上计算 φ_λ，输出 r, Re φ, Im φ
2. region：P_p - c 的边界采样与截面摘要 {c_p, b_p, Y, sector_angle}
3. evolve：高斯鼓包或本征展开的演化快照 / 轨道范数
4. certify：混沌证据证书（JSON），可选保存到数据库
5. history：查看已保存的证书

所有数据写入文件（先写临时文件再改名），诊断信息写入 stderr。
退出码：0 成功，2 参数错误，3 数值截断失败，1 其他错误。
"""
import argparse
import json
import math
import os
import re
import sys
import tempfile
import traceback
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator
from tabulate import tabulate

from chaos_certificate import (EigenAtom, EigenExpansion, certificate_to_json, certify,
                               certify_product)
from config import (DEBUG_MODE, DEFAULT_SETTINGS, OUTPUT_DIR, VERSION, NumericsSettings,
                    error_print, info_print)
from heat_semigroup import SemigroupConfig, evolve, orbit_trace
from hyperbolic_space import RadialGrid, make_space
from spectral_regions import (SECTION_EMPTY, boundary_points, imaginary_axis_section, make_region,
                              sector_bound)
from spherical_functions import spherical_fn
from spherical_transform import TruncationError, gaussian_bump

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_TRUNCATION = 3

_NUMBER = r"(?:\d+(?:\.\d*)?|\.\d+)(?:e[+-]?\d+)?"
TIME_PATTERN = re.compile(rf"([+-]?)({_NUMBER})?\*?(pi|π)?(?:/({_NUMBER}))?")


class UsageError(ValueError):
    """参数组合不合法"""


def parse_time_token(token: str) -> float:
    """
    解析时间记号：0.5、8pi、pi/2、-pi、2*pi、3pi/4

    Raises:
        ValueError: 无法识别的记号
    """
    text = token.strip().lower().replace(" ", "")
    match = TIME_PATTERN.fullmatch(text)
    if not text or match is None:
        raise ValueError(f"无法解析时间: {token!r}")
    sign, coefficient, pi, denominator = match.groups()
    if coefficient is None and pi is None:
        raise ValueError(f"无法解析时间: {token!r}")
    value = float(coefficient) if coefficient is not None else 1.0
    if pi:
        value *= math.pi
    if denominator is not None:
        value /= float(denominator)
    return -value if sign == "-" else value


def parse_time_list(text: str) -> List[float]:
    return [parse_time_token(token) for token in text.split(",") if token.strip()]


def parse_complex_token(token: str) -> complex:
    """解析复数记号：1、i、-i、1+0.5i、0.5j"""
    text = token.strip().lower().replace(" ", "").replace("i", "j")
    try:
        return complex(text)
    except ValueError:
        raise ValueError(f"无法解析复数: {token!r}") from None


class RunConfig(BaseModel):
    """一次命令行调用的完整配置，在任何计算之前校验"""
    command: str
    dimension: int = Field(3, ge=2)
    dimensions: Optional[List[int]] = None
    p: float = Field(2.0, gt=1)
    c: Optional[float] = None
    lam: Optional[str] = None
    t: Optional[float] = Field(None, ge=0)
    times: Optional[List[float]] = None
    grid_step: float = Field(DEFAULT_SETTINGS.grid_step, gt=0)
    r_max: float = Field(DEFAULT_SETTINGS.r_max, gt=0)
    lam_max: float = Field(DEFAULT_SETTINGS.lam_max, gt=0)
    tail_tol: float = Field(DEFAULT_SETTINGS.tail_tol, gt=0)
    residual_threshold: float = Field(DEFAULT_SETTINGS.residual_threshold, gt=0)
    seed: Optional[int] = Field(None, ge=0)
    profile: Optional[str] = None
    atoms: Optional[str] = None
    count: int = Field(1000, ge=2)
    output: Optional[str] = None
    output_format: str = "csv"
    save: bool = False

    @field_validator("output_format")
    @classmethod
    def _known_format(cls, value: str) -> str:
        if value not in ("csv", "json"):
            raise ValueError(f"输出格式只支持 csv/json，收到 {value}")
        return value

    @field_validator("times")
    @classmethod
    def _increasing_times(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is None:
            return value
        if not value:
            raise ValueError("时间列表不能为空")
        if any(t < 0 for t in value):
            raise ValueError(f"时间必须非负: {value}")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError(f"时间序列必须严格递增: {value}")
        return value

    @field_validator("dimensions")
    @classmethod
    def _two_factors(cls, value: Optional[List[int]]) -> Optional[List[int]]:
        if value is None:
            return value
        if len(value) != 2:
            raise ValueError(f"乘积只支持两个因子，收到 {len(value)} 个")
        if any(n < 2 for n in value):
            raise ValueError(f"每个因子的维数必须 ≥ 2: {value}")
        return value

    @field_validator("lam")
    @classmethod
    def _complex_lam(cls, value: Optional[str]) -> Optional[str]:
        if value is not None:
            parse_complex_token(value)
        return value

    @field_validator("profile")
    @classmethod
    def _gaussian_profile(cls, value: Optional[str]) -> Optional[str]:
        if value is not None:
            parse_profile(value)
        return value

    @model_validator(mode="after")
    def _command_requirements(self) -> "RunConfig":
        if self.command == "sph" and self.lam is None:
            raise ValueError("sph 需要 --lambda")
        if self.command == "evolve":
            if (self.t is None) == (self.times is None):
                raise ValueError("evolve 需要 --t 与 --times 之一")
            if (self.profile is None) == (self.atoms is None):
                raise ValueError("evolve 需要 --profile 与 --atoms 之一")
        if self.command == "certify" and self.seed is None:
            raise ValueError("certify 需要 --seed")
        return self

    @property
    def shift(self) -> float:
        return 0.0 if self.c is None else float(self.c)

    def settings(self) -> NumericsSettings:
        return DEFAULT_SETTINGS.model_copy(update={
            "grid_step": self.grid_step,
            "r_max": self.r_max,
            "lam_max": self.lam_max,
            "tail_tol": self.tail_tol,
            "residual_threshold": self.residual_threshold,
        })

    def echo(self) -> dict:
        """写入文件头的配置回显（不含输出路径）"""
        return self.model_dump(mode="json", exclude={"output", "save"})


def parse_profile(text: str):
    """gaussian:w 或 gaussian:w:centre"""
    parts = text.split(":")
    if parts[0] != "gaussian" or len(parts) not in (2, 3):
        raise ValueError(f"未知的初值族: {text}（支持 gaussian:w 或 gaussian:w:centre）")
    width = float(parts[1])
    centre = float(parts[2]) if len(parts) == 3 else 0.0
    if width <= 0:
        raise ValueError(f"高斯宽度必须为正，收到 {width}")
    if centre < 0:
        raise ValueError(f"高斯中心必须非负，收到 {centre}")
    return width, centre


# ---------------------------------------------------------------- 输出

def _output_path(config: RunConfig, default_suffix: str) -> Path:
    if config.output:
        return Path(config.output)
    return Path(OUTPUT_DIR) / f"{config.command}.{default_suffix}"


def write_atomic(path: Path, text: str) -> Path:
    """先写同目录临时文件，再 os.replace 改名"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, temp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(temp, path)
    except Exception:
        if os.path.exists(temp):
            os.unlink(temp)
        raise
    return path


def _meta(config: RunConfig, settings: NumericsSettings) -> dict:
    return {
        "library_version": VERSION,
        "command": config.command,
        "config": config.echo(),
        "tolerances": settings.tolerances(),
    }


def write_table(config: RunConfig, settings: NumericsSettings, frame: pd.DataFrame) -> Path:
    """按 output_format 写出数据表，附带版本、配置与容差头部"""
    meta = _meta(config, settings)
    path = _output_path(config, config.output_format)
    if config.output_format == "json":
        payload = {"meta": meta, "columns": list(frame.columns), "rows": frame.to_dict(orient="records")}
        text = json.dumps(payload, indent=2, ensure_ascii=False, default=float) + "\n"
    else:
        header = "".join(f"# {key}: {json.dumps(value, ensure_ascii=False, sort_keys=True)}\n"
                         for key, value in meta.items())
        text = header + frame.to_csv(index=False, float_format="%.15g", lineterminator="\n")
    write_atomic(path, text)
    info_print(f"💾 已写入 {path}（{len(frame)} 行）")
    return path


# ---------------------------------------------------------------- 子命令

def cmd_sph(config: RunConfig) -> int:
    settings = config.settings()
    space = make_space(config.dimension)
    lam = parse_complex_token(config.lam)
    grid = RadialGrid.uniform(config.r_max, config.grid_step)
    info_print(f"🔧 φ_λ: n={space.dimension}, λ={lam}, r ≤ {grid.r_max}, h={grid.step}")
    phi = spherical_fn(space, lam, grid, settings=settings)
    frame = pd.DataFrame({"r": grid.points, "re_phi": phi.values.real, "im_phi": phi.values.imag})
    write_table(config, settings, frame)
    return EXIT_OK


def region_axis_summary(rho: float, p: float, c: float, tol: float) -> dict:
    """{c_p, b_p, Y, sector_angle}；p ≤ 2 时 Y 记为 degenerate，截面为空时记为 empty"""
    region = make_region(rho, p, c)
    if p <= 2:
        y_entry = "degenerate"
    else:
        section = imaginary_axis_section(region, tol)
        y_entry = "empty" if section.kind == SECTION_EMPTY else float(section.half_length)
    return {
        "c_p": region.apex,
        "b_p": region.b_p,
        "Y": y_entry,
        "sector_angle": sector_bound(p).half_angle,
    }


def cmd_region(config: RunConfig) -> int:
    settings = config.settings()
    space = make_space(config.dimension)
    region = make_region(space.rho, config.p, config.shift)
    points = boundary_points(region, count=config.count)
    frame = pd.DataFrame({
        "x": points[:, 0].real,
        "re_upper": points[:, 1].real,
        "im_upper": points[:, 1].imag,
        "re_lower": points[:, 2].real,
        "im_lower": points[:, 2].imag,
    })
    path = write_table(config, settings, frame)
    summary = region_axis_summary(space.rho, config.p, config.shift, settings.boundary_tol)
    summary_text = json.dumps({"meta": _meta(config, settings), "summary": summary},
                              indent=2, ensure_ascii=False) + "\n"
    write_atomic(path.with_name(path.name + ".json"), summary_text)
    print(json.dumps(summary, ensure_ascii=False))
    return EXIT_OK


def load_atoms(path: str, space, p: Optional[float], c: Optional[float], grid: RadialGrid,
               default_p: float = 2.0) -> EigenExpansion:
    """
    读取本征展开文件

    格式: {"c": 1.0, "p": 4.0, "atoms": [{"z": [re, im], "coefficient": [re, im]}, ...]}
    命令行显式给出的 --c / --p 与文件不一致时报错；未给出时以文件为准。

    Args:
        p: 显式给出的 --p，未给出时为 None
        default_p: 命令行与文件都未给出 p 时的取值
    """
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    file_c = data.get("c")
    if c is not None and file_c is not None and float(file_c) != c:
        raise UsageError(f"--c={c} 与展开文件中的 c={file_c} 不一致")
    file_p = data.get("p")
    if p is not None and file_p is not None and float(file_p) != p:
        raise UsageError(f"--p={p} 与展开文件中的 p={file_p} 不一致")
    shift = c if c is not None else float(file_c or 0.0)
    atoms = []
    for item in data.get("atoms", []):
        z = complex(*item["z"])
        coefficient = complex(*item.get("coefficient", [1.0, 0.0]))
        atoms.append(EigenAtom.from_eigenvalue(space, shift, z, coefficient))
    exponent = p if p is not None else float(file_p if file_p is not None else default_p)
    return EigenExpansion(space, exponent, shift, tuple(atoms), grid)


def cmd_evolve(config: RunConfig) -> int:
    settings = config.settings()
    space = make_space(config.dimension)
    grid = RadialGrid.uniform(config.r_max, config.grid_step)
    if config.atoms:
        explicit_p = config.p if "p" in config.model_fields_set else None
        source = load_atoms(config.atoms, space, explicit_p, config.c, grid, default_p=config.p)
        semigroup = SemigroupConfig(space, source.p, source.c)
    else:
        width, centre = parse_profile(config.profile)
        source = gaussian_bump(grid, width, centre)
        semigroup = SemigroupConfig(space, config.p, config.shift)

    if config.times is not None:
        info_print(f"📊 轨道范数: {len(config.times)} 个时刻, p={semigroup.p}, c={semigroup.c}")
        trace = orbit_trace(semigroup, source, config.times, settings=settings)
        frame = pd.DataFrame(trace, columns=["t", "norm"])
    else:
        info_print(f"⏱️  演化快照: t={config.t}, c={semigroup.c}")
        if isinstance(source, EigenExpansion):
            snapshot = source.evolved(config.t).materialize(settings=settings)
        else:
            snapshot = evolve(semigroup.at(config.t), source, settings=settings)
        frame = pd.DataFrame({"r": grid.points, "re": snapshot.values.real, "im": snapshot.values.imag})
    write_table(config, settings, frame)
    return EXIT_OK


def _certificate_table(data: dict) -> str:
    rows = [["verdict", data["verdict"]], ["failed_gate", data["failed_gate"] or "-"]]
    rows += [["reason", reason] for reason in data["reasons"]]
    if data.get("periodic_error") is not None:
        rows.append(["periodic_error", f"{data['periodic_error']:.3e}"])
    return tabulate(rows, headers=["项目", "值"], tablefmt="grid")


def cmd_certify(config: RunConfig) -> int:
    settings = config.settings()
    if config.dimensions:
        spaces = [make_space(n) for n in config.dimensions]
        certificate = certify_product(spaces, config.p, config.shift, seed=config.seed, settings=settings)
    else:
        space = make_space(config.dimension)
        certificate = certify(space, config.p, config.shift, seed=config.seed, settings=settings)
    text = certificate_to_json(certificate)
    path = write_atomic(_output_path(config, "json"), text)
    data = json.loads(text)
    info_print(_certificate_table(data))
    info_print(f"💾 证书已写入 {path}")
    if config.save:
        from database.db_service import CertificateStore
        record_id = CertificateStore.save_certificate(data, description=str(path))
        if record_id is None:
            error_print("❌ 证书保存到数据库失败")
            return EXIT_FAILURE
        info_print(f"🗄️  已保存到数据库，记录 ID={record_id}")
    return EXIT_OK


def cmd_history(args: argparse.Namespace) -> int:
    from database.db_service import CertificateStore
    if args.id is not None:
        record = CertificateStore.get_certificate_by_id(args.id)
        if record is None:
            error_print(f"❌ 记录不存在: id={args.id}")
            return EXIT_USAGE
        print(json.dumps(record["certificate"], indent=2, ensure_ascii=False))
        return EXIT_OK
    rows = CertificateStore.get_history(args.limit)
    if not rows:
        info_print("暂无证书记录")
        return EXIT_OK
    columns = ["id", "kind", "dimension", "p", "c", "seed", "verdict", "failed_gate", "created_at"]
    print(tabulate([[row[key] for key in columns] for row in rows], headers=columns, tablefmt="grid"))
    return EXIT_OK


COMMANDS = {
    "sph": cmd_sph,
    "region": cmd_region,
    "evolve": cmd_evolve,
    "certify": cmd_certify,
}


# ---------------------------------------------------------------- 参数解析

def _add_common(parser: argparse.ArgumentParser, p_default: Optional[float] = None):
    parser.add_argument("--n", dest="dimension", type=int, default=3, help="维数 n ≥ 2（默认 3）")
    parser.add_argument("--p", type=float, default=p_default, help="指数 p > 1")
    parser.add_argument("--c", type=float, default=None, help="平移 c（默认 0）")
    parser.add_argument("--h", dest="grid_step", type=float, default=None, help="径向网格步长")
    parser.add_argument("--rmax", dest="r_max", type=float, default=None, help="截断半径")
    parser.add_argument("--lam-max", dest="lam_max", type=float, default=None, help="谱截断 Λ_max")
    parser.add_argument("--tail-tol", dest="tail_tol", type=float, default=None, help="截断尾项容差")
    parser.add_argument("--residual-threshold", dest="residual_threshold", type=float, default=None,
                        help="证书拟合残差阈值")
    parser.add_argument("--output", "-o", default=None, help=f"输出文件（默认 {OUTPUT_DIR}/<命令>.<格式>）")
    parser.add_argument("--format", dest="output_format", choices=["csv", "json"], default="csv",
                        help="输出格式")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heat-chaos", description="双曲空间径向热半群与混沌证据工具")
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    sph = sub.add_parser("sph", help="计算球函数 φ_λ")
    _add_common(sph)
    sph.add_argument("--lambda", dest="lam", required=True, help="谱参数，如 1、i、1+0.2i")

    region = sub.add_parser("region", help="L^p 谱区域边界与截面摘要")
    _add_common(region)
    region.add_argument("--count", type=int, default=1000, help="边界采样点数")

    ev = sub.add_parser("evolve", help="热半群演化")
    _add_common(ev)
    ev.add_argument("--t", type=parse_time_token, default=None, help="快照时刻，支持 8pi、pi/2")
    ev.add_argument("--times", type=parse_time_list, default=None, help="逗号分隔的时刻列表，输出 (t, norm)")
    ev.add_argument("--profile", default=None, help="初值族 gaussian:w[:centre]")
    ev.add_argument("--atoms", default=None, help="本征展开 JSON 文件")

    cert = sub.add_parser("certify", help="生成混沌证据证书")
    _add_common(cert)
    cert.add_argument("--seed", type=int, required=True, help="随机采样种子（必填）")
    cert.add_argument("--product", default=None, help="两个因子的维数，如 3,3")
    cert.add_argument("--save", action="store_true", help="保存证书到数据库")

    history = sub.add_parser("history", help="查看已保存的证书")
    history.add_argument("--limit", type=int, default=20, help="显示条数")
    history.add_argument("--id", type=int, default=None, help="按记录 ID 输出完整证书")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = {key: value for key, value in vars(args).items() if value is not None}
    product = values.pop("product", None)
    if product is not None:
        try:
            values["dimensions"] = [int(token) for token in product.split(",")]
        except ValueError:
            raise UsageError(f"--product 需要逗号分隔的整数，收到 {product!r}") from None
    return RunConfig(**values)


def _first_error(exc: ValidationError) -> str:
    error = exc.errors()[0]
    location = ".".join(str(part) for part in error.get("loc", ())) or "config"
    return f"{location}: {error['msg']}"


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "history":
        return cmd_history(args)
    try:
        config = config_from_args(args)
    except ValidationError as exc:
        error_print(f"❌ 参数错误: {_first_error(exc)}")
        return EXIT_USAGE
    except ValueError as exc:
        error_print(f"❌ 参数错误: {exc}")
        return EXIT_USAGE

    try:
        with np.errstate(over="ignore", under="ignore"):
            return COMMANDS[config.command](config)
    except TruncationError as exc:
        error_print(f"❌ 数值截断失败: {exc}")
        return EXIT_TRUNCATION
    except ValueError as exc:
        error_print(f"❌ 参数错误: {exc}")
        return EXIT_USAGE
    except Exception as exc:
        error_print(f"❌ 运行失败: {exc}")
        if DEBUG_MODE:
            traceback.print_exc()
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
