"""
全局配置管理
控制debug输出、日志级别以及数值计算参数

功能：
1. 从环境变量（以及 .env 文件）读取调试/日志开关
2. 提供统一的输出辅助函数，全部写入 stderr，stdout 与输出文件只保留数据
3. NumericsSettings：网格、求积、容差等数值参数的集中定义
"""
import os
import sys

from pydantic import BaseModel

# 加载.env文件
try:
    import dotenv
    dotenv.load_dotenv()
except ImportError:
    pass

VERSION = "0.3.0"

# 从环境变量读取配置
DEBUG_MODE = os.getenv("DEBUG", "false").lower() == "true"
VERBOSE_LOGGING = os.getenv("VERBOSE_LOGGING", "false").lower() == "true"
QUIET_MODE = os.getenv("QUIET_MODE", "false").lower() == "true"

# 默认输出目录
OUTPUT_DIR = os.getenv("HEAT_OUTPUT_DIR", "output")


def debug_print(*args, **kwargs):
    """调试输出，仅在DEBUG_MODE为True时输出"""
    if DEBUG_MODE and not QUIET_MODE:
        print(*args, file=sys.stderr, **kwargs)


def verbose_print(*args, **kwargs):
    """详细输出，仅在VERBOSE_LOGGING为True时输出"""
    if VERBOSE_LOGGING and not QUIET_MODE:
        print(*args, file=sys.stderr, **kwargs)


def info_print(*args, **kwargs):
    """信息输出，仅在非QUIET_MODE时输出"""
    if not QUIET_MODE:
        print(*args, file=sys.stderr, **kwargs)


def error_print(*args, **kwargs):
    """错误输出，始终输出"""
    print(*args, file=sys.stderr, **kwargs)


def verbose_info_print(*args, **kwargs):
    """详细信息输出，在VERBOSE_LOGGING或非QUIET_MODE时输出"""
    if VERBOSE_LOGGING or not QUIET_MODE:
        print(*args, file=sys.stderr, **kwargs)


def debug_info_print(*args, **kwargs):
    """调试信息输出，在DEBUG_MODE或VERBOSE_LOGGING时输出"""
    if DEBUG_MODE or VERBOSE_LOGGING:
        print(*args, file=sys.stderr, **kwargs)


class NumericsSettings(BaseModel):
    """
    数值参数配置

    径向网格、谱网格、ODE 容差与各类判定阈值。
    实例不可变，可安全地在线程间共享。
    """
    model_config = {"frozen": True}

    # r 方向是均匀采样上的复合 Simpson，Richardson 差给出逐次误差估计。
    # 奇数 n：被积函数在原点为偶函数，H^3 上与 quad 相差 < 1e-8（rel）。
    # 偶数 n：原点端点误差 ≈ h^4·λ²/20·max|f|，h=1/256、λ=24 时约 1e-8，由反演的噪声底吸收。
    grid_step: float = 1.0 / 256.0      # 径向网格步长 h
    r_max: float = 40.0                 # 截断半径 R_max
    lam_max: float = 24.0               # 谱截断 Λ_max
    panel_nodes: int = 20               # 每个 Gauss-Legendre 面板的节点数
    panel_width: float = 1.0            # 面板宽度上限，实际取 min(panel_width, 3/R)
    boundary_tol: float = 1e-9          # 区域/条带边界判定容差
    residual_threshold: float = 5e-2    # 证书拟合残差阈值（相对）
    ridge_factor: float = 1e-10         # Gram 矩阵岭参数 = ridge_factor * trace
    tail_tol: float = 1e-8              # 截断尾项容差
    ode_rtol: float = 1e-11
    ode_atol: float = 1e-13
    multiplier_floor: float = 60.0      # 乘子 e^{-t(...)} 低于 e^{-floor} 的频段不再积分
    periodic_tol: float = 1e-6          # 周期点相对误差阈值
    max_workers: int = 4                # 证书子实验并发数

    @classmethod
    def from_env(cls) -> "NumericsSettings":
        """从环境变量创建配置"""
        defaults = cls()
        settings = cls(
            grid_step=float(os.getenv("GRID_STEP", defaults.grid_step)),
            r_max=float(os.getenv("GRID_RMAX", defaults.r_max)),
            lam_max=float(os.getenv("LAMBDA_MAX", defaults.lam_max)),
            panel_nodes=int(os.getenv("PANEL_NODES", defaults.panel_nodes)),
            boundary_tol=float(os.getenv("BOUNDARY_TOL", defaults.boundary_tol)),
            residual_threshold=float(os.getenv("RESIDUAL_THRESHOLD", defaults.residual_threshold)),
            ridge_factor=float(os.getenv("RIDGE_FACTOR", defaults.ridge_factor)),
            tail_tol=float(os.getenv("TAIL_TOL", defaults.tail_tol)),
            max_workers=int(os.getenv("MAX_WORKERS", defaults.max_workers)),
        )
        debug_print(f"🔧 数值配置: h={settings.grid_step}, R_max={settings.r_max}, Λ_max={settings.lam_max}")
        return settings

    def tolerances(self) -> dict:
        """输出文件头部使用的容差回显"""
        return {
            "boundary_tol": self.boundary_tol,
            "residual_threshold": self.residual_threshold,
            "ridge_factor": self.ridge_factor,
            "tail_tol": self.tail_tol,
            "ode_rtol": self.ode_rtol,
            "periodic_tol": self.periodic_tol,
        }


DEFAULT_SETTINGS = NumericsSettings.from_env()
