"""
反演常数缓存模块
κ_n 对每个维数和数值配置只需标定一次，这里缓存标定结果，
避免证书与演化流程中重复做往返计算
"""
import hashlib
import json
import threading
from functools import wraps
from typing import Any, Callable, Dict, Optional

from pydantic import BaseModel

from config import debug_print, info_print


def _normalize(value: Any) -> Any:
    """把标定参数转换为可 JSON 序列化的形式：空间取维数，配置取全部字段"""
    if isinstance(value, BaseModel):
        return value.model_dump()
    if hasattr(value, "dimension") and hasattr(value, "rho"):
        return {"H^n": value.dimension}
    if isinstance(value, float):
        return repr(value)
    return value


def calibration_key(name: str, *args, **kwargs) -> str:
    """
    由函数名、位置参数与关键字参数生成 md5 键

    settings=None 与缺省配置视为不同的键；调用方应显式传入配置。
    """
    payload = {
        "fn": name,
        "args": [_normalize(arg) for arg in args],
        "kwargs": {key: _normalize(value) for key, value in sorted(kwargs.items())},
    }
    text = json.dumps(payload, sort_keys=True, default=repr)
    return hashlib.md5(text.encode()).hexdigest()


class CalibrationCache:
    """标定结果缓存（进程内、线程安全）"""

    def __init__(self):
        self._entries: Dict[str, Any] = {}
        self._lock = threading.Lock()
        self.hit_count = 0
        self.miss_count = 0

    def get(self, key: str) -> Optional[Any]:
        with self._lock:
            found = key in self._entries
            if found:
                self.hit_count += 1
            else:
                self.miss_count += 1
            value = self._entries.get(key)
        debug_print(f"{'✅ 标定缓存命中' if found else '🔍 标定缓存未命中'}: {key[:8]}")
        return value

    def set(self, key: str, value: Any) -> None:
        with self._lock:
            self._entries[key] = value
        debug_print(f"💾 κ 已缓存: {key[:8]} -> {value}")

    def clear(self) -> None:
        with self._lock:
            dropped = len(self._entries)
            self._entries.clear()
            self.hit_count = self.miss_count = 0
        info_print(f"🗑️  已清空 {dropped} 个标定缓存项")

    def get_stats(self) -> Dict[str, Any]:
        """命中统计；hit_rate 为百分比字符串"""
        with self._lock:
            lookups = self.hit_count + self.miss_count
            rate = 100.0 * self.hit_count / lookups if lookups else 0.0
            return {
                "size": len(self._entries),
                "hit_count": self.hit_count,
                "miss_count": self.miss_count,
                "total_requests": lookups,
                "hit_rate": f"{rate:.2f}%",
            }


_calibration_cache = CalibrationCache()


def cache_result(cache_instance: Optional[CalibrationCache] = None):
    """
    标定函数的缓存装饰器

    Args:
        cache_instance: 使用的缓存实例，默认使用全局标定缓存
    """
    store = cache_instance if cache_instance is not None else _calibration_cache

    def decorator(func: Callable) -> Callable:
        @wraps(func)
        def wrapper(*args, **kwargs):
            key = calibration_key(func.__name__, *args, **kwargs)
            value = store.get(key)
            if value is None:
                value = func(*args, **kwargs)
                store.set(key, value)
            return value

        return wrapper

    return decorator


def get_calibration_cache() -> CalibrationCache:
    """获取全局标定缓存实例"""
    return _calibration_cache
