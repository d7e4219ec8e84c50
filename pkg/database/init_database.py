#!/usr/bin/env python3
"""
数据库初始化脚本
用于创建证书记录表和测试连接
"""

import sys
from pathlib import Path

# 添加项目根目录到Python路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from config import error_print, info_print
from database.db_config import create_tables, db_config, test_connection
from database.db_service import CertificateStore


def main() -> bool:
    """主函数"""
    info_print("开始初始化证书数据库...")
    info_print("=" * 50)
    info_print(f"   数据库文件: {db_config.sqlite_path}")

    info_print("测试数据库连接...")
    if not test_connection():
        error_print("数据库连接失败！请检查 SQLITE_DB_PATH 与文件读写权限")
        return False
    info_print("数据库连接成功！")

    if not create_tables():
        error_print("数据库表创建失败！")
        return False
    info_print("数据库表创建成功！")

    stats = CertificateStore.get_statistics()
    info_print(f"   当前记录数: {stats['total_runs']}")
    for verdict, count in stats['by_verdict'].items():
        info_print(f"   {verdict}: {count}")
    return True


if __name__ == "__main__":
    sys.exit(0 if main() else 1)
