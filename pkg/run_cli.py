#!/usr/bin/env python3
"""
热半群与混沌证据工具启动脚本
"""

import sys

from config import OUTPUT_DIR, VERSION, debug_print


def main():
    """运行命令行"""
    debug_print(f"🚀 heat-chaos {VERSION}，默认输出目录: {OUTPUT_DIR}")
    from cli import main as cli_main
    return cli_main(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
