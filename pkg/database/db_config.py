"""
数据库配置模块
证书运行记录保存在 SQLite 中
"""
import os
from contextlib import contextmanager
from pathlib import Path

from pydantic import BaseModel
from sqlalchemy import create_engine, text
from sqlalchemy.orm import declarative_base, sessionmaker

from config import debug_print, error_print


class DatabaseConfig(BaseModel):
    """数据库配置类"""
    sqlite_path: str = "database/certificates.db"

    @classmethod
    def from_env(cls) -> 'DatabaseConfig':
        """从环境变量创建配置"""
        config = cls(sqlite_path=os.getenv("SQLITE_DB_PATH", "database/certificates.db"))
        debug_print(f"🔧 数据库配置: SQLite 文件={config.sqlite_path}")
        return config

    @property
    def connection_string(self) -> str:
        """获取数据库连接字符串（确保目录存在）"""
        db_path = Path(self.sqlite_path)
        db_path.parent.mkdir(parents=True, exist_ok=True)
        return f"sqlite:///{self.sqlite_path}"


# 全局数据库配置
db_config = DatabaseConfig.from_env()

Base = declarative_base()
engine = None
SessionLocal = None


def configure(sqlite_path: str = None):
    """
    按路径（缺省为当前配置）创建引擎与会话工厂

    Args:
        sqlite_path: SQLite 文件路径
    """
    global db_config, engine, SessionLocal
    if sqlite_path is not None:
        db_config = DatabaseConfig(sqlite_path=sqlite_path)
    engine = create_engine(db_config.connection_string, echo=False,
                           connect_args={"check_same_thread": False})
    SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)
    return engine


configure()


@contextmanager
def get_db_session():
    """获取数据库会话的上下文管理器"""
    session = SessionLocal()
    try:
        yield session
        session.commit()
    except Exception as e:
        session.rollback()
        raise e
    finally:
        session.close()


def test_connection() -> bool:
    """测试数据库连接"""
    try:
        with get_db_session() as session:
            row = session.execute(text("SELECT 1")).fetchone()
            return row is not None and row[0] == 1
    except Exception as e:
        error_print(f"数据库连接测试失败: {e}")
        return False


def create_tables() -> bool:
    """按 ORM 模型创建数据库表"""
    try:
        # 注册模型
        from database import models  # noqa: F401
        Base.metadata.create_all(engine)
        debug_print("SQLite数据库表创建成功")
        return True
    except Exception as e:
        error_print(f"数据库表创建失败: {e}")
        return False
