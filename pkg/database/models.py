"""
数据库模型定义
"""
from sqlalchemy import JSON, Column, DateTime, Float, Integer, String, Text
from sqlalchemy.sql import func

from database.db_config import Base


class CertificateRecord(Base):
    """证书运行记录"""
    __tablename__ = "certificate_runs"

    id = Column(Integer, primary_key=True, autoincrement=True)
    kind = Column(String(16), nullable=False, comment='rank-one 或 product')
    dimension = Column(String(32), nullable=False, comment='维数（乘积写成 3x3）')
    p = Column(Float, nullable=False)
    c = Column(Float, nullable=False)
    seed = Column(Integer)
    verdict = Column(String(32), nullable=False, comment='判定')
    failed_gate = Column(String(64), comment='首个失败闸门')
    periodic_error = Column(Float)
    eigen_residual = Column(Float)
    library_version = Column(String(16))
    description = Column(Text)
    # 完整证书（SQLite 以 TEXT 存储 JSON）
    certificate = Column(JSON)
    created_at = Column(DateTime, server_default=func.now(), comment='创建时间')

    def to_dict(self, include_certificate: bool = False):
        """转换为字典"""
        data = {
            'id': self.id,
            'kind': self.kind,
            'dimension': self.dimension,
            'p': self.p,
            'c': self.c,
            'seed': self.seed,
            'verdict': self.verdict,
            'failed_gate': self.failed_gate,
            'periodic_error': self.periodic_error,
            'eigen_residual': self.eigen_residual,
            'library_version': self.library_version,
            'description': self.description,
            'created_at': self.created_at.isoformat() if self.created_at else None,
        }
        if include_certificate:
            data['certificate'] = self.certificate
        return data

    @classmethod
    def from_certificate(cls, certificate: dict, description: str = ""):
        """从证书字典（certificate_to_json 的解析结果）创建记录"""
        config = certificate.get('config', {})
        dims = config.get('dimensions') or [config.get('dimension')]
        return cls(
            kind=certificate.get('kind'),
            dimension="x".join(str(d) for d in dims),
            p=config.get('p'),
            c=config.get('c'),
            seed=config.get('seed'),
            verdict=certificate.get('verdict'),
            failed_gate=certificate.get('failed_gate'),
            periodic_error=certificate.get('periodic_error'),
            eigen_residual=certificate.get('eigen_residual'),
            library_version=certificate.get('library_version'),
            description=description,
            certificate=certificate,
        )
