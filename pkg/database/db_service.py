"""
证书记录的数据库操作服务
"""
from typing import Any, Dict, List, Optional

from sqlalchemy import desc, text

from config import error_print
from database.db_config import create_tables, get_db_session
from database.models import CertificateRecord


class CertificateStore:
    """证书记录服务类"""

    @staticmethod
    def save_certificate(certificate: Dict[str, Any], description: str = "") -> Optional[int]:
        """保存证书，返回记录 ID"""
        try:
            create_tables()
            with get_db_session() as session:
                record = CertificateRecord.from_certificate(certificate, description)
                session.add(record)
                session.flush()
                return record.id
        except Exception as e:
            error_print(f"保存证书失败: {e}")
            return None

    @staticmethod
    def get_history(limit: int = 20) -> List[Dict[str, Any]]:
        """按时间倒序获取证书记录（不含完整证书）"""
        try:
            create_tables()
            with get_db_session() as session:
                rows = (session.query(CertificateRecord)
                        .order_by(desc(CertificateRecord.id))
                        .limit(limit)
                        .all())
                return [row.to_dict() for row in rows]
        except Exception as e:
            error_print(f"获取证书历史失败: {e}")
            return []

    @staticmethod
    def get_certificate_by_id(record_id: int) -> Optional[Dict[str, Any]]:
        """根据ID获取记录（含完整证书）"""
        try:
            create_tables()
            with get_db_session() as session:
                record = session.get(CertificateRecord, record_id)
                return record.to_dict(include_certificate=True) if record else None
        except Exception as e:
            error_print(f"获取证书失败: {e}")
            return None

    @staticmethod
    def get_statistics() -> Dict[str, Any]:
        """按判定统计记录数"""
        try:
            create_tables()
            with get_db_session() as session:
                total = session.execute(text("SELECT COUNT(*) FROM certificate_runs")).scalar() or 0
                rows = session.execute(text(
                    "SELECT verdict, COUNT(*) FROM certificate_runs GROUP BY verdict ORDER BY verdict"
                )).fetchall()
                return {
                    'total_runs': total,
                    'by_verdict': {verdict: count for verdict, count in rows},
                }
        except Exception as e:
            error_print(f"获取统计信息失败: {e}")
            return {'total_runs': 0, 'by_verdict': {}}
