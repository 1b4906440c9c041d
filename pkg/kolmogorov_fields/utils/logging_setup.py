"""
日志初始化
"""

import logging
import logging.handlers
from pathlib import Path
from typing import Optional

from ..config import LOGGING_CONFIG


def setup_logging(level: Optional[str] = None, log_file: Optional[str] = None) -> logging.Logger:
    """
    设置日志配置

    Args:
        level: 日志级别，默认读取 LOGGING_CONFIG
        log_file: 日志文件路径，给出时强制启用文件日志

    Returns:
        包级 logger
    """
    level = level or LOGGING_CONFIG["level"]
    handlers = [logging.StreamHandler()]  # 控制台输出

    if log_file or LOGGING_CONFIG["enable_file_logging"]:
        log_path = Path(log_file or LOGGING_CONFIG["log_file"])
        log_path.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.handlers.RotatingFileHandler(
            log_path,
            maxBytes=LOGGING_CONFIG["max_file_size"],
            backupCount=LOGGING_CONFIG["backup_count"],
            encoding="utf-8",
        ))

    logging.basicConfig(
        level=getattr(logging, level.upper()),
        format=LOGGING_CONFIG["format"],
        handlers=handlers,
        force=True,
    )
    return logging.getLogger("kolmogorov_fields")
