"""
样本编解码
FieldSample 的二进制布局与各类表格的 CSV 输出

二进制布局（小端）：固定头部 + time_grid(float64) + values(float64，行主序
(复制, 时间, 网格点, h_dim))
"""

import logging
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from ..config import OUTPUT_CONFIG
from ..core.chaining import FieldSample, NormKind

logger = logging.getLogger(__name__)

MAGIC = b"KFSAMPLE"
FORMAT_VERSION = 1

HEADER_DTYPE = np.dtype([
    ("magic", "S8"),
    ("version", "<u4"),
    ("d", "<u4"),
    ("m_max", "<u4"),
    ("n_time", "<u4"),
    ("h_dim", "<u4"),
    ("n_rep", "<u4"),
    ("norm", "<u4"),
    ("has_seed", "<u4"),
    ("seed", "<u8"),
])

NORM_CODES = {NormKind.SUP: 0, NormKind.L2: 1, NormKind.L1: 2}
NORM_FROM_CODE = {code: norm for norm, code in NORM_CODES.items()}


def encode_field_sample(sample: FieldSample) -> bytes:
    """FieldSample → 字节串"""
    header = np.zeros(1, dtype=HEADER_DTYPE)
    header["magic"] = MAGIC
    header["version"] = FORMAT_VERSION
    header["d"] = sample.d
    header["m_max"] = sample.m_max
    header["n_time"] = sample.n_time
    header["h_dim"] = sample.h_dim
    header["n_rep"] = sample.n_rep
    header["norm"] = NORM_CODES[sample.norm]
    header["has_seed"] = 0 if sample.seed is None else 1
    header["seed"] = 0 if sample.seed is None else int(sample.seed)
    return (header.tobytes()
            + np.ascontiguousarray(sample.time_grid, dtype="<f8").tobytes()
            + np.ascontiguousarray(sample.values, dtype="<f8").tobytes())


def decode_field_sample(payload: bytes) -> FieldSample:
    """
    字节串 → FieldSample

    Raises:
        ValueError: 魔数、版本或长度不符
    """
    if len(payload) < HEADER_DTYPE.itemsize:
        raise ValueError("样本文件过短")
    header = np.frombuffer(payload, dtype=HEADER_DTYPE, count=1)[0]
    if bytes(header["magic"]) != MAGIC or int(header["version"]) != FORMAT_VERSION:
        raise ValueError("不是受支持的 FieldSample 文件")

    d, m_max = int(header["d"]), int(header["m_max"])
    n_time, h_dim, n_rep = int(header["n_time"]), int(header["h_dim"]), int(header["n_rep"])
    n_points = (2 ** m_max + 1) ** d
    n_values = n_rep * n_time * n_points * h_dim
    expected = HEADER_DTYPE.itemsize + 8 * (n_time + n_values)
    if len(payload) != expected:
        raise ValueError(f"样本文件长度 {len(payload)} 与头部声明的 {expected} 不一致")

    offset = HEADER_DTYPE.itemsize
    time_grid = np.frombuffer(payload, dtype="<f8", count=n_time, offset=offset).astype(float)
    offset += 8 * n_time
    values = np.frombuffer(payload, dtype="<f8", count=n_values, offset=offset).astype(float)
    return FieldSample(
        d=d, m_max=m_max, time_grid=time_grid,
        values=values.reshape(n_rep, n_time, n_points, h_dim),
        norm=NORM_FROM_CODE[int(header["norm"])],
        seed=int(header["seed"]) if int(header["has_seed"]) else None,
    )


def save_field_sample(sample: FieldSample, path: Union[str, Path]) -> Path:
    """
    保存 FieldSample

    Args:
        sample: 场样本
        path: 输出路径

    Returns:
        输出路径
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(encode_field_sample(sample))
        logger.debug(f"场样本已保存: {path}")
        return path
    except Exception as e:
        logger.error(f"❌ 保存场样本失败: {e}")
        raise


def load_field_sample(path: Union[str, Path]) -> FieldSample:
    """读取 FieldSample"""
    try:
        return decode_field_sample(Path(path).read_bytes())
    except Exception as e:
        logger.error(f"❌ 读取场样本失败: {e}")
        raise


def frame_to_csv_bytes(frame: pd.DataFrame) -> bytes:
    """按固定浮点格式和换行符序列化表格，输出字节可复现"""
    text = frame.to_csv(index=False, float_format=OUTPUT_CONFIG["float_format"], lineterminator="\n")
    return text.encode("utf-8")
