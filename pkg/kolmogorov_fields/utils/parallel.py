"""
按复制并行的映射
结果按复制编号排序后返回，归约顺序固定，因而与线程数无关
"""

import logging
from typing import Any, Callable, List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

from ..config import MONTE_CARLO_CONFIG
from .seeding import replication_rng

logger = logging.getLogger(__name__)


def _run_chunk(func: Callable[[int, np.random.Generator], Any], master_seed: int,
               indices: Sequence[int]) -> List[Any]:
    return [func(index, replication_rng(master_seed, index)) for index in indices]


def map_replications(func: Callable[[int, np.random.Generator], Any], n_rep: int, master_seed: int,
                     n_threads: Optional[int] = None, chunk_size: Optional[int] = None,
                     desc: str = "replications") -> List[Any]:
    """
    对每个复制调用 func(index, rng)

    Args:
        func: 纯函数，输入复制编号和该复制专属的生成器
        n_rep: 复制数
        master_seed: 主种子
        n_threads: 线程数（joblib threading 后端）
        chunk_size: 每个任务包含的复制数
        desc: 进度条描述

    Returns:
        按复制编号排列的结果列表
    """
    n_threads = MONTE_CARLO_CONFIG["n_threads"] if n_threads is None else max(1, int(n_threads))
    chunk_size = MONTE_CARLO_CONFIG["chunk_size"] if chunk_size is None else max(1, int(chunk_size))
    chunks = [range(start, min(start + chunk_size, n_rep)) for start in range(0, n_rep, chunk_size)]

    if n_threads == 1:
        results: List[Any] = []
        for chunk in tqdm(chunks, desc=desc, disable=not MONTE_CARLO_CONFIG["show_progress"]):
            results.extend(_run_chunk(func, master_seed, chunk))
        return results

    logger.debug(f"并行计算 {n_rep} 个复制，线程数 {n_threads}，分块 {len(chunks)}")
    chunk_results = Parallel(n_jobs=n_threads, backend="threading")(
        delayed(_run_chunk)(func, master_seed, chunk) for chunk in chunks
    )
    return [item for chunk in chunk_results for item in chunk]
