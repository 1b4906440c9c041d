"""
可复现的随机数工具
每个复制的随机数流由 (主种子, 复制编号) 唯一确定，与分块方式和线程数无关
"""

import numpy as np


def replication_seed_sequence(master_seed: int, index: int) -> np.random.SeedSequence:
    """
    第 index 个复制的种子序列

    Args:
        master_seed: 主种子（u64）
        index: 复制编号

    Returns:
        SeedSequence，spawn_key = (index,)
    """
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(index),))


def replication_rng(master_seed: int, index: int) -> np.random.Generator:
    """
    第 index 个复制的随机数生成器

    Args:
        master_seed: 主种子
        index: 复制编号

    Returns:
        numpy Generator
    """
    return np.random.default_rng(replication_seed_sequence(master_seed, index))


def get_rng(seed) -> np.random.Generator:
    """由整数种子或 SeedSequence 构造生成器"""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def derive_seed(master_seed: int, *labels: int) -> int:
    """
    由主种子和若干整数标签派生一个新的 u64 种子

    Args:
        master_seed: 主种子
        labels: 用于区分用途的整数标签

    Returns:
        派生的整数种子
    """
    sequence = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(x) for x in labels))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])
