"""
蒙特卡罗统计工具
均值与标准误、双对数回归、批次比值稳定性
求和统一使用 numpy 的成对求和（连续数组上的 np.sum / np.mean）
"""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from ..config import MONTE_CARLO_CONFIG
from ..core.exceptions import DegenerateFitError, InsufficientReplicationsError


def mean_and_stderr(samples) -> Tuple[float, float]:
    """
    样本均值及其标准误

    Args:
        samples: 一维样本

    Returns:
        (均值, 标准误)
    """
    samples = np.ascontiguousarray(samples, dtype=float).reshape(-1)
    if samples.size < 2:
        raise InsufficientReplicationsError(f"至少需要 2 个样本，实际 {samples.size}", {"n": int(samples.size)})
    return float(np.mean(samples)), float(np.std(samples, ddof=1) / np.sqrt(samples.size))


@dataclass
class LogLogFit:
    slope: float
    intercept: float
    n_points: int

    @property
    def constant(self) -> float:
        return float(np.exp(self.intercept))


def loglog_fit(x, y) -> LogLogFit:
    """
    最小二乘拟合 log y = intercept + slope·log x

    非正或非有限的点被剔除。

    Args:
        x: 横坐标
        y: 纵坐标

    Returns:
        LogLogFit
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    keep = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    x, y = x[keep], y[keep]
    if x.size < 2 or np.ptp(np.log(x)) == 0.0:
        raise DegenerateFitError("回归横坐标退化，无法拟合斜率", {"n_points": int(x.size)})
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    return LogLogFit(slope=float(slope), intercept=float(intercept), n_points=int(x.size))


def nested_batch_sizes(n_rep: int, batch_sizes: Optional[Iterable[int]] = None) -> List[int]:
    """
    嵌套批次大小（前缀批次），最后一个批次总是 n_rep

    Args:
        n_rep: 总复制数
        batch_sizes: 指定的批次大小

    Returns:
        升序批次列表
    """
    if batch_sizes is None:
        batch_sizes = [n_rep // 100, n_rep // 10, n_rep]
    sizes = sorted({int(b) for b in batch_sizes if MONTE_CARLO_CONFIG["min_batch_size"] <= int(b) <= n_rep})
    if not sizes or sizes[-1] != n_rep:
        sizes.append(int(n_rep))
    return sizes


def safe_ratio(numerator: float, denominator: float) -> float:
    """0/0 记为 0，x/0 记为 ∞"""
    if denominator == 0.0:
        return 0.0 if numerator == 0.0 else float("inf")
    return float(numerator / denominator)


def batch_ratios(lhs_samples, rhs_value: float, sizes: List[int]) -> Dict[int, float]:
    """
    各前缀批次的 LHS 均值与 RHS 之比

    Args:
        lhs_samples: 按复制编号排列的 LHS 样本
        rhs_value: 确定性的 RHS
        sizes: 批次大小

    Returns:
        {批次大小: 比值}
    """
    lhs_samples = np.ascontiguousarray(lhs_samples, dtype=float)
    return {int(size): safe_ratio(float(np.mean(lhs_samples[:size])), rhs_value) for size in sizes}


def ratio_drift(ratios: Dict[int, float]) -> float:
    """相对最大批次比值的最大相对偏差"""
    reference = ratios[max(ratios)]
    values = np.asarray(list(ratios.values()), dtype=float)
    if reference == 0.0:
        return 0.0 if np.all(values == 0.0) else float("inf")
    return float(np.max(np.abs(values - reference)) / abs(reference))
