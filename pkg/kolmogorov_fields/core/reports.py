"""
不等式报告
用于常数只在存在意义下给出的矩不等式：报告 LHS/RHS 比值及其在嵌套批次间的稳定性，
而不是对某个固定常数给出通过/失败
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from ..config import MONTE_CARLO_CONFIG
from ..utils.statistics import batch_ratios, mean_and_stderr, nested_batch_sizes, ratio_drift, safe_ratio


@dataclass
class InequalityReport:
    name: str
    lhs_estimate: float
    lhs_std_error: float
    rhs_components: Dict[str, float]
    ratio: float
    batch_ratios: Dict[int, float]
    drift: float
    consistent: bool
    n_rep: int
    seed: Optional[int]
    notes: List[str] = field(default_factory=list)
    extra: Dict[str, Any] = field(default_factory=dict)

    @property
    def rhs_total(self) -> float:
        return float(sum(self.rhs_components.values()))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "lhs_estimate": self.lhs_estimate,
            "lhs_std_error": self.lhs_std_error,
            "rhs_components": dict(self.rhs_components),
            "ratio": self.ratio,
            "batch_ratios": {str(size): value for size, value in self.batch_ratios.items()},
            "drift": self.drift,
            "consistent": self.consistent,
            "n_rep": self.n_rep,
            "seed": self.seed,
            "notes": list(self.notes),
            **self.extra,
        }


def build_inequality_report(name: str, lhs_samples, rhs_components: Dict[str, float], seed: Optional[int],
                            batch_sizes: Optional[List[int]] = None, stability_tol: Optional[float] = None,
                            notes: Optional[List[str]] = None, extra: Optional[Dict[str, Any]] = None
                            ) -> InequalityReport:
    """
    由逐复制的 LHS 样本和确定性的 RHS 分量组装报告

    Args:
        name: 报告名
        lhs_samples: 按复制编号排列的 LHS 样本
        rhs_components: RHS 分量
        seed: 主种子
        batch_sizes: 嵌套批次大小
        stability_tol: 漂移容差，缺省为 MONTE_CARLO_CONFIG["stability_tol"]
        notes: 附加说明
        extra: 附加字段

    Returns:
        InequalityReport；RHS 为零时 0/0 记为 0
    """
    lhs_samples = np.ascontiguousarray(lhs_samples, dtype=float).reshape(-1)
    stability_tol = MONTE_CARLO_CONFIG["stability_tol"] if stability_tol is None else float(stability_tol)
    lhs_mean, lhs_se = mean_and_stderr(lhs_samples)
    rhs_total = float(sum(rhs_components.values()))

    sizes = nested_batch_sizes(lhs_samples.size, batch_sizes)
    ratios = batch_ratios(lhs_samples, rhs_total, sizes)
    drift = ratio_drift(ratios)
    ratio = safe_ratio(lhs_mean, rhs_total)

    return InequalityReport(
        name=name,
        lhs_estimate=lhs_mean,
        lhs_std_error=lhs_se,
        rhs_components={key: float(value) for key, value in rhs_components.items()},
        ratio=ratio,
        batch_ratios=ratios,
        drift=drift,
        consistent=bool(np.isfinite(ratio) and drift < stability_tol),
        n_rep=int(lhs_samples.size),
        seed=seed,
        notes=list(notes or []),
        extra=dict(extra or {}),
    )
