"""
异常定义
所有数值检查失败都携带 diagnostics 字典，便于写入报告
"""

from typing import Any, Dict, Optional


class KolmogorovFieldsError(Exception):
    """工具包异常基类"""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class NonFiniteResultError(KolmogorovFieldsError):
    """公式计算得到 NaN 或 ∞"""


class DivisionByZeroError(KolmogorovFieldsError, ZeroDivisionError):
    """分母为零（例如 φ(2^{-n-1}) = 0）"""


class BudgetExceededError(KolmogorovFieldsError):
    """网格或点对数量超出内存预算"""


class NotReachableError(KolmogorovFieldsError):
    """两个二进点之间不满足单层相邻条件"""


class DegenerateFitError(KolmogorovFieldsError):
    """回归拟合退化（所有横坐标相同）"""


class InsufficientReplicationsError(KolmogorovFieldsError):
    """蒙特卡罗复制数不足"""


class QuadratureFailureError(KolmogorovFieldsError):
    """数值积分失败或误差超限"""


class DomainError(KolmogorovFieldsError, ValueError):
    """参数位于公式定义域之外"""


class MassDeficitError(KolmogorovFieldsError):
    """热核质量偏离 1 超过 mass_tol"""


class GridMismatchError(KolmogorovFieldsError):
    """卷积双方网格不一致"""


class ConfigError(KolmogorovFieldsError, ValueError):
    """实验配置校验失败"""
