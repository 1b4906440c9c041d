"""
连续模数
表示并校验连续模数 φ，以及 Kolmogorov 型连续性判据中的全部标量可容许条件：
二进级数收敛性、相邻尺度比值条件、ϑ 取值窗口和迭代对数模数的常数 r0、N0
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.special import zeta

from ..config import MODULUS_CONFIG
from .exceptions import DivisionByZeroError, NonFiniteResultError

logger = logging.getLogger(__name__)

LOG2 = math.log(2.0)
# 2^{-1074} 是最小的正双精度数
MAX_CUSTOM_DYADIC_INDEX = 1074


class ModulusKind(str, Enum):
    POWER = "power"
    LOGPOWER = "logpower"
    LOGLOG = "loglog"
    CUSTOM = "custom"


class TailMode(str, Enum):
    CONSTANT = "constant"
    USER = "user"


class TailMethod(str, Enum):
    RATIO_TEST = "ratio_test"
    INTEGRAL_BOUND = "integral_bound"
    NONE = "none"


class Verdict(str, Enum):
    CONVERGES = "converges"
    DIVERGES = "diverges"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class TailSpec:
    """断点以上的延拓函数（常数延拓或用户函数）"""

    mode: TailMode = TailMode.CONSTANT
    func: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.mode == TailMode.USER and self.func is None:
            raise ValueError("用户尾部模式必须提供 func")


@dataclass(frozen=True)
class ModulusFunction:
    """
    连续模数 φ

    内置模数在 s = -log r 上求值，避免 2^{-i} 在深层级下溢。
    Custom 模数直接在 r 上求值。
    """

    kind: ModulusKind
    epsilon: Optional[float] = None
    beta: Optional[float] = None
    k0: Optional[float] = None
    tail: TailSpec = field(default_factory=TailSpec)
    func: Optional[Callable[[np.ndarray], np.ndarray]] = None
    domain: Tuple[float, float] = (0.0, math.inf)
    name: str = ""

    def __post_init__(self):
        if self.kind == ModulusKind.POWER:
            _require_positive("epsilon", self.epsilon)
        elif self.kind == ModulusKind.LOGPOWER:
            _require_positive("beta", self.beta)
        elif self.kind == ModulusKind.LOGLOG:
            _require_positive("beta", self.beta)
            _require_positive("k0", self.k0)
        elif self.kind == ModulusKind.CUSTOM:
            if self.func is None:
                raise ValueError("Custom 模数必须提供 func")

    @classmethod
    def power(cls, epsilon: float) -> "ModulusFunction":
        return cls(kind=ModulusKind.POWER, epsilon=float(epsilon), name=f"power({epsilon})")

    @classmethod
    def logpower(cls, beta: float, tail: Optional[TailSpec] = None) -> "ModulusFunction":
        return cls(kind=ModulusKind.LOGPOWER, beta=float(beta), tail=tail or TailSpec(),
                   name=f"logpower({beta})")

    @classmethod
    def loglog(cls, beta: float, k0: float, tail: Optional[TailSpec] = None) -> "ModulusFunction":
        return cls(kind=ModulusKind.LOGLOG, beta=float(beta), k0=float(k0), tail=tail or TailSpec(),
                   name=f"loglog({beta},{k0})")

    @classmethod
    def custom(cls, func: Callable[[np.ndarray], np.ndarray],
               domain: Tuple[float, float] = (0.0, math.inf), name: str = "custom") -> "ModulusFunction":
        return cls(kind=ModulusKind.CUSTOM, func=func, domain=domain, name=name)

    @property
    def breakpoint(self) -> float:
        if self.kind == ModulusKind.LOGPOWER:
            return 0.5
        if self.kind == ModulusKind.LOGLOG:
            return loglog_constants(self.beta, self.k0)[0]
        return math.inf

    @property
    def breakpoint_neglog(self) -> float:
        """断点对应的 -log r"""
        if self.kind == ModulusKind.LOGPOWER:
            return LOG2
        if self.kind == ModulusKind.LOGLOG:
            return math.exp(1.0 / self.beta) / self.k0
        return -math.inf

    def __call__(self, r):
        return eval_modulus(self, r)

    def to_dict(self) -> Dict[str, Any]:
        return modulus_to_dict(self)


def _require_positive(name: str, value: Optional[float]):
    if value is None or not np.isfinite(value) or value <= 0:
        raise ValueError(f"参数 {name} 必须为正实数: {value}")


def _core_neglog(phi: ModulusFunction, s: np.ndarray) -> np.ndarray:
    """断点以下的解析公式，自变量 s = -log r"""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if phi.kind == ModulusKind.POWER:
            return np.exp(-phi.epsilon * s)
        if phi.kind == ModulusKind.LOGPOWER:
            return np.power(s, -phi.beta)
        return np.log(phi.k0 * s) / np.power(s, phi.beta)


def _evaluate_neglog(phi: ModulusFunction, s: np.ndarray) -> np.ndarray:
    """在 s = -log r 上对内置模数求值（含尾部延拓）"""
    s = np.asarray(s, dtype=float)
    if phi.kind == ModulusKind.POWER:
        return _core_neglog(phi, s)

    s_break = phi.breakpoint_neglog
    below = s >= s_break
    values = np.empty_like(s)
    values[below] = _core_neglog(phi, s[below])
    above = ~below
    if np.any(above):
        if phi.tail.mode == TailMode.CONSTANT:
            values[above] = _core_neglog(phi, np.asarray([s_break]))[0]
        else:
            values[above] = np.asarray(phi.tail.func(np.exp(-s[above])), dtype=float)
    return values


def eval_modulus(phi: ModulusFunction, r):
    """
    计算 φ(r)

    Args:
        phi: 连续模数
        r: 正实数或正实数数组

    Returns:
        与 r 同形状的 φ(r)；标量输入返回 float
    """
    r_arr = np.asarray(r, dtype=float)
    if np.any(~(r_arr > 0)):
        raise ValueError(f"r 必须为正数: {r}")

    if phi.kind == ModulusKind.CUSTOM:
        lo, hi = phi.domain
        if np.any(r_arr <= lo) or np.any(r_arr > hi):
            raise ValueError(f"r 超出 Custom 模数定义域 {phi.domain}")
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            values = np.array(np.broadcast_to(phi.func(r_arr), r_arr.shape), dtype=float)
    else:
        values = _evaluate_neglog(phi, -np.log(np.atleast_1d(r_arr))).reshape(r_arr.shape)

    if not np.all(np.isfinite(values)):
        bad = r_arr.reshape(-1)[np.flatnonzero(~np.isfinite(values))[0]]
        raise NonFiniteResultError(f"φ({bad}) 不是有限值", {"r": float(bad), "kind": phi.kind.value})

    if values.ndim == 0:
        return float(values)
    return values


def modulus_at_dyadic(phi: ModulusFunction, levels) -> np.ndarray:
    """
    计算 φ(2^{-i})

    Args:
        phi: 连续模数
        levels: 非负整数数组 i

    Returns:
        φ(2^{-i}) 数组
    """
    levels = np.asarray(levels, dtype=np.int64)
    if phi.kind == ModulusKind.CUSTOM:
        if np.any(levels > MAX_CUSTOM_DYADIC_INDEX):
            raise ValueError(f"Custom 模数只能在 i ≤ {MAX_CUSTOM_DYADIC_INDEX} 上求值")
        return np.asarray(eval_modulus(phi, np.ldexp(1.0, -levels)), dtype=float)

    values = _evaluate_neglog(phi, levels.astype(float) * LOG2)
    if not np.all(np.isfinite(values)):
        bad = int(levels.reshape(-1)[np.flatnonzero(~np.isfinite(values))[0]])
        raise NonFiniteResultError(f"φ(2^-{bad}) 不是有限值", {"level": bad})
    return values


# ==================== 公理检查 ====================

@dataclass
class AxiomReport:
    passed: bool
    nonnegative: bool
    monotone: bool
    vanishing_limit: bool
    tail_continuous: bool
    limit_value: float
    first_violation_radius: Optional[float] = None
    violation: Optional[str] = None
    r_min: float = 0.0
    r_max: float = 0.0
    n_probe: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "nonnegative": self.nonnegative,
            "monotone": self.monotone,
            "vanishing_limit": self.vanishing_limit,
            "tail_continuous": self.tail_continuous,
            "limit_value": self.limit_value,
            "first_violation_radius": self.first_violation_radius,
            "violation": self.violation,
            "r_min": self.r_min,
            "r_max": self.r_max,
            "n_probe": self.n_probe,
        }


def _tail_is_continuous(phi: ModulusFunction, rel_tol: float = 1e-9) -> bool:
    if phi.kind not in (ModulusKind.LOGPOWER, ModulusKind.LOGLOG) or phi.tail.mode == TailMode.CONSTANT:
        return True
    s_break = phi.breakpoint_neglog
    core = float(_core_neglog(phi, np.asarray([s_break]))[0])
    tail = float(np.asarray(phi.tail.func(np.asarray([math.exp(-s_break)])), dtype=float)[0])
    return abs(tail - core) <= rel_tol * max(1.0, abs(core))


def check_modulus_axioms(phi: ModulusFunction, r_min: Optional[float] = None,
                         r_max: Optional[float] = None, n_probe: Optional[int] = None) -> AxiomReport:
    """
    在对数等距探测网格上检查非负性、单调性和零点极限

    失败以报告形式返回，不抛出异常。

    Args:
        phi: 连续模数
        r_min: 探测下界
        r_max: 探测上界
        n_probe: 探测点数

    Returns:
        AxiomReport
    """
    r_min = MODULUS_CONFIG["r_min"] if r_min is None else float(r_min)
    r_max = MODULUS_CONFIG["r_max"] if r_max is None else float(r_max)
    n_probe = MODULUS_CONFIG["n_probe"] if n_probe is None else int(n_probe)
    if not (0 < r_min < r_max) or n_probe < 2:
        raise ValueError(f"探测区间无效: r_min={r_min}, r_max={r_max}, n_probe={n_probe}")

    tol_mono = MODULUS_CONFIG["tol_mono"]
    tol_limit = MODULUS_CONFIG["tol_limit"]
    radii = np.geomspace(r_min, r_max, n_probe)
    tail_ok = _tail_is_continuous(phi)

    try:
        values = np.asarray(eval_modulus(phi, radii), dtype=float)
    except NonFiniteResultError as e:
        return AxiomReport(passed=False, nonnegative=False, monotone=False, vanishing_limit=False,
                           tail_continuous=tail_ok, limit_value=math.nan,
                           first_violation_radius=e.diagnostics.get("r"), violation="non_finite",
                           r_min=r_min, r_max=r_max, n_probe=n_probe)

    negative = np.flatnonzero(values < 0)
    decreasing = np.flatnonzero(values[:-1] > values[1:] + tol_mono)

    if phi.kind == ModulusKind.CUSTOM:
        r_lim = max(min(r_min, MODULUS_CONFIG["limit_probe_radius"]), np.nextafter(phi.domain[0], 1.0))
        limit_value = float(eval_modulus(phi, r_lim))
    else:
        # 内置模数的极限在 -log r 上取到极深处
        limit_value = float(_evaluate_neglog(phi, np.asarray([1.0 / MODULUS_CONFIG["limit_probe_radius"]]))[0])

    report = AxiomReport(
        passed=True,
        nonnegative=negative.size == 0,
        monotone=decreasing.size == 0,
        vanishing_limit=0.0 <= limit_value < tol_limit,
        tail_continuous=tail_ok,
        limit_value=limit_value,
        r_min=r_min,
        r_max=r_max,
        n_probe=n_probe,
    )

    if negative.size:
        report.first_violation_radius = float(radii[negative[0]])
        report.violation = "negative"
    elif decreasing.size:
        report.first_violation_radius = float(radii[decreasing[0] + 1])
        report.violation = "not_monotone"
    elif not report.vanishing_limit:
        report.violation = "nonvanishing_limit"
    elif not tail_ok:
        report.first_violation_radius = phi.breakpoint
        report.violation = "tail_discontinuous"

    report.passed = report.violation is None
    return report


# ==================== 二进级数 ====================

@dataclass
class DyadicSumResult:
    partial_sum: float
    verdict: Verdict
    tail_method: TailMethod
    tail_bound: Optional[float]
    exponent: float
    i_max: int
    certificate: str = ""

    @property
    def converges(self) -> Verdict:
        return self.verdict

    @property
    def estimated_total(self) -> Optional[float]:
        if self.verdict != Verdict.CONVERGES or self.tail_bound is None:
            return None
        return self.partial_sum + self.tail_bound

    @property
    def tail_negligible(self) -> bool:
        return self.tail_bound is not None and self.tail_bound <= MODULUS_CONFIG["tail_tol"]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "partial_sum": self.partial_sum,
            "verdict": self.verdict.value,
            "tail_method": self.tail_method.value,
            "tail_bound": self.tail_bound,
            "estimated_total": self.estimated_total,
            "tail_negligible": self.tail_negligible,
            "exponent": self.exponent,
            "i_max": self.i_max,
            "certificate": self.certificate,
        }


def _ratio_test_tail(terms: np.ndarray) -> Tuple[Verdict, Optional[float], str]:
    window = terms[len(terms) // 2:]
    if window.size < 2:
        return Verdict.INCONCLUSIVE, None, "窗口过短"
    if np.all(window == 0):
        # φ 单调，某项为零则之后均为零
        return Verdict.CONVERGES, 0.0, "尾部项全为零"
    if np.any(window == 0):
        return Verdict.INCONCLUSIVE, None, "尾部存在零项"

    ratios = window[1:] / window[:-1]
    q = float(np.max(ratios))
    if q <= MODULUS_CONFIG["ratio_q_max"]:
        return Verdict.CONVERGES, float(terms[-1] * q / (1.0 - q)), f"比值上界 q={q:.6g}"
    if float(np.min(ratios)) >= 1.0:
        return Verdict.DIVERGES, math.inf, "项不趋于零"
    return Verdict.INCONCLUSIVE, None, f"比值趋于 1 (q={q:.6g})"


def _envelope_tail(terms: np.ndarray) -> Tuple[Verdict, Optional[float], str]:
    """用 [i_max/2, i_max] 上拟合的幂律包络给出尾项上界"""
    i_max = len(terms) - 1
    half = max(1, i_max // 2)
    a_half, a_last = float(terms[half]), float(terms[i_max])
    if a_last == 0.0:
        return Verdict.CONVERGES, 0.0, "尾部项为零"
    if half == i_max or a_half == 0.0:
        return Verdict.INCONCLUSIVE, None, "包络拟合区间退化"

    p_hat = math.log(a_half / a_last) / math.log(i_max / half)
    if p_hat > 1.0 + MODULUS_CONFIG["power_margin"]:
        return Verdict.CONVERGES, a_last * i_max / (p_hat - 1.0), f"幂律包络 p={p_hat:.6g}"
    if p_hat <= 1.0 + 1e-9:
        return Verdict.DIVERGES, math.inf, f"与调和级数比较 p={p_hat:.6g}"
    return Verdict.INCONCLUSIVE, None, f"包络指数过于接近 1 (p={p_hat:.6g})"


def _integral_bound_tail(phi: ModulusFunction, exponent: float,
                         terms: np.ndarray) -> Tuple[Verdict, Optional[float], str]:
    i_max = len(terms) - 1
    if phi.kind == ModulusKind.POWER:
        q = 2.0 ** (-phi.epsilon * exponent)
        return Verdict.CONVERGES, float(terms[-1] * q / (1.0 - q)), "几何级数尾项"

    if phi.kind == ModulusKind.LOGPOWER:
        # i ≥ 1 时 2^{-i} ≤ 1/2，项为 (i·log 2)^{-p}
        p = phi.beta * exponent
        if p <= 1.0:
            return Verdict.DIVERGES, math.inf, f"p={p:.6g} ≤ 1，与调和级数比较"
        return Verdict.CONVERGES, float(LOG2 ** (-p) * zeta(p, i_max + 1)), f"Hurwitz zeta 尾项 p={p:.6g}"

    if phi.kind == ModulusKind.LOGLOG:
        p = phi.beta * exponent
        n0 = loglog_constants(phi.beta, phi.k0)[1]
        if p <= 1.0 and i_max >= n0:
            return Verdict.DIVERGES, math.inf, f"p={p:.6g} ≤ 1，项不小于调和级数"
        if i_max < 2 * n0:
            return Verdict.INCONCLUSIVE, None, "截断项数未进入公式区间"

    return _envelope_tail(terms)


def dyadic_sum(phi: ModulusFunction, exponent: float, i_max: Optional[int] = None,
               tail_method: Union[TailMethod, str, None] = None) -> DyadicSumResult:
    """
    计算 Σ_{i=0}^{i_max} φ^{exponent}(2^{-i}) 并给出收敛判定

    Args:
        phi: 连续模数
        exponent: 指数（γ≥1 时取 ϑ，γ<1 时取 γϑ）
        i_max: 截断项数
        tail_method: 尾项判定方法

    Returns:
        DyadicSumResult
    """
    if not exponent > 0:
        raise ValueError(f"exponent 必须为正数: {exponent}")
    i_max = MODULUS_CONFIG["i_max"] if i_max is None else int(i_max)
    if i_max < 1:
        raise ValueError(f"i_max 必须 ≥ 1: {i_max}")
    tail_method = TailMethod(tail_method or MODULUS_CONFIG["tail_method"])

    if phi.kind == ModulusKind.CUSTOM and i_max > MAX_CUSTOM_DYADIC_INDEX:
        logger.warning(f"Custom 模数的截断项数 {i_max} 超过双精度下限，改为 {MAX_CUSTOM_DYADIC_INDEX}")
        i_max = MAX_CUSTOM_DYADIC_INDEX

    terms = np.power(modulus_at_dyadic(phi, np.arange(i_max + 1)), exponent)
    if not np.all(np.isfinite(terms)):
        bad = int(np.flatnonzero(~np.isfinite(terms))[0])
        raise NonFiniteResultError(f"第 {bad} 项不是有限值", {"level": bad})

    partial = float(np.sum(terms))

    if tail_method == TailMethod.NONE:
        verdict, tail, note = Verdict.INCONCLUSIVE, None, "未指定尾项方法"
    elif tail_method == TailMethod.RATIO_TEST:
        verdict, tail, note = _ratio_test_tail(terms)
    else:
        verdict, tail, note = _integral_bound_tail(phi, exponent, terms)

    logger.debug(f"二进级数 {phi.name}: 部分和={partial:.12g}, 判定={verdict.value} ({note})")
    return DyadicSumResult(partial_sum=partial, verdict=verdict, tail_method=tail_method,
                           tail_bound=tail, exponent=float(exponent), i_max=i_max, certificate=note)


# ==================== 比值条件 ====================

@dataclass
class RatioReport:
    lambda_estimate: float
    holds: bool
    ratios: List[float]
    n_min: int
    n_max: int
    bound: Optional[float]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambda_estimate": self.lambda_estimate,
            "holds": self.holds,
            "n_min": self.n_min,
            "n_max": self.n_max,
            "bound": self.bound,
            "ratios": self.ratios,
        }


def theoretical_lambda(phi: ModulusFunction) -> Optional[float]:
    """
    内置模数的理论比值常数 λ

    Returns:
        λ；Custom 模数返回 None
    """
    if phi.kind == ModulusKind.POWER:
        return 2.0 ** phi.epsilon
    if phi.kind == ModulusKind.LOGPOWER:
        return 2.0 ** phi.beta
    if phi.kind == ModulusKind.LOGLOG:
        n_break = phi.breakpoint_neglog / LOG2
        # k0·n_break·log 2 = e^{1/β}，分母恒为 1/β
        log_ratio = math.log(phi.k0 * (n_break + 1.0) * LOG2) * phi.beta
        return max(2.0 ** phi.beta, log_ratio)
    return None


def ratio_condition(phi: ModulusFunction, n_min: Optional[int] = None, n_max: Optional[int] = None,
                    bound: Optional[float] = None) -> RatioReport:
    """
    检查相邻二进尺度的比值 φ(2^{-n})/φ(2^{-n-1})

    Args:
        phi: 连续模数
        n_min: 探测起点，LogLog 默认从 ⌈log2(1/r0)⌉ 开始
        n_max: 探测终点
        bound: 用户给定的上界 Λ，默认使用理论 λ

    Returns:
        RatioReport
    """
    if n_min is None:
        n_min = MODULUS_CONFIG["ratio_n_min"]
        if phi.kind == ModulusKind.LOGLOG:
            n_min = max(1, loglog_constants(phi.beta, phi.k0)[1])
    if n_max is None:
        n_max = max(MODULUS_CONFIG["ratio_n_max"], n_min + 1)
    n_min, n_max = int(n_min), int(n_max)
    if n_min < 1 or n_max <= n_min:
        raise ValueError(f"探测区间无效: n_min={n_min}, n_max={n_max}")

    levels = np.arange(n_min, n_max + 2)
    values = modulus_at_dyadic(phi, levels)
    numerators, denominators = values[:-1], values[1:]
    zero = np.flatnonzero(denominators == 0)
    if zero.size:
        n_bad = int(levels[zero[0]])
        raise DivisionByZeroError(f"φ(2^-{n_bad + 1}) = 0", {"n": n_bad})

    ratios = numerators / denominators
    with np.errstate(divide="ignore"):
        lambda_estimate = float(max(np.max(ratios), np.max(1.0 / ratios)))

    if bound is None:
        bound = theoretical_lambda(phi)
    if bound is None:
        holds = bool(np.isfinite(lambda_estimate))
    else:
        scaled = bound * (1.0 + 1e-12)
        holds = bool(np.all(ratios <= scaled) and np.all(ratios * scaled >= 1.0))

    return RatioReport(lambda_estimate=lambda_estimate, holds=holds, ratios=ratios.tolist(),
                       n_min=n_min, n_max=n_max, bound=bound)


# ==================== ϑ 窗口与常数 ====================

@dataclass(frozen=True)
class ThetaWindow:
    lower: float
    upper: float
    beta_condition: bool

    @property
    def empty(self) -> bool:
        return self.lower >= self.upper

    def contains(self, theta: float) -> bool:
        return not self.empty and self.lower < theta < self.upper

    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "empty": self.empty,
            "beta_condition": self.beta_condition,
        }


def theta_window(phi_kind: Union[ModulusFunction, ModulusKind, str], gamma: float,
                 beta: Optional[float] = None) -> ThetaWindow:
    """
    ϑ 的可容许区间

    Args:
        phi_kind: 模数或模数种类
        gamma: 矩指数 γ
        beta: 对数型模数的 β（传入 ModulusFunction 时自动读取）

    Returns:
        ThetaWindow，lower ≥ upper 时为空
    """
    if not gamma > 0:
        raise ValueError(f"gamma 必须为正数: {gamma}")
    if isinstance(phi_kind, ModulusFunction):
        beta = phi_kind.beta if beta is None else beta
        kind = phi_kind.kind
    else:
        kind = ModulusKind(phi_kind)

    upper = 1.0 / gamma
    if kind == ModulusKind.POWER:
        return ThetaWindow(lower=0.0, upper=upper, beta_condition=True)
    if kind == ModulusKind.CUSTOM:
        raise ValueError("Custom 模数没有解析的 ϑ 窗口")
    _require_positive("beta", beta)

    if gamma >= 1:
        return ThetaWindow(lower=1.0 / beta, upper=upper, beta_condition=beta > gamma)
    return ThetaWindow(lower=1.0 / (beta * gamma), upper=upper, beta_condition=beta > 1.0 / gamma)


def loglog_constants(beta: float, k0: float) -> Tuple[float, int]:
    """
    迭代对数模数的断点 r0 与整数 N0

    Args:
        beta: β > 0
        k0: k0 > 0

    Returns:
        (r0, N0)，满足 2^{-N0} ≤ r0 < 2^{-N0+1}
    """
    _require_positive("beta", beta)
    _require_positive("k0", k0)
    neglog_r0 = math.exp(1.0 / beta) / k0
    r0 = math.exp(-neglog_r0)
    n0 = max(1, math.ceil(neglog_r0 / LOG2))
    if r0 > 0.0:
        # 对浮点舍入做精确修正
        while math.ldexp(1.0, -n0) > r0:
            n0 += 1
        while n0 > 1 and r0 >= math.ldexp(1.0, -n0 + 1):
            n0 -= 1
    return r0, n0


# ==================== 可容许性报告 ====================

@dataclass
class AdmissibilityReport:
    gamma: float
    theta: float
    sum_exponent: float
    sum_value: float
    sum_converges: Verdict
    tail_method: TailMethod
    partial_sum: float
    tail_bound: Optional[float]
    lambda_estimate: float
    lambda_bound: Optional[float]
    ratio_holds: bool
    theta_window: Optional[ThetaWindow]
    theta_in_window: Optional[bool]
    axioms: AxiomReport
    modulus: Dict[str, Any] = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        if (not self.axioms.passed or self.sum_converges == Verdict.DIVERGES or not self.ratio_holds
                or self.theta_in_window is False):
            return "fail"
        if self.sum_converges == Verdict.INCONCLUSIVE:
            return "inconclusive"
        return "pass"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "modulus": self.modulus,
            "gamma": self.gamma,
            "theta": self.theta,
            "sum_exponent": self.sum_exponent,
            "sum_value": self.sum_value,
            "sum_converges": self.sum_converges.value,
            "tail_method": self.tail_method.value,
            "partial_sum": self.partial_sum,
            "tail_bound": self.tail_bound,
            "lambda_estimate": self.lambda_estimate,
            "lambda_bound": self.lambda_bound,
            "ratio_holds": self.ratio_holds,
            "theta_window": self.theta_window.to_dict() if self.theta_window else None,
            "theta_in_window": self.theta_in_window,
            "axioms": self.axioms.to_dict(),
            "verdict": self.verdict,
        }


def check_admissibility(phi: ModulusFunction, gamma: float, theta: Optional[float] = None,
                        i_max: Optional[int] = None, tail_method: Union[TailMethod, str, None] = None,
                        n_min: Optional[int] = None, n_max: Optional[int] = None,
                        lambda_bound: Optional[float] = None, r_min: Optional[float] = None,
                        r_max: Optional[float] = None, n_probe: Optional[int] = None) -> AdmissibilityReport:
    """
    汇总一个模数在给定 γ、ϑ 下的全部可容许条件

    Args:
        phi: 连续模数
        gamma: 矩指数 γ
        theta: 常数 ϑ，默认取窗口中点（无窗口时取 1/(2γ)）

    Returns:
        AdmissibilityReport
    """
    if not gamma > 0:
        raise ValueError(f"gamma 必须为正数: {gamma}")

    window = None if phi.kind == ModulusKind.CUSTOM else theta_window(phi, gamma)
    if theta is None:
        theta = window.midpoint() if window is not None and not window.empty else 0.5 / gamma
    theta = float(theta)
    if not 0 < theta < 1.0 / gamma:
        raise ValueError(f"theta 必须位于 (0, 1/gamma): theta={theta}, gamma={gamma}")

    axioms = check_modulus_axioms(phi, r_min=r_min, r_max=r_max, n_probe=n_probe)
    exponent = theta if gamma >= 1 else gamma * theta
    series = dyadic_sum(phi, exponent, i_max=i_max, tail_method=tail_method)
    ratio = ratio_condition(phi, n_min=n_min, n_max=n_max, bound=lambda_bound)

    if series.verdict == Verdict.DIVERGES:
        sum_value = math.inf
    else:
        sum_value = series.estimated_total if series.estimated_total is not None else series.partial_sum

    modulus_info: Dict[str, Any] = {"kind": phi.kind.value, "name": phi.name}
    if phi.kind != ModulusKind.CUSTOM:
        modulus_info = modulus_to_dict(phi)

    return AdmissibilityReport(
        gamma=float(gamma),
        theta=theta,
        sum_exponent=exponent,
        sum_value=sum_value,
        sum_converges=series.verdict,
        tail_method=series.tail_method,
        partial_sum=series.partial_sum,
        tail_bound=series.tail_bound,
        lambda_estimate=ratio.lambda_estimate,
        lambda_bound=ratio.bound,
        ratio_holds=ratio.holds,
        theta_window=window,
        theta_in_window=None if window is None else window.contains(theta),
        axioms=axioms,
        modulus=modulus_info,
    )


# ==================== JSON 序列化 ====================

def modulus_to_dict(phi: ModulusFunction) -> Dict[str, Any]:
    """模数转为 JSON 对象，仅支持内置模数与常数尾部"""
    if phi.kind == ModulusKind.CUSTOM or phi.tail.mode != TailMode.CONSTANT:
        raise ValueError("只有常数尾部的内置模数可以序列化")
    if phi.kind == ModulusKind.POWER:
        return {"kind": "power", "epsilon": phi.epsilon}
    if phi.kind == ModulusKind.LOGPOWER:
        return {"kind": "logpower", "beta": phi.beta, "tail": "constant"}
    return {"kind": "loglog", "beta": phi.beta, "k0": phi.k0, "tail": "constant"}


def modulus_from_dict(data: Dict[str, Any]) -> ModulusFunction:
    """由 JSON 对象构造模数"""
    kind = ModulusKind(data["kind"])
    if data.get("tail", "constant") != "constant":
        raise ValueError(f"不支持的尾部类型: {data.get('tail')}")
    if kind == ModulusKind.POWER:
        return ModulusFunction.power(data["epsilon"])
    if kind == ModulusKind.LOGPOWER:
        return ModulusFunction.logpower(data["beta"])
    if kind == ModulusKind.LOGLOG:
        return ModulusFunction.loglog(data["beta"], data["k0"])
    raise ValueError("Custom 模数无法从 JSON 构造")
