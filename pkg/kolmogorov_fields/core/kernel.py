"""
分数阶热核
∂_t u = Δ^{α/2} u 的热核 K(t,x)，谱定义为 K̂(t,ξ) = e^{-t|ξ|^α}

约定：Δ^{α/2} = −(−Δ)^{α/2}，傅里叶符号为 −|ξ|^α。
全空间热核在边长 L 的周期网格上近似，网格坐标 x_k = −L/2 + k·L/n，x=0 位于下标 n/2。
"""

import logging
import math
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import special

from ..config import KERNEL_CONFIG
from .exceptions import BudgetExceededError, DomainError, GridMismatchError, MassDeficitError, QuadratureFailureError

logger = logging.getLogger(__name__)


class KernelMethod(str, Enum):
    CLOSED_FORM = "closed_form"
    SPECTRAL = "spectral"


# ==================== 分数阶拉普拉斯 ====================

def frac_laplacian_constant(d: int, alpha: float) -> float:
    """
    c(d,α) = α·2^{α−1}·π^{−d/2}·Γ((d+α)/2)/Γ((2−α)/2)

    Args:
        d: 维数
        alpha: 指数，0 < α < 2

    Returns:
        常数 c(d,α)
    """
    if d < 1:
        raise ValueError(f"维数 d 必须 ≥ 1: {d}")
    if not 0 < alpha < 2:
        raise DomainError(f"alpha 必须位于 (0,2): {alpha}", {"alpha": alpha})
    return float(alpha * 2.0 ** (alpha - 1.0) * math.pi ** (-d / 2.0)
                 * special.gamma((d + alpha) / 2.0) / special.gamma((2.0 - alpha) / 2.0))


@dataclass(frozen=True)
class PVQuadSpec:
    """主值积分求积：|z|<δ 对称二阶差分，δ≤|z|≤R 对数复合 Gauss-Legendre，R 以外解析尾项"""

    delta: float = KERNEL_CONFIG["pv_delta"]
    cutoff: float = KERNEL_CONFIG["pv_cutoff"]
    nodes: int = KERNEL_CONFIG["pv_nodes"]
    panels: int = KERNEL_CONFIG["pv_panels"]
    angular_nodes: int = 32
    tol: float = KERNEL_CONFIG["pv_tol"]

    def halved(self) -> "PVQuadSpec":
        return PVQuadSpec(delta=self.delta, cutoff=self.cutoff, nodes=max(2, self.nodes // 2),
                          panels=max(1, self.panels // 2), angular_nodes=max(2, self.angular_nodes // 2),
                          tol=self.tol)


@dataclass
class PrincipalValue:
    value: float
    error_estimate: float

    def __float__(self) -> float:
        return self.value


def _sphere_rule(d: int, n_angular: int) -> Tuple[np.ndarray, np.ndarray]:
    """单位球面上的求积，权重和为 |S^{d-1}|"""
    if d == 1:
        return np.array([[1.0], [-1.0]]), np.ones(2)
    if d == 2:
        theta = 2.0 * np.pi * (np.arange(n_angular) + 0.5) / n_angular
        return np.stack([np.cos(theta), np.sin(theta)], axis=1), np.full(n_angular, 2.0 * np.pi / n_angular)
    if d == 3:
        cos_polar, w_polar = np.polynomial.legendre.leggauss(n_angular)
        azimuth = 2.0 * np.pi * (np.arange(n_angular) + 0.5) / n_angular
        sin_polar = np.sqrt(1.0 - cos_polar ** 2)
        directions = np.stack([
            np.outer(sin_polar, np.cos(azimuth)).reshape(-1),
            np.outer(sin_polar, np.sin(azimuth)).reshape(-1),
            np.repeat(cos_polar, n_angular),
        ], axis=1)
        weights = np.repeat(w_polar, n_angular) * (2.0 * np.pi / n_angular)
        return directions, weights
    raise ValueError(f"主值积分只支持 d ≤ 3: {d}")


def _pv_integral(phi: Callable[[np.ndarray], np.ndarray], x: np.ndarray, alpha: float, quad: PVQuadSpec) -> float:
    """∫_0^∞ A(ρ) ρ^{-1-α} dρ，A(ρ) = ½∫_S (2φ(x) − φ(x+ρω) − φ(x−ρω)) dω"""
    d = x.size
    directions, angular = _sphere_rule(d, quad.angular_nodes)
    phi_x = float(np.asarray(phi(x[None, :]), dtype=float).reshape(-1)[0])
    sphere_area = float(angular.sum())

    def second_difference(rho: np.ndarray) -> np.ndarray:
        offsets = rho[:, None, None] * directions[None, :, :]
        plus = np.asarray(phi(x + offsets), dtype=float)
        minus = np.asarray(phi(x - offsets), dtype=float)
        return 0.5 * ((2.0 * phi_x - plus - minus) @ angular)

    u, w = np.polynomial.legendre.leggauss(quad.nodes)
    u, w = (u + 1.0) / 2.0, w / 2.0

    # 内层 ρ = δ·u^{1/(2−α)}
    power = 1.0 / (2.0 - alpha)
    rho = quad.delta * u ** power
    inner = float(np.sum(w * second_difference(rho) * u ** (-2.0 * power))) * quad.delta ** (-alpha) * power

    # 外层 δ..R，对数变量复合求积
    edges = np.linspace(math.log(quad.delta), math.log(quad.cutoff), quad.panels + 1)
    outer = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        rho = np.exp(lo + (hi - lo) * u)
        outer += float(np.sum(w * second_difference(rho) * rho ** (-alpha))) * (hi - lo)

    tail = sphere_area * phi_x * quad.cutoff ** (-alpha) / alpha
    return inner + outer + tail


def frac_laplacian_apply(phi: Callable[[np.ndarray], np.ndarray], x, alpha: float, d: int,
                         pv_quad: Optional[PVQuadSpec] = None) -> PrincipalValue:
    """
    (−Δ)^{α/2}φ(x) = c(d,α)·P.V.∫ (φ(x)−φ(x+z))/|z|^{d+α} dz

    φ 以形状 (..., d) 的点数组调用，返回形状 (...)。R 以外假定 φ(x±z) 可忽略。

    Args:
        phi: 光滑测试函数
        x: 求值点
        alpha: 指数，0 < α < 2
        d: 维数
        pv_quad: 求积规则

    Returns:
        PrincipalValue，误差估计为与半数节点规则之差
    """
    constant = frac_laplacian_constant(d, alpha)
    quad = pv_quad or PVQuadSpec()
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != d:
        raise ValueError(f"x 的维数 {x.size} 与 d={d} 不一致")

    value = constant * _pv_integral(phi, x, alpha, quad)
    coarse = constant * _pv_integral(phi, x, alpha, quad.halved())
    error = abs(value - coarse)
    if not math.isfinite(value) or error > quad.tol * max(1.0, abs(value)):
        raise QuadratureFailureError(f"主值积分误差 {error:.3e} 超出容差",
                                     {"value": value, "coarse": coarse, "tol": quad.tol})
    return PrincipalValue(value=value, error_estimate=error)


def fractional_laplacian_spectral(values: np.ndarray, alpha: float, extent: float) -> np.ndarray:
    """
    周期网格上 (−Δ)^{α/2} 的谱实现，符号 |ξ|^α

    Args:
        values: 网格函数，每个方向点数相同
        alpha: 指数
        extent: 网格边长 L

    Returns:
        同形状的网格函数
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    xi = _frequency_norm(values.ndim, n, extent / n)
    return np.fft.ifftn(np.fft.fftn(values) * xi ** alpha).real


# ==================== 热核 ====================

def _frequency_norm(d: int, n: int, dx: float) -> np.ndarray:
    """FFT 顺序的 |ξ|，形状 (n,)*d"""
    freq = 2.0 * np.pi * np.fft.fftfreq(n, d=dx)
    squared = sum(np.reshape(freq ** 2, (1,) * k + (n,) + (1,) * (d - 1 - k)) for k in range(d))
    return np.sqrt(np.broadcast_to(squared, (n,) * d))


@dataclass(frozen=True)
class KernelSpec:
    alpha: float = KERNEL_CONFIG["alpha"]
    d: int = KERNEL_CONFIG["d"]
    L: float = KERNEL_CONFIG["L"]
    n: int = KERNEL_CONFIG["n"]
    method: KernelMethod = KernelMethod.SPECTRAL

    def __post_init__(self):
        object.__setattr__(self, "method", KernelMethod(self.method))
        if not 0 < self.alpha <= 2:
            raise DomainError(f"alpha 必须位于 (0,2]: {self.alpha}", {"alpha": self.alpha})
        if not 1 <= self.d <= 3:
            raise ValueError(f"热核网格只支持 d ≤ 3: {self.d}")
        if self.n < 2 or self.n & (self.n - 1):
            raise ValueError(f"n 必须是 2 的幂: {self.n}")
        if not self.L > 0:
            raise ValueError(f"网格边长 L 必须为正数: {self.L}")
        if self.method == KernelMethod.CLOSED_FORM and self.alpha not in (1.0, 2.0):
            raise ValueError(f"闭式热核只支持 alpha ∈ {{1, 2}}: {self.alpha}")
        if self.n ** self.d > KERNEL_CONFIG["max_grid_points"]:
            raise BudgetExceededError(f"网格点数 {self.n ** self.d} 超出预算", {"n": self.n, "d": self.d})

    @property
    def dx(self) -> float:
        return self.L / self.n

    @property
    def axis(self) -> np.ndarray:
        return -self.L / 2.0 + self.dx * np.arange(self.n)

    @property
    def origin_index(self) -> int:
        return self.n // 2

    def radius(self) -> np.ndarray:
        """网格点到原点的距离，形状 (n,)*d"""
        squared = sum(np.reshape(self.axis ** 2, (1,) * k + (self.n,) + (1,) * (self.d - 1 - k))
                      for k in range(self.d))
        return np.sqrt(np.broadcast_to(squared, (self.n,) * self.d))

    def frequency_norm(self) -> np.ndarray:
        return _frequency_norm(self.d, self.n, self.dx)

    def to_dict(self) -> Dict[str, Any]:
        return {"alpha": self.alpha, "d": self.d, "L": self.L, "n": self.n, "method": self.method.value}

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]] = None) -> "KernelSpec":
        merged = {**KERNEL_CONFIG, **(data or {})}
        return cls(alpha=float(merged["alpha"]), d=int(merged["d"]), L=float(merged["L"]), n=int(merged["n"]),
                   method=KernelMethod(merged["method"]))


def _closed_form_values(alpha: float, d: int, radius: np.ndarray, t: float) -> np.ndarray:
    if alpha == 2.0:
        return (4.0 * math.pi * t) ** (-d / 2.0) * np.exp(-radius ** 2 / (4.0 * t))
    c_d = special.gamma((d + 1) / 2.0) / math.pi ** ((d + 1) / 2.0)
    return c_d * t / (t ** 2 + radius ** 2) ** ((d + 1) / 2.0)


def _axis_tail(alpha: float, half_extent: float, t: float) -> float:
    """一维边缘 P(|X| > R)"""
    if alpha == 2.0:
        return float(special.erfc(half_extent / (2.0 * math.sqrt(t))))
    if alpha == 1.0:
        return float(1.0 - 2.0 / math.pi * math.atan(half_extent / t))
    # 稳定分布尾部渐近：P(|X|>R) ≈ 2Γ(α)sin(πα/2)/π·t·R^{−α}
    return float(2.0 * special.gamma(alpha) * math.sin(math.pi * alpha / 2.0) / math.pi * t * half_extent ** -alpha)


def _outside_mass(alpha: float, d: int, half_extent: float, t: float) -> float:
    if alpha == 2.0:
        inside = special.erf(half_extent / (2.0 * math.sqrt(t)))
        return float(min(1.0, max(0.0, 1.0 - inside ** d)))
    return float(min(1.0, d * _axis_tail(alpha, half_extent, t)))


def boundary_mass(spec: KernelSpec, t: float) -> float:
    """
    全空间热核落在网格盒 [−L/2, L/2]^d 之外的质量

    高斯核精确（erf），柯西核一维精确（arctan）、多维取并集上界，其余 α 用稳定分布尾部渐近。
    """
    if not t > 0:
        raise ValueError(f"t 必须为正数: {t}")
    return _outside_mass(spec.alpha, spec.d, spec.L / 2.0, t)


def calibrate_extent(alpha: float, t_max: float, mass_tol: Optional[float] = None, d: int = 1) -> float:
    """
    边界质量不超过 mass_tol 的最小网格边长（2π 的整数倍）

    Args:
        alpha: 指数
        t_max: 最大时间
        mass_tol: 质量容差
        d: 维数

    Returns:
        边长 L = 2πk
    """
    mass_tol = KERNEL_CONFIG["mass_tol"] if mass_tol is None else mass_tol
    if not t_max > 0 or not mass_tol > 0:
        raise ValueError(f"t_max 与 mass_tol 必须为正数: {t_max}, {mass_tol}")

    def outside(k: int) -> float:
        return _outside_mass(alpha, d, math.pi * k, t_max)

    high = 1
    while outside(high) > mass_tol:
        high *= 2
        if high > 2 ** 40:
            raise BudgetExceededError("无法在预算内校准网格边长", {"alpha": alpha, "t_max": t_max})
    low = high // 2
    while high - low > 1:
        middle = (low + high) // 2
        if outside(middle) > mass_tol:
            low = middle
        else:
            high = middle
    return 2.0 * math.pi * high


def kernel_multiplier(spec: KernelSpec, t: float) -> np.ndarray:
    """
    傅里叶乘子 e^{−t|ξ|^α}（FFT 顺序），t = 0 时为恒等

    Args:
        spec: 热核规格
        t: 时间，t ≥ 0

    Returns:
        形状 (n,)*d
    """
    if t < 0:
        raise ValueError(f"t 必须非负: {t}")
    if t == 0:
        return np.ones((spec.n,) * spec.d)
    return np.exp(-t * spec.frequency_norm() ** spec.alpha)


@dataclass
class KernelEvaluation:
    spec: KernelSpec
    t: float
    values: np.ndarray
    multiplier: np.ndarray
    mass: float
    boundary_mass: float
    error_estimate: float
    min_value: float
    diagnostics: Dict[str, float] = field(default_factory=dict)

    @property
    def method(self) -> KernelMethod:
        return self.spec.method

    def value_at_origin(self) -> float:
        return float(self.values[(self.spec.origin_index,) * self.spec.d])

    def to_frame(self) -> pd.DataFrame:
        """列: x（或 x_1..x_d）, value"""
        spec = self.spec
        coordinates = np.meshgrid(*([spec.axis] * spec.d), indexing="ij")
        names = ["x"] if spec.d == 1 else [f"x_{k + 1}" for k in range(spec.d)]
        frame = pd.DataFrame({name: coord.reshape(-1) for name, coord in zip(names, coordinates)})
        frame["value"] = self.values.reshape(-1)
        return frame


def kernel_eval(spec: KernelSpec, t: float, check_mass: bool = True) -> KernelEvaluation:
    """
    在周期网格上求热核 K(t,·)

    Args:
        spec: 热核规格
        t: 时间 t > 0
        check_mass: 是否执行质量检查

    Returns:
        KernelEvaluation

    Raises:
        MassDeficitError: |网格质量 − 1| 或边界质量超过 mass_tol
    """
    if not t > 0:
        raise ValueError(f"t 必须为正数: {t}")
    cell = spec.dx ** spec.d
    diagnostics: Dict[str, float] = {}

    if spec.method == KernelMethod.SPECTRAL:
        multiplier = kernel_multiplier(spec, t)
        values = np.fft.fftshift(np.fft.ifftn(multiplier).real) / cell
        nyquist = math.pi / spec.dx
        diagnostics["spectral_truncation"] = float(math.exp(-t * nyquist ** spec.alpha))
    else:
        values = _closed_form_values(spec.alpha, spec.d, spec.radius(), t)
        multiplier = np.fft.fftn(np.fft.ifftshift(values)).real * cell

    mass = float(np.sum(values) * cell)
    outside = boundary_mass(spec, t)
    diagnostics["boundary_mass"] = outside
    error_estimate = max(diagnostics.values())
    evaluation = KernelEvaluation(spec=spec, t=float(t), values=values, multiplier=multiplier, mass=mass,
                                  boundary_mass=outside, error_estimate=error_estimate,
                                  min_value=float(values.min()), diagnostics=diagnostics)

    if evaluation.min_value < -KERNEL_CONFIG["neg_tol"]:
        logger.warning(f"⚠️ 谱反演出现负值 {evaluation.min_value:.3e} (alpha={spec.alpha}, t={t})")
    if check_mass:
        check_kernel_mass(evaluation)
    return evaluation


def check_kernel_mass(evaluation: KernelEvaluation, mass_tol: Optional[float] = None):
    """质量偏差或边界质量超过 mass_tol 时抛出 MassDeficitError"""
    mass_tol = KERNEL_CONFIG["mass_tol"] if mass_tol is None else mass_tol
    if abs(evaluation.mass - 1.0) > mass_tol or evaluation.boundary_mass > mass_tol:
        raise MassDeficitError(
            f"热核质量不足：mass={evaluation.mass:.6g}，边界质量={evaluation.boundary_mass:.3e}，请增大 L",
            {"mass": evaluation.mass, "boundary_mass": evaluation.boundary_mass, "L": evaluation.spec.L,
             "t": evaluation.t, "mass_tol": mass_tol},
        )


def kernel_convolve(evaluation: KernelEvaluation, g: np.ndarray) -> np.ndarray:
    """
    周期卷积 K(t)∗g，通过谱乘法计算

    Args:
        evaluation: 热核求值结果
        g: 同一网格上的函数，可带前导批次维

    Returns:
        与 g 同形状的网格函数
    """
    spec = evaluation.spec
    g = np.asarray(g, dtype=float)
    if g.ndim < spec.d or g.shape[-spec.d:] != (spec.n,) * spec.d:
        raise GridMismatchError(f"g 的形状 {g.shape} 与网格 {(spec.n,) * spec.d} 不一致",
                                {"shape": list(g.shape), "n": spec.n, "d": spec.d})
    axes = tuple(range(-spec.d, 0))
    return np.fft.ifftn(np.fft.fftn(g, axes=axes) * evaluation.multiplier, axes=axes).real


class KernelCache:
    """按 (spec, t) 缓存热核求值；读并发安全，插入加锁"""

    def __init__(self):
        self._entries: Dict[Tuple[KernelSpec, float], KernelEvaluation] = {}
        self._lock = threading.Lock()

    def get(self, spec: KernelSpec, t: float) -> KernelEvaluation:
        key = (spec, float(t))
        entry = self._entries.get(key)
        if entry is not None:
            return entry
        with self._lock:
            entry = self._entries.get(key)
            if entry is None:
                entry = kernel_eval(spec, t)
                self._entries[key] = entry
        return entry

    def __len__(self) -> int:
        return len(self._entries)

    def clear(self):
        with self._lock:
            self._entries.clear()
