"""
非局部随机热方程的温和解
u(t,x) = Σ_{t_j≤t} [K(t−t_j)∗g(t_j,·,v_j)](x) − ∫_0^t∫_E [K(t−r)∗g(r,·,v)](x) ν(dv) dr

只支持 d = 1 的周期网格。跳跃部分与补偿子都在傅里叶空间中累加，
K(0)∗g = g（乘子为 1）。g 的参数顺序固定为 (t, v, x)。
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..config import CHAINING_CONFIG, KERNEL_CONFIG, MONTE_CARLO_CONFIG, SPDE_CONFIG
from ..utils.parallel import map_replications
from ..utils.statistics import batch_ratios, loglog_fit, nested_batch_sizes, ratio_drift
from .exceptions import BudgetExceededError, DegenerateFitError, InsufficientReplicationsError, QuadratureFailureError
from .kernel import KernelSpec, kernel_eval, kernel_multiplier
from .levy import (
    FieldIntegrand,
    JumpIntegrand,
    LevyConfig,
    PoissonMeasureSample,
    QuadratureSpec,
    intensity_integral,
    sample_prm,
)
from .modulus import ModulusFunction, eval_modulus
from .reports import InequalityReport, build_inequality_report

logger = logging.getLogger(__name__)


# ==================== 外力项与模数证书 ====================

@dataclass(frozen=True)
class ModulusCertificate:
    """|g(t,v,x)−g(t,v,y)| ≤ h(t,v)·|x−y|^{d/p}·φ^{1/p}(|x−y|)"""

    h: JumpIntegrand
    p: float
    phi: ModulusFunction
    d: int = 1

    def envelope(self, distance) -> np.ndarray:
        distance = np.asarray(distance, dtype=float)
        return distance ** (self.d / self.p) * np.asarray(eval_modulus(self.phi, distance)) ** (1.0 / self.p)

    def bound(self, t, v, distance) -> np.ndarray:
        return self.h(t, v) * self.envelope(distance)


@dataclass(frozen=True, eq=False)
class ForcingSpec:
    name: str
    integrand: FieldIntegrand
    certificate: ModulusCertificate
    params: Dict[str, Any] = field(default_factory=dict)

    @property
    def time_homogeneous(self) -> bool:
        return self.integrand.time_homogeneous

    def __call__(self, t, v, x) -> np.ndarray:
        return self.integrand.func(t, v, x)


def _scaled_mark_norm(scale: float, exponent: float) -> JumpIntegrand:
    """h(t,v) = scale·|v|^exponent"""
    return JumpIntegrand(
        func=lambda t, v: scale * np.linalg.norm(v, axis=-1) ** exponent,
        name=f"{scale:g}*|v|^{exponent:g}",
        time_homogeneous=True,
        compensator=lambda t, cfg: scale * cfg.total_mass * cfg.marks.norm_moment(exponent) * np.asarray(t),
        intensity=lambda power, cfg: scale ** power * cfg.T * cfg.total_mass * cfg.marks.norm_moment(
            exponent * power),
    )


def zero_forcing(p: float = SPDE_CONFIG["p"], phi: Optional[ModulusFunction] = None) -> ForcingSpec:
    """g ≡ 0"""
    phi = phi or ModulusFunction.power(1.0)
    zero = JumpIntegrand(func=lambda t, v: np.zeros(np.shape(t)), name="zero", time_homogeneous=True,
                         compensator=lambda t, cfg: np.zeros(np.shape(t)), intensity=lambda power, cfg: 0.0)
    integrand = FieldIntegrand(
        func=lambda t, v, x: np.zeros(np.shape(t) + np.shape(x)), name="zero", time_homogeneous=True,
        sup_norm=lambda t, v: np.zeros(np.shape(t)), sup_intensity=lambda power, cfg: 0.0,
    )
    return ForcingSpec(name="zero", integrand=integrand, certificate=ModulusCertificate(zero, p, phi))


def sine_certificate_constant(p: float, phi: ModulusFunction, frequency: float, max_distance: float,
                              d: int = 1, n_probe: int = 4096) -> float:
    """
    κ = sup_r min(2, k·r) / (r^{d/p}·φ^{1/p}(r))，r 取 [1e-8, max_distance] 上的对数网格

    |sin(kx) − sin(ky)| ≤ min(2, k|x−y|)，故 h = κ·|v|^m 是 v^m·sin(kx) 的证书。
    """
    distance = np.geomspace(1e-8, max_distance, n_probe)
    envelope = distance ** (d / p) * np.asarray(eval_modulus(phi, distance)) ** (1.0 / p)
    ratio = np.minimum(2.0, abs(frequency) * distance) / envelope
    kappa = float(np.max(ratio))
    if not math.isfinite(kappa):
        raise ValueError(f"φ 与 p 无法为 sin 外力提供有限证书: p={p}")
    return kappa


def sine_forcing(p: float = SPDE_CONFIG["p"], phi: Optional[ModulusFunction] = None, mark_power: int = 1,
                 frequency: float = 1.0, amplitude: float = 1.0,
                 max_distance: float = KERNEL_CONFIG["L"]) -> ForcingSpec:
    """
    特征函数外力 g(t,v,x) = amplitude·v^m·sin(k·x)

    sin(kx) 是周期热半群的特征函数（要求 kL/2π 为整数），每个跳跃贡献
    amplitude·v_j^m·e^{−(t−t_j)|k|^α}·sin(kx)。

    Args:
        p: 证书指数
        phi: 证书模数，缺省 Power(1)
        mark_power: 标记幂次 m
        frequency: 频率 k
        amplitude: 振幅
        max_distance: 证书覆盖的最大距离

    Returns:
        ForcingSpec
    """
    phi = phi or ModulusFunction.power(1.0)
    kappa = abs(amplitude) * sine_certificate_constant(p, phi, frequency, max_distance)

    def func(t, v, x):
        weight = amplitude * v[..., 0] ** mark_power
        return weight[..., None] * np.sin(frequency * np.asarray(x, dtype=float))

    integrand = FieldIntegrand(
        func=func,
        name=f"sine(k={frequency:g},m={mark_power})",
        time_homogeneous=True,
        sup_norm=lambda t, v: abs(amplitude) * np.abs(v[..., 0]) ** mark_power,
        sup_intensity=lambda power, cfg: abs(amplitude) ** power * cfg.T * cfg.total_mass * cfg.marks.norm_moment(
            mark_power * power),
    )
    certificate = ModulusCertificate(h=_scaled_mark_norm(kappa, mark_power), p=p, phi=phi)
    return ForcingSpec(name="sine", integrand=integrand, certificate=certificate,
                       params={"mark_power": mark_power, "frequency": frequency, "amplitude": amplitude,
                               "kappa": kappa})


def linear_combination(terms: Sequence[Tuple[float, ForcingSpec]]) -> ForcingSpec:
    """
    Σ a_i·g_i；证书取 h = Σ|a_i|·h_i，要求各项的 (p, φ) 相同

    sup_norm 取 Σ|a_i|·‖g_i‖_∞，是上界。
    """
    if not terms:
        raise ValueError("线性组合至少需要一项")
    first = terms[0][1].certificate
    for _, forcing in terms:
        if forcing.certificate.p != first.p or forcing.certificate.phi != first.phi:
            raise ValueError("线性组合的各项必须使用相同的 (p, φ) 证书")
        if forcing.integrand.sup_norm is None:
            raise ValueError(f"外力项 {forcing.name} 未声明 sup_norm")
    coefficients = [float(a) for a, _ in terms]
    forcings = [g for _, g in terms]

    def func(t, v, x):
        return sum(a * g(t, v, x) for a, g in zip(coefficients, forcings))

    def sup_norm(t, v):
        return sum(abs(a) * g.integrand.sup_norm(t, v) for a, g in zip(coefficients, forcings))

    def h(t, v):
        return sum(abs(a) * g.certificate.h(t, v) for a, g in zip(coefficients, forcings))

    homogeneous = all(g.time_homogeneous for g in forcings)
    name = " + ".join(f"{a:g}*{g.name}" for a, g in zip(coefficients, forcings))
    integrand = FieldIntegrand(func=func, name=name, time_homogeneous=homogeneous, sup_norm=sup_norm)
    certificate = ModulusCertificate(h=JumpIntegrand(func=h, name=f"h({name})", time_homogeneous=homogeneous),
                                     p=first.p, phi=first.phi, d=first.d)
    return ForcingSpec(name="linear_combination", integrand=integrand, certificate=certificate,
                       params={"coefficients": coefficients, "terms": [g.name for g in forcings]})


FORCINGS = {
    "zero": lambda params, p, phi, kernel: zero_forcing(p, phi),
    "sine": lambda params, p, phi, kernel: sine_forcing(
        p, phi, mark_power=int(params.get("mark_power", 1)), frequency=float(params.get("frequency", 1.0)),
        amplitude=float(params.get("amplitude", 1.0)), max_distance=kernel.L),
}


def make_forcing(name: str, params: Optional[Dict[str, Any]], p: float, phi: ModulusFunction,
                 kernel: KernelSpec) -> ForcingSpec:
    """按名称构造内置外力项"""
    if name not in FORCINGS:
        raise ValueError(f"未知的外力项: {name}，可选 {sorted(FORCINGS)}")
    return FORCINGS[name](params or {}, p, phi, kernel)


# ==================== 温和解 ====================

@dataclass
class MildSolutionField:
    """
    温和解的值，形状 (复制, 时间, 空间点)

    单条路径（mild_solution）保存全网格和跳跃/补偿子分解；
    集合（simulate_ensemble）只保存探测球上的点和逐 (复制, 时间) 的全网格上确界。
    """

    times: np.ndarray
    x: np.ndarray
    u: np.ndarray
    kernel: KernelSpec
    levy: LevyConfig
    forcing_name: str
    compensator_part: np.ndarray
    sup_norm: np.ndarray
    jump_part: Optional[np.ndarray] = None
    ball_half_width: Optional[int] = None
    snapshots: Optional[np.ndarray] = None
    compensator_error: float = 0.0
    seed: Optional[int] = None

    @property
    def n_rep(self) -> int:
        return int(self.u.shape[0])

    def level_indices(self, m: int) -> np.ndarray:
        """探测球上第 m 层二进子网格的下标（2^m+1 个点）"""
        if self.ball_half_width is None:
            raise ValueError("只有集合解才有探测球")
        span = 2 * self.ball_half_width
        if 2 ** m > span:
            raise ValueError(f"层级 m={m} 超出探测球分辨率 2K={span}")
        return np.arange(0, span + 1, span // 2 ** m)

    def snapshot_frame(self) -> pd.DataFrame:
        """列: replication, t, x, u"""
        data = self.snapshots if self.snapshots is not None else self.u
        x = self.kernel.axis if self.snapshots is not None else self.x
        n_rep, n_time, n_x = data.shape
        rep, time_index, x_index = np.meshgrid(np.arange(n_rep), np.arange(n_time), np.arange(n_x), indexing="ij")
        return pd.DataFrame({
            "replication": rep.reshape(-1),
            "t": self.times[time_index.reshape(-1)],
            "x": x[x_index.reshape(-1)],
            "u": data.reshape(-1),
        })


def default_times(T: float, n_times: Optional[int] = None) -> np.ndarray:
    n_times = SPDE_CONFIG["n_times"] if n_times is None else int(n_times)
    return np.linspace(0.0, T, n_times)


def ball_half_width(kernel: KernelSpec, c1: float) -> int:
    """满足 K·dx ≤ c1 的最大 2 的幂 K"""
    steps = int(math.floor(c1 / kernel.dx))
    if steps < 1:
        raise ValueError(f"探测球半径 c1={c1} 小于网格步长 {kernel.dx}")
    return 1 << (steps.bit_length() - 1)


class MildSolver:
    """
    固定外力、热核和 Lévy 配置的温和解求解器

    补偿子的傅里叶系数在各复制间共享；时间齐次外力时
    Ĉ(t,ξ) = Ĝ(ξ)·(1−e^{−t|ξ|^α})/|ξ|^α（ξ=0 时为 t·Ĝ），否则用 s=√(t−r) 代换的复合 Gauss-Legendre。
    """

    def __init__(self, forcing: ForcingSpec, kernel: KernelSpec, levy: LevyConfig,
                 quad: Optional[QuadratureSpec] = None, check_mass: bool = True):
        if kernel.d != 1:
            raise ValueError(f"温和解只支持 d=1: {kernel.d}")
        self.forcing = forcing
        self.kernel = kernel
        self.levy = levy
        self.quad = quad or QuadratureSpec()
        if check_mass:
            kernel_eval(kernel, levy.T)
        self.x = kernel.axis
        self.lam = kernel.frequency_norm() ** kernel.alpha
        self.nodes, self.weights = levy.marks.quadrature(self.quad.mark_nodes, self.quad.angular_nodes)
        self.error = 0.0
        # 只保留最近一次时间网格的结果
        self._compensator_key: Optional[Tuple[float, ...]] = None
        self._compensator_value: Optional[np.ndarray] = None
        if forcing.time_homogeneous:
            self._G_hat = self._mark_average_hat(np.zeros(1), self.nodes, self.weights)[0]
            half_nodes, half_weights = levy.marks.quadrature(max(1, self.quad.mark_nodes // 2),
                                                             max(1, self.quad.angular_nodes // 2))
            half = self._mark_average_hat(np.zeros(1), half_nodes, half_weights)[0]
            self._check_error(np.abs(np.fft.ifft(self._G_hat - half)).max() * levy.T,
                              np.abs(np.fft.ifft(self._G_hat)).max() * levy.T)

    def _mark_average_hat(self, r: np.ndarray, nodes: np.ndarray, weights: np.ndarray) -> np.ndarray:
        """fft(ν(E)·Σ_m w_m g(r, v_m, ·))，形状 (len(r), n)"""
        t = np.broadcast_to(r[:, None], (r.size, nodes.shape[0]))
        v = np.broadcast_to(nodes, (r.size,) + nodes.shape)
        values = np.asarray(self.forcing(t, v, self.x), dtype=float)
        averaged = self.levy.total_mass * np.einsum("rmx,m->rx", values, weights)
        return np.fft.fft(averaged, axis=-1)

    def _check_error(self, error: float, scale: float):
        self.error = max(self.error, float(error))
        if not math.isfinite(error) or error > self.quad.abs_tol + self.quad.rel_tol * scale:
            raise QuadratureFailureError(f"温和解补偿子求积误差 {error:.3e} 超出容差",
                                         {"error": float(error), "scale": float(scale)})

    def _inhomogeneous_hat(self, t: float, panels: int, nodes_per_panel: int) -> np.ndarray:
        if t == 0:
            return np.zeros(self.kernel.n, dtype=complex)
        u, w = np.polynomial.legendre.leggauss(nodes_per_panel)
        edges = np.linspace(0.0, math.sqrt(t), panels + 1)
        s = np.concatenate([(lo + hi) / 2 + (hi - lo) / 2 * u for lo, hi in zip(edges[:-1], edges[1:])])
        ws = np.concatenate([(hi - lo) / 2 * w for lo, hi in zip(edges[:-1], edges[1:])])
        G_hat = self._mark_average_hat(t - s ** 2, self.nodes, self.weights)
        decay = np.exp(-np.outer(s ** 2, self.lam))
        return np.einsum("q,qx->x", 2.0 * s * ws, decay * G_hat)

    def compensator_hat(self, times: np.ndarray) -> np.ndarray:
        """各时间点补偿子的傅里叶系数，形状 (n_times, n)"""
        times = np.asarray(times, dtype=float)
        key = tuple(times.tolist())
        if key == self._compensator_key:
            return self._compensator_value
        if self.forcing.time_homogeneous:
            lam_safe = np.where(self.lam > 0, self.lam, 1.0)
            factor = np.where(self.lam > 0, -np.expm1(-np.outer(times, self.lam)) / lam_safe, times[:, None])
            result = factor * self._G_hat
        else:
            panels = SPDE_CONFIG["time_panels"]
            per_panel = max(4, self.quad.time_nodes // panels)
            result = np.stack([self._inhomogeneous_hat(t, panels, per_panel) for t in times])
            coarse = self._inhomogeneous_hat(times[-1], max(1, panels // 2), per_panel)
            self._check_error(np.abs(np.fft.ifft(result[-1] - coarse)).max(),
                              np.abs(np.fft.ifft(result[-1])).max())
        self._compensator_key, self._compensator_value = key, result
        return result

    def jump_hat(self, sample: PoissonMeasureSample, times: np.ndarray, left: bool = False) -> np.ndarray:
        """Σ_{t_j≤t} e^{−(t−t_j)|ξ|^α}·ĝ_j（left=True 时取 t_j<t）"""
        times = np.asarray(times, dtype=float)
        result = np.zeros((times.size, self.kernel.n), dtype=complex)
        if sample.count == 0:
            return result
        g_hat = np.fft.fft(np.asarray(self.forcing(sample.times, sample.marks, self.x), dtype=float), axis=-1)
        lag = times[:, None] - sample.times[None, :]
        active = lag > 0 if left else lag >= 0
        for i in range(times.size):
            columns = np.flatnonzero(active[i])
            if columns.size:
                decay = np.exp(-np.outer(lag[i, columns], self.lam))
                result[i] = np.sum(decay * g_hat[columns], axis=0)
        return result

    def solve(self, sample: PoissonMeasureSample, times: np.ndarray,
              left: bool = False) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        返回 (u, 跳跃部分, 补偿子部分)，形状均为 (n_times, n)

        left=True 时给出左极限 u(t−)。
        """
        jump = np.fft.ifft(self.jump_hat(sample, times, left), axis=-1).real
        compensator = np.fft.ifft(self.compensator_hat(times), axis=-1).real
        return jump - compensator, jump, compensator


def mild_solution(atoms: PoissonMeasureSample, forcing: ForcingSpec, kernel: KernelSpec, times,
                  levy: LevyConfig, quad: Optional[QuadratureSpec] = None, left: bool = False) -> MildSolutionField:
    """
    在全网格上计算一条温和解路径

    Args:
        atoms: 泊松随机测度样本
        forcing: 外力项
        kernel: 热核规格（d=1）
        times: 求值时间
        levy: Lévy 配置
        quad: 补偿子求积规则
        left: 是否求左极限

    Returns:
        MildSolutionField（单复制，含分解）
    """
    times = np.asarray(times, dtype=float)
    solver = MildSolver(forcing, kernel, levy, quad)
    u, jump, compensator = solver.solve(atoms, times, left)
    return MildSolutionField(times=times, x=solver.x, u=u[None], kernel=kernel, levy=levy,
                             forcing_name=forcing.name, compensator_part=compensator, sup_norm=np.abs(u).max(axis=1)[None],
                             jump_part=jump[None], compensator_error=solver.error, seed=atoms.seed)


def simulate_ensemble(forcing: ForcingSpec, kernel: KernelSpec, levy: LevyConfig, n_rep: int, seed: int,
                      times=None, c1: Optional[float] = None, quad: Optional[QuadratureSpec] = None,
                      n_threads: Optional[int] = None, snapshot_replications: int = 0) -> MildSolutionField:
    """
    按复制并行模拟温和解，只保存探测球 B_{c1} 上的值

    Args:
        forcing: 外力项
        kernel: 热核规格
        levy: Lévy 配置
        n_rep: 复制数
        seed: 主种子
        times: 求值时间，缺省为 [0,T] 上的 n_times 个等距点
        c1: 探测球半径
        quad: 求积规则
        n_threads: 线程数
        snapshot_replications: 保存全网格快照的复制数

    Returns:
        MildSolutionField（集合）
    """
    times = default_times(levy.T) if times is None else np.asarray(times, dtype=float)
    c1 = SPDE_CONFIG["c1"] if c1 is None else float(c1)
    solver = MildSolver(forcing, kernel, levy, quad)
    half_width = ball_half_width(kernel, c1)
    center = kernel.origin_index
    ball = np.arange(center - half_width, center + half_width + 1)
    compensator = np.fft.ifft(solver.compensator_hat(times), axis=-1).real

    def one_replication(index: int, rng: np.random.Generator):
        sample = sample_prm(levy, rng)
        jump = np.fft.ifft(solver.jump_hat(sample, times), axis=-1).real
        u = jump - compensator
        snapshot = u if index < snapshot_replications else None
        return u[:, ball], np.abs(u).max(axis=1), snapshot

    logger.info(f"🚀 模拟温和解集合：{n_rep} 个复制，{times.size} 个时间点，外力 {forcing.name}")
    results = map_replications(one_replication, n_rep, seed, n_threads=n_threads, desc="spde")
    snapshots = [r[2] for r in results if r[2] is not None]
    return MildSolutionField(
        times=times, x=kernel.axis[ball], u=np.stack([r[0] for r in results]), kernel=kernel, levy=levy,
        forcing_name=forcing.name, compensator_part=compensator[:, ball],
        sup_norm=np.stack([r[1] for r in results]), ball_half_width=half_width,
        snapshots=np.stack(snapshots) if snapshots else None, compensator_error=solver.error, seed=int(seed),
    )


def sine_eigen_solution(sample: PoissonMeasureSample, times, x, levy: LevyConfig, alpha: float,
                        mark_power: int = 1, frequency: float = 1.0, amplitude: float = 1.0,
                        left: bool = False) -> np.ndarray:
    """
    g = amplitude·v^m·sin(kx) 的闭式温和解

    u(t,x) = amplitude·[Σ_{t_j≤t} v_j^m e^{−(t−t_j)λ} − ν(E)·E[v^m]·(1−e^{−tλ})/λ]·sin(kx)，λ = |k|^α

    Returns:
        形状 (n_times, n_x)
    """
    times = np.asarray(times, dtype=float)
    lam = abs(frequency) ** alpha
    nodes, weights = levy.marks.quadrature(64, 8)
    mean_power = float(np.sum(weights * nodes[:, 0] ** mark_power))
    lag = times[:, None] - sample.times[None, :]
    active = lag > 0 if left else lag >= 0
    jumps = np.where(active, (sample.marks[:, 0] ** mark_power)[None, :] * np.exp(-lam * np.where(active, lag, 0.0)),
                     0.0).sum(axis=1)
    compensator = levy.total_mass * mean_power * -np.expm1(-lam * times) / lam
    return amplitude * (jumps - compensator)[:, None] * np.sin(frequency * np.asarray(x, dtype=float))[None, :]


# ==================== 定理检验 ====================

def _require(field_: MildSolutionField, minimum: Optional[int]):
    minimum = SPDE_CONFIG["min_replications"] if minimum is None else minimum
    if field_.n_rep < minimum:
        raise InsufficientReplicationsError(f"至少需要 {minimum} 个复制，实际 {field_.n_rep}",
                                            {"n_rep": field_.n_rep, "minimum": minimum})


def symmetric_probe_pairs(field_: MildSolutionField) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    关于原点对称的点对 (−j·dx, j·dx)，j 取不超过 K 的 2 的幂

    Returns:
        (左下标, 右下标, 距离)
    """
    K = field_.ball_half_width
    offsets = 2 ** np.arange(int(math.log2(K)) + 1)
    left = K - offsets
    right = K + offsets
    distance = field_.x[right] - field_.x[left]
    return left, right, distance


@dataclass
class ModulusEstimateReport:
    p: float
    n_rep: int
    distances: List[float]
    estimates: List[float]
    envelope: List[float]
    ratios: List[float]
    worst_ratio: float
    slope_envelope: Optional[float]
    slope_distance: Optional[float]
    batch_worst_ratios: Dict[int, float]
    drift: float
    consistent: bool
    seed: Optional[int]
    note: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "p": self.p,
            "n_rep": self.n_rep,
            "distances": self.distances,
            "estimates": self.estimates,
            "envelope": self.envelope,
            "ratios": self.ratios,
            "worst_ratio": self.worst_ratio,
            "slope_envelope": self.slope_envelope,
            "slope_distance": self.slope_distance,
            "batch_worst_ratios": {str(k): v for k, v in self.batch_worst_ratios.items()},
            "drift": self.drift,
            "consistent": self.consistent,
            "seed": self.seed,
            "note": self.note,
        }


def modulus_estimate_check(field_: MildSolutionField, p: float, phi: ModulusFunction,
                           slope_tol: Optional[float] = None, batch_sizes: Optional[List[int]] = None,
                           min_replications: Optional[int] = None) -> ModulusEstimateReport:
    """
    Ê[sup_{t≤T}|u(t,x)−u(t,y)|^p] 对比 |x−y|^d·φ(|x−y|)

    Args:
        field_: 温和解集合
        p: 矩指数
        phi: 模数
        slope_tol: 斜率容差
        batch_sizes: 嵌套批次
        min_replications: 最少复制数

    Returns:
        ModulusEstimateReport
    """
    _require(field_, min_replications)
    slope_tol = SPDE_CONFIG["slope_tol"] if slope_tol is None else slope_tol
    left, right, distance = symmetric_probe_pairs(field_)
    samples = np.max(np.abs(field_.u[:, :, right] - field_.u[:, :, left]), axis=1) ** p
    estimates = samples.mean(axis=0)
    envelope = distance ** field_.kernel.d * np.asarray(eval_modulus(phi, distance))
    ratios = estimates / envelope
    worst = int(np.argmax(ratios))

    sizes = nested_batch_sizes(field_.n_rep, batch_sizes)
    worst_batches = batch_ratios(samples[:, worst], float(envelope[worst]), sizes)
    drift = ratio_drift(worst_batches)

    report = ModulusEstimateReport(
        p=float(p), n_rep=field_.n_rep, distances=distance.tolist(), estimates=estimates.tolist(),
        envelope=envelope.tolist(), ratios=ratios.tolist(), worst_ratio=float(ratios[worst]),
        slope_envelope=None, slope_distance=None, batch_worst_ratios=worst_batches, drift=drift,
        consistent=False, seed=field_.seed,
    )
    if np.all(estimates == 0):
        report.consistent = True
        report.note = "全部增量为零"
        return report
    try:
        report.slope_envelope = loglog_fit(envelope, estimates).slope
        report.slope_distance = loglog_fit(distance, estimates).slope
    except DegenerateFitError as e:
        report.note = f"无法拟合: {e}"
        return report
    report.consistent = bool(report.slope_envelope >= 1.0 - slope_tol
                             and drift < MONTE_CARLO_CONFIG["stability_tol"])
    return report


@dataclass
class HolderConclusionReport:
    p: float
    theta: float
    beta: float
    levels: List[int]
    estimates: List[float]
    growth: List[float]
    no_blowup: bool
    n_rep: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "p": self.p,
            "theta": self.theta,
            "beta": self.beta,
            "levels": self.levels,
            "estimates": self.estimates,
            "growth": self.growth,
            "no_blowup": self.no_blowup,
            "n_rep": self.n_rep,
        }


def holder_conclusion_check(field_: MildSolutionField, p: float, phi: ModulusFunction, theta: float, beta: float,
                            levels: Optional[Sequence[int]] = None, growth_tol: Optional[float] = None,
                            min_replications: Optional[int] = None,
                            max_pairs: Optional[int] = None) -> HolderConclusionReport:
    """
    Ê[sup_t sup_{x≠y} |Δu|^p/φ^{βp}(|x−y|)] 在探测球的逐层二进子网格上

    相邻层级增长率都小于 growth_tol 时判定无爆破趋势。

    Args:
        field_: 温和解集合
        p: 矩指数
        phi: 模数
        theta: ϑ
        beta: β ∈ (0, 1/p−ϑ]
        levels: 网格层级
        growth_tol: 增长率容差
        min_replications: 最少复制数
        max_pairs: 每层点对预算，缺省为 CHAINING_CONFIG["max_check_pairs"]

    Returns:
        HolderConclusionReport

    Raises:
        BudgetExceededError: 某层点对数超出预算
    """
    if not 0 < beta <= 1.0 / p - theta:
        raise ValueError(f"beta 必须位于 (0, 1/p−θ] = (0, {1.0 / p - theta}]: {beta}")
    _require(field_, min_replications)
    levels = list(SPDE_CONFIG["levels"] if levels is None else levels)
    growth_tol = SPDE_CONFIG["growth_tol"] if growth_tol is None else growth_tol
    max_pairs = CHAINING_CONFIG["max_check_pairs"] if max_pairs is None else int(max_pairs)
    chunk = CHAINING_CONFIG["replication_chunk"]

    estimates = []
    for m in levels:
        indices = field_.level_indices(m)
        n_pairs = indices.size * (indices.size - 1) // 2
        if n_pairs > max_pairs:
            raise BudgetExceededError(f"层级 m={m} 的点对数 {n_pairs} 超出预算 {max_pairs}",
                                      {"level": m, "n_pairs": n_pairs, "max_pairs": max_pairs})
        first, second = np.triu_indices(indices.size, k=1)
        distance = field_.x[indices[second]] - field_.x[indices[first]]
        weights = np.asarray(eval_modulus(phi, distance)) ** (-beta * p)
        total = 0.0
        for start in range(0, field_.n_rep, chunk):
            block = field_.u[start:start + chunk][:, :, indices]
            increments = np.abs(block[:, :, second] - block[:, :, first]) ** p
            total += float(np.sum(np.max(increments * weights, axis=(1, 2))))
        estimates.append(total / field_.n_rep)

    growth = []
    for previous, current in zip(estimates[:-1], estimates[1:]):
        growth.append(0.0 if previous == 0 and current == 0 else
                      (current / previous - 1.0 if previous > 0 else float("inf")))
    return HolderConclusionReport(p=float(p), theta=float(theta), beta=float(beta), levels=levels,
                                  estimates=estimates, growth=growth,
                                  no_blowup=all(g < growth_tol for g in growth), n_rep=field_.n_rep)


def sup_bound_check(field_: MildSolutionField, forcing: ForcingSpec, quad: Optional[QuadratureSpec] = None,
                    batch_sizes: Optional[List[int]] = None,
                    min_replications: Optional[int] = None) -> InequalityReport:
    """
    Ê[sup_{t≤T} max_x |u(t,x)|] 对比 ∫_0^T∫_E ‖g(r,v,·)‖_∞ ν(dv) dr

    Returns:
        InequalityReport
    """
    _require(field_, min_replications)
    norm_integrand = forcing.integrand.sup_norm_integrand(field_.kernel.axis)
    rhs = {"sup_norm_intensity": intensity_integral(norm_integrand, field_.levy, 1.0, quad)}
    return build_inequality_report("sup_bound", field_.sup_norm.max(axis=1), rhs, field_.seed,
                                   batch_sizes=batch_sizes,
                                   notes=["空间上确界取自有限网格"])


@dataclass(frozen=True)
class LemmaProbe:
    lags: Tuple[float, ...]
    times: Tuple[float, ...]
    marks: np.ndarray
    first: np.ndarray
    second: np.ndarray


def default_lemma_probe(kernel: KernelSpec, levy: LevyConfig, c1: Optional[float] = None,
                        n_marks: int = 5) -> LemmaProbe:
    """时间差 {0, 0.01, 0.1, T}、时间 {0, T/2, T}、标记求积节点子集、探测球上的对称点对"""
    c1 = SPDE_CONFIG["c1"] if c1 is None else c1
    half_width = ball_half_width(kernel, c1)
    offsets = 2 ** np.arange(int(math.log2(half_width)) + 1)
    center = kernel.origin_index
    nodes, _ = levy.marks.quadrature(max(n_marks, 2), 4)
    chosen = nodes[np.unique(np.linspace(0, nodes.shape[0] - 1, n_marks).astype(int))]
    return LemmaProbe(lags=(0.0, 0.01, 0.1, levy.T), times=(0.0, levy.T / 2.0, levy.T), marks=chosen,
                      first=center - offsets, second=center + offsets)


@dataclass
class LemmaReport:
    passed: bool
    n_checked: int
    worst_ratio: float
    witness: Optional[Dict[str, float]]

    def to_dict(self) -> Dict[str, Any]:
        return {"passed": self.passed, "n_checked": self.n_checked, "worst_ratio": self.worst_ratio,
                "witness": self.witness}


def convolution_modulus_lemma(forcing: ForcingSpec, kernel: KernelSpec, probe: LemmaProbe,
                              mass_tol: Optional[float] = None) -> LemmaReport:
    """
    检查 |K(τ)∗g(r,·,v)(x) − K(τ)∗g(r,·,v)(y)| ≤ h(r,v)·|x−y|^{d/p}φ^{1/p}(|x−y|)·(1+mass_tol)

    τ = 0 时即检查外力自身的证书。失败时返回最坏的见证点。
    """
    mass_tol = KERNEL_CONFIG["mass_tol"] if mass_tol is None else mass_tol
    x = kernel.axis
    distance = np.abs(x[probe.second] - x[probe.first])
    envelope = forcing.certificate.envelope(distance)

    n_checked, worst_ratio, witness, passed = 0, 0.0, None, True
    for r in probe.times:
        t_nodes = np.full(probe.marks.shape[0], r)
        g_values = np.asarray(forcing(t_nodes, probe.marks, x), dtype=float)
        h_values = np.asarray(forcing.certificate.h(t_nodes, probe.marks), dtype=float)
        g_hat = np.fft.fft(g_values, axis=-1)
        for lag in probe.lags:
            convolved = np.fft.ifft(g_hat * kernel_multiplier(kernel, lag), axis=-1).real
            lhs = np.abs(convolved[:, probe.second] - convolved[:, probe.first])
            rhs = h_values[:, None] * envelope[None, :] * (1.0 + mass_tol)
            n_checked += lhs.size
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(lhs == 0, 0.0, lhs / rhs)
            k, j = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
            if ratio[k, j] > worst_ratio:
                worst_ratio = float(ratio[k, j])
                if lhs[k, j] > rhs[k, j]:
                    passed = False
                    witness = {"lag": float(lag), "r": float(r), "v": probe.marks[k].tolist(),
                               "x": float(x[probe.first[j]]), "y": float(x[probe.second[j]]),
                               "lhs": float(lhs[k, j]), "rhs": float(rhs[k, j])}
    if not passed:
        logger.warning(f"⚠️ 卷积模数引理在 {witness} 处不成立")
    return LemmaReport(passed=passed, n_checked=n_checked, worst_ratio=worst_ratio, witness=witness)


def check_certificate(forcing: ForcingSpec, kernel: KernelSpec, probe: LemmaProbe,
                      cert_tol: Optional[float] = None) -> LemmaReport:
    """外力证书本身在探测集上成立（容差 1+cert_tol）"""
    cert_tol = SPDE_CONFIG["cert_tol"] if cert_tol is None else cert_tol
    lag_free = LemmaProbe(lags=(0.0,), times=probe.times, marks=probe.marks, first=probe.first, second=probe.second)
    return convolution_modulus_lemma(forcing, kernel, lag_free, mass_tol=cert_tol)
