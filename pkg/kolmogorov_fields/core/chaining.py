"""
链式估计
二进网格 D_m、最近邻点对 Δ_m、逐层增量 K_i(t)、链式上界、半范数 [X]_{α,φ}
以及矩假设的蒙特卡罗检验

网格坐标以 (整数分子, 层级) 保存，网格运算精确；距离在浮点中计算。
所有经验上确界都只取有限网格和有限时间网格，是真实上确界的下界。
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..config import CHAINING_CONFIG
from ..utils.statistics import loglog_fit
from .exceptions import (
    BudgetExceededError,
    DegenerateFitError,
    DivisionByZeroError,
    InsufficientReplicationsError,
    NotReachableError,
)
from .modulus import ModulusFunction, eval_modulus, modulus_at_dyadic

logger = logging.getLogger(__name__)


class NormKind(str, Enum):
    SUP = "sup"
    L2 = "l2"
    L1 = "l1"


_NORM_ORDER = {NormKind.SUP: np.inf, NormKind.L2: 2, NormKind.L1: 1}


def h_norm(diff: np.ndarray, norm: NormKind) -> np.ndarray:
    """沿最后一维计算 H 上的范数"""
    return np.linalg.norm(diff, ord=_NORM_ORDER[NormKind(norm)], axis=-1)


# ==================== 二进网格与点对 ====================

@dataclass(frozen=True, eq=False)
class DyadicGrid:
    """[0,1]^d 上第 m 层二进网格，按字典序排列"""

    d: int
    m: int
    numerators: np.ndarray

    @property
    def side(self) -> int:
        return 2 ** self.m + 1

    @property
    def size(self) -> int:
        return int(self.numerators.shape[0])

    @property
    def points(self) -> np.ndarray:
        return np.ldexp(self.numerators.astype(float), -self.m)

    def flat_index(self, numerators: np.ndarray) -> np.ndarray:
        """分子坐标 → 网格下标"""
        numerators = np.asarray(numerators, dtype=np.int64).reshape(-1, self.d)
        return np.ravel_multi_index(tuple(numerators.T), (self.side,) * self.d)


def build_grid(d: int, m: int, max_points: Optional[int] = None) -> DyadicGrid:
    """
    构造二进网格 D_m

    Args:
        d: 维数
        m: 层级
        max_points: 网格点数预算

    Returns:
        DyadicGrid
    """
    if d < 1 or m < 0:
        raise ValueError(f"网格参数无效: d={d}, m={m}")
    max_points = CHAINING_CONFIG["max_grid_points"] if max_points is None else max_points
    side = 2 ** m + 1
    size = side ** d
    if size > max_points:
        raise BudgetExceededError(f"网格点数 {size} 超出预算 {max_points}", {"d": d, "m": m, "size": size})

    axes = [np.arange(side, dtype=np.int64)] * d
    numerators = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    return DyadicGrid(d=d, m=m, numerators=numerators)


@dataclass(frozen=True, eq=False)
class NeighborPairs:
    """第 m 层沿坐标轴的最近邻点对（下标指向第 m 层网格）"""

    d: int
    m: int
    first: np.ndarray
    second: np.ndarray
    axis: np.ndarray

    @property
    def count(self) -> int:
        return int(self.first.size)

    def on_level(self, m_fine: int) -> Tuple[np.ndarray, np.ndarray]:
        """把点对下标映射到更细的第 m_fine 层网格"""
        if m_fine < self.m:
            raise ValueError(f"点对层级 {self.m} 高于网格层级 {m_fine}")
        return (_rescale_indices(self.first, self.d, self.m, m_fine),
                _rescale_indices(self.second, self.d, self.m, m_fine))


def _rescale_indices(indices: np.ndarray, d: int, m: int, m_fine: int) -> np.ndarray:
    coarse_shape = (2 ** m + 1,) * d
    fine_shape = (2 ** m_fine + 1,) * d
    numerators = np.stack(np.unravel_index(indices, coarse_shape), axis=-1) << (m_fine - m)
    return np.ravel_multi_index(tuple(numerators.T), fine_shape)


def neighbor_pairs(grid: DyadicGrid) -> NeighborPairs:
    """
    枚举 D_m 中距离恰为 2^{-m} 的点对

    Args:
        grid: 二进网格

    Returns:
        NeighborPairs，数量为 d·2^m·(2^m+1)^{d-1}
    """
    firsts, seconds, axes = [], [], []
    index = np.arange(grid.size, dtype=np.int64)
    top = 2 ** grid.m
    for k in range(grid.d):
        stride = grid.side ** (grid.d - 1 - k)
        mask = grid.numerators[:, k] < top
        firsts.append(index[mask])
        seconds.append(index[mask] + stride)
        axes.append(np.full(int(mask.sum()), k, dtype=np.int64))
    return NeighborPairs(d=grid.d, m=grid.m, first=np.concatenate(firsts),
                         second=np.concatenate(seconds), axis=np.concatenate(axes))


def dyadic_approximation(x, m: int) -> np.ndarray:
    """
    x 在第 m 层的分量下取整逼近 ⌊2^m x⌋/2^m

    Args:
        x: [0,1]^d 中的点
        m: 层级

    Returns:
        D_m 中的点
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < 0) or np.any(x > 1):
        raise ValueError(f"x 必须位于 [0,1]^d: {x}")
    return np.ldexp(np.floor(np.ldexp(x, m)), -m)


@dataclass(frozen=True)
class Segment:
    start: Tuple[float, ...]
    end: Tuple[float, ...]
    axis: int
    level: int

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.subtract(self.end, self.start)))


def _exact_numerators(point, level: int) -> np.ndarray:
    scaled = np.ldexp(np.atleast_1d(np.asarray(point, dtype=float)), level)
    if np.any(scaled != np.floor(scaled)) or np.any(scaled < 0) or np.any(scaled > 2 ** level):
        raise ValueError(f"{point} 不是 D_{level} 中的点")
    return scaled.astype(np.int64)


def chain_path(a, b, i: int) -> List[Segment]:
    """
    在 D_{i+1} 中逐坐标轴连接 a 与 b

    Args:
        a: D_{i+1} 中的点
        b: D_{i+1} 中的点
        i: 粗层级

    Returns:
        至多 d 段、每段长度 2^{-i-1} 的折线
    """
    level = i + 1
    na, nb = _exact_numerators(a, level), _exact_numerators(b, level)
    if na.shape != nb.shape:
        raise ValueError("a 与 b 维数不同")
    delta = nb - na
    if np.any(np.abs(delta) > 1):
        raise NotReachableError(f"{a} 与 {b} 不在 D_{level} 的单步邻域内",
                                {"a": list(map(float, np.atleast_1d(a))), "b": list(map(float, np.atleast_1d(b)))})

    segments = []
    current = na.copy()
    for k in np.flatnonzero(delta):
        following = current.copy()
        following[k] += delta[k]
        segments.append(Segment(start=tuple(np.ldexp(current.astype(float), -level)),
                                end=tuple(np.ldexp(following.astype(float), -level)),
                                axis=int(k), level=level))
        current = following
    return segments


# ==================== 场样本 ====================

@dataclass
class FieldSample:
    """
    有限维 H 值随机场样本

    values 形状为 (复制, 时间, 网格点, h_dim)，网格点按 D_{m_max} 字典序。
    """

    d: int
    m_max: int
    time_grid: np.ndarray
    values: np.ndarray
    norm: NormKind = NormKind.L2
    seed: Optional[int] = None

    def __post_init__(self):
        self.time_grid = np.asarray(self.time_grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.norm = NormKind(self.norm)
        if self.values.ndim != 4:
            raise ValueError(f"values 必须是四维数组，实际形状 {self.values.shape}")
        expected_points = (2 ** self.m_max + 1) ** self.d
        if self.values.shape[1] != self.time_grid.size or self.values.shape[2] != expected_points:
            raise ValueError(f"values 形状 {self.values.shape} 与网格不一致")
        if self.time_grid.size and (np.any(self.time_grid < 0) or np.any(self.time_grid > 1)
                                    or np.any(np.diff(self.time_grid) <= 0)):
            raise ValueError("time_grid 必须严格递增且位于 [0,1]")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("场样本包含非有限值")

    @property
    def n_rep(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_time(self) -> int:
        return int(self.values.shape[1])

    @property
    def h_dim(self) -> int:
        return int(self.values.shape[3])

    @property
    def grid(self) -> DyadicGrid:
        return build_grid(self.d, self.m_max)


def _replication_chunks(n_rep: int) -> List[slice]:
    step = CHAINING_CONFIG["replication_chunk"]
    return [slice(start, min(start + step, n_rep)) for start in range(0, n_rep, step)]


def _pair_increments(field: FieldSample, first: np.ndarray, second: np.ndarray, rows: slice) -> np.ndarray:
    """‖X_t(x)−X_t(y)‖，形状 (复制, 时间, 点对)"""
    block = field.values[rows]
    return h_norm(block[:, :, second, :] - block[:, :, first, :], field.norm)


def compute_level_increments(field: FieldSample, pairs: NeighborPairs) -> np.ndarray:
    """
    K_i(t) = max_{(x,y)∈Δ_i} ‖X_t(x) − X_t(y)‖

    Args:
        field: 场样本
        pairs: 第 i 层最近邻点对

    Returns:
        形状 (复制, 时间) 的 K_i
    """
    if pairs.d != field.d:
        raise ValueError(f"点对维数 {pairs.d} 与场维数 {field.d} 不一致")
    first, second = pairs.on_level(field.m_max)
    result = np.empty((field.n_rep, field.n_time))
    for rows in _replication_chunks(field.n_rep):
        result[rows] = _pair_increments(field, first, second, rows).max(axis=-1)
    return result


def level_increment_table(field: FieldSample, levels: Optional[Sequence[int]] = None) -> np.ndarray:
    """
    全部层级的 K_i(t)

    Returns:
        形状 (复制, 层级, 时间)
    """
    levels = range(field.m_max + 1) if levels is None else levels
    table = [compute_level_increments(field, neighbor_pairs(build_grid(field.d, level))) for level in levels]
    return np.stack(table, axis=1)


# ==================== 探测点对 ====================

@dataclass(frozen=True, eq=False)
class PairSet:
    """第 m 层网格上的点对（下标）及其整数分子差"""

    first: np.ndarray
    second: np.ndarray
    distance: np.ndarray
    squared_numerator_distance: np.ndarray


def make_pair_set(grid: DyadicGrid, first: np.ndarray, second: np.ndarray) -> PairSet:
    first = np.asarray(first, dtype=np.int64)
    second = np.asarray(second, dtype=np.int64)
    delta = grid.numerators[second] - grid.numerators[first]
    squared = np.sum(delta * delta, axis=-1)
    distance = np.ldexp(np.sqrt(squared.astype(float)), -grid.m)
    return PairSet(first=first, second=second, distance=distance, squared_numerator_distance=squared)


def all_grid_pairs(grid: DyadicGrid, max_pairs: Optional[int] = None) -> PairSet:
    """
    网格上全部无序点对 x≠y；超出预算时用固定种子确定性抽样

    Args:
        grid: 二进网格
        max_pairs: 点对预算

    Returns:
        PairSet
    """
    max_pairs = CHAINING_CONFIG["max_check_pairs"] if max_pairs is None else int(max_pairs)
    n = grid.size
    total = n * (n - 1) // 2
    if total <= max_pairs:
        first, second = np.triu_indices(n, k=1)
    else:
        logger.info(f"点对总数 {total} 超出预算，抽样 {max_pairs} 对")
        rng = np.random.default_rng(0)
        a = rng.integers(n, size=max_pairs)
        b = rng.integers(n - 1, size=max_pairs)
        b = b + (b >= a)
        first, second = np.minimum(a, b), np.maximum(a, b)
    return make_pair_set(grid, first, second)


def _pair_levels(pairs: PairSet, m_max: int) -> np.ndarray:
    """满足 |x−y| ≤ 2^{-m} 的最大 m（下截断到 0）"""
    q = pairs.squared_numerator_distance.astype(np.int64)
    # ceil(log2 q) = bit_length(q−1)
    ceil_log2 = np.frexp((q - 1).astype(float))[1]
    steps = (ceil_log2 + 1) // 2
    return np.maximum(0, m_max - steps).astype(np.int64)


# ==================== 路径链式不等式 ====================

@dataclass
class PathwiseCheckReport:
    n_checked: int
    n_violations: int
    max_ratio: float
    power: Optional[float]
    first_violation: Optional[Dict[str, Any]] = None

    @property
    def holds(self) -> bool:
        return self.n_violations == 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_checked": self.n_checked,
            "n_violations": self.n_violations,
            "max_ratio": self.max_ratio,
            "power": self.power,
            "holds": self.holds,
            "first_violation": self.first_violation,
        }


def _tail_level_sums(K: np.ndarray, power: Optional[float]) -> np.ndarray:
    """S[..., m, t] = Σ_{i=m}^{m_max} K_i(t)（或 K_i^γ）"""
    terms = K if power is None else np.power(K, power)
    return np.flip(np.cumsum(np.flip(terms, axis=1), axis=1), axis=1)


def verify_pathwise_chaining(field: FieldSample, K: Optional[np.ndarray] = None, power: Optional[float] = None,
                             pairs: Optional[PairSet] = None) -> PathwiseCheckReport:
    """
    逐复制、逐时间、逐点对检查 ‖X_t(x)−X_t(y)‖ ≤ 2d·Σ_{i≥m} K_i(t)

    power 给出 γ<1 时检查 ‖ΔX‖^γ ≤ 2d·Σ_{i≥m} K_i^γ。比较不带容差。

    Args:
        field: 场样本
        K: 逐层增量表 (复制, 层级, 时间)，缺省时计算
        power: γ 次幂版本的 γ
        pairs: 待查点对，缺省为全部网格点对

    Returns:
        PathwiseCheckReport
    """
    if power is not None and not 0 < power < 1:
        raise ValueError(f"power 必须位于 (0,1): {power}")
    K = level_increment_table(field) if K is None else K
    grid = field.grid
    pairs = all_grid_pairs(grid) if pairs is None else pairs
    levels = _pair_levels(pairs, field.m_max)
    tail = 2 * field.d * _tail_level_sums(K, power)

    n_checked, n_violations, max_ratio, first_violation = 0, 0, 0.0, None
    for rows in _replication_chunks(field.n_rep):
        lhs = _pair_increments(field, pairs.first, pairs.second, rows)
        if power is not None:
            lhs = np.power(lhs, power)
        # rhs[r, t, k] = tail[r, levels[k], t]
        rhs = np.transpose(tail[rows][:, levels, :], (0, 2, 1))
        violated = lhs > rhs
        n_checked += lhs.size
        n_violations += int(violated.sum())
        positive = rhs > 0
        if np.any(positive):
            max_ratio = max(max_ratio, float(np.max(lhs[positive] / rhs[positive])))
        if first_violation is None and np.any(violated):
            r, t, k = np.argwhere(violated)[0]
            first_violation = {
                "replication": int(rows.start + r),
                "time_index": int(t),
                "x": grid.points[pairs.first[k]].tolist(),
                "y": grid.points[pairs.second[k]].tolist(),
                "lhs": float(lhs[r, t, k]),
                "rhs": float(rhs[r, t, k]),
            }

    if n_violations:
        logger.warning(f"路径链式不等式出现 {n_violations} 次违反")
    return PathwiseCheckReport(n_checked=n_checked, n_violations=n_violations, max_ratio=max_ratio,
                               power=power, first_violation=first_violation)


# ==================== 半范数与链式上界 ====================

def _modulus_weights(phi: ModulusFunction, distances: np.ndarray, exponent: float) -> np.ndarray:
    phi_values = np.asarray(eval_modulus(phi, distances), dtype=float)
    zero = np.flatnonzero(phi_values == 0)
    if zero.size:
        raise DivisionByZeroError(f"φ({distances[zero[0]]}) = 0", {"distance": float(distances[zero[0]])})
    return np.power(phi_values, -exponent)


def seminorm_by_time(field: FieldSample, phi: ModulusFunction, alpha: float,
                     probe_pairs: Optional[PairSet] = None) -> np.ndarray:
    """
    每个 (复制, 时间) 上 max_{pairs} ‖X_t(x)−X_t(y)‖/φ^α(|x−y|)

    Returns:
        形状 (复制, 时间)
    """
    if not alpha > 0:
        raise ValueError(f"alpha 必须为正数: {alpha}")
    probe_pairs = all_grid_pairs(field.grid) if probe_pairs is None else probe_pairs
    if np.any(probe_pairs.squared_numerator_distance == 0):
        raise ValueError("探测点对必须满足 x ≠ y")
    weights = _modulus_weights(phi, probe_pairs.distance, alpha)

    result = np.empty((field.n_rep, field.n_time))
    for rows in _replication_chunks(field.n_rep):
        increments = _pair_increments(field, probe_pairs.first, probe_pairs.second, rows)
        result[rows] = (increments * weights).max(axis=-1)
    return result


def seminorm(field: FieldSample, phi: ModulusFunction, alpha: float,
             probe_pairs: Optional[PairSet] = None) -> np.ndarray:
    """
    经验半范数 [X]_{α,φ}：每个复制在时间网格和探测点对上的上确界

    这是连续统上确界的下界。

    Args:
        field: 场样本
        phi: 连续模数
        alpha: 指数 α > 0
        probe_pairs: 探测点对，缺省为全部网格点对

    Returns:
        每个复制一个值
    """
    return seminorm_by_time(field, phi, alpha, probe_pairs).max(axis=1)


@dataclass
class ChainBound:
    values: np.ndarray
    C_d: float
    ratio_sup: float
    i_max: int


def chaining_constant(phi: ModulusFunction, exponent: float, d: int, i_max: int) -> Tuple[float, float]:
    """
    C(d) = 2d(d+1)·sup_{m<i_max} (φ(2^{-m})/φ(2^{-m-1}))^{exponent}

    Returns:
        (C(d), 比值上确界)；φ(2^{-m-1}) = 0 时为 +∞
    """
    if i_max == 0:
        return 2.0 * d * (d + 1), 1.0
    values = modulus_at_dyadic(phi, np.arange(i_max + 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.power(values[:-1] / values[1:], exponent)
    ratios = np.where(values[1:] == 0, np.inf, ratios)
    ratio_sup = float(np.max(ratios))
    return 2.0 * d * (d + 1) * ratio_sup, ratio_sup


def chaining_bound(K: np.ndarray, phi: ModulusFunction, alpha: float, d: int,
                   i_max: Optional[int] = None, gamma: Optional[float] = None) -> ChainBound:
    """
    C(d)·Σ_{i=0}^{i_max} φ^{-α}(2^{-i})·K_i(t)

    gamma 给出时使用 γ 次幂版本：C(d)·Σ φ^{-αγ}(2^{-i})·K_i^γ(t)。

    Args:
        K: 逐层增量表 (复制, 层级, 时间)
        phi: 连续模数
        alpha: 指数 α
        d: 空间维数
        i_max: 求和上限，不得超过场的 m_max
        gamma: 幂次模式的 γ

    Returns:
        ChainBound，values 形状 (复制, 时间)
    """
    if not alpha > 0:
        raise ValueError(f"alpha 必须为正数: {alpha}")
    n_levels = K.shape[1]
    i_max = n_levels - 1 if i_max is None else int(i_max)
    if not 0 <= i_max < n_levels:
        raise ValueError(f"i_max={i_max} 超出场的层级数 {n_levels}")

    exponent = alpha if gamma is None else alpha * gamma
    terms = K[:, :i_max + 1, :] if gamma is None else np.power(K[:, :i_max + 1, :], gamma)
    phi_values = modulus_at_dyadic(phi, np.arange(i_max + 1))
    with np.errstate(divide="ignore"):
        weights = np.power(phi_values, -exponent)
    weighted = np.where(terms == 0, 0.0, terms * weights[None, :, None])
    C_d, ratio_sup = chaining_constant(phi, exponent, d, i_max)

    values = weighted.sum(axis=1)
    with np.errstate(invalid="ignore"):
        values = np.where(values == 0, 0.0, C_d * values)
    return ChainBound(values=values, C_d=C_d, ratio_sup=ratio_sup, i_max=i_max)


def general_alpha_factor(phi: ModulusFunction, alpha: float, alpha_max: float, d: int) -> float:
    """
    从 α_max = 1/γ−ϑ 推到更小 α 时的放大因子

    φ(√d) ≤ 1 时因子为 1，否则为 φ^{α_max}(√d) + 1（取 φ(r̃)=1 的上确界/下确界形式）。

    Returns:
        因子，满足 [X]_{α,φ} ≤ 因子·[X]_{α_max,φ}
    """
    if not 0 < alpha <= alpha_max:
        raise ValueError(f"需要 0 < alpha ≤ alpha_max: alpha={alpha}, alpha_max={alpha_max}")
    phi_diameter = float(eval_modulus(phi, math.sqrt(d)))
    if phi_diameter <= 1.0:
        return 1.0
    return phi_diameter ** alpha_max + 1.0


# ==================== 链式报告 ====================

@dataclass
class ChainingReport:
    K: np.ndarray
    seminorm_by_time: np.ndarray
    chain_bound_by_time: np.ndarray
    alpha: float
    C_d: float
    gamma: Optional[float]
    pathwise: PathwiseCheckReport
    n_probe_pairs: int

    @property
    def seminorm_empirical(self) -> np.ndarray:
        return self.seminorm_by_time.max(axis=1)

    @property
    def chain_bound(self) -> np.ndarray:
        return self.chain_bound_by_time.max(axis=1)

    @property
    def bound_holds_by_time(self) -> np.ndarray:
        lhs = self.seminorm_by_time if self.gamma is None else np.power(self.seminorm_by_time, self.gamma)
        return lhs <= self.chain_bound_by_time

    @property
    def bound_holds(self) -> bool:
        return bool(np.all(self.bound_holds_by_time))

    def increments_frame(self) -> pd.DataFrame:
        """列: replication, level, time_index, K_value"""
        n_rep, n_levels, n_time = self.K.shape
        rep, level, time_index = np.meshgrid(np.arange(n_rep), np.arange(n_levels), np.arange(n_time),
                                             indexing="ij")
        return pd.DataFrame({
            "replication": rep.reshape(-1),
            "level": level.reshape(-1),
            "time_index": time_index.reshape(-1),
            "K_value": self.K.reshape(-1),
        })

    def bounds_frame(self) -> pd.DataFrame:
        """列: replication, time_index, seminorm, bound, holds"""
        n_rep, n_time = self.seminorm_by_time.shape
        rep, time_index = np.meshgrid(np.arange(n_rep), np.arange(n_time), indexing="ij")
        return pd.DataFrame({
            "replication": rep.reshape(-1),
            "time_index": time_index.reshape(-1),
            "seminorm": self.seminorm_by_time.reshape(-1),
            "bound": self.chain_bound_by_time.reshape(-1),
            "holds": self.bound_holds_by_time.reshape(-1),
        })

    def to_dict(self) -> Dict[str, Any]:
        return {
            "alpha": self.alpha,
            "C_d": self.C_d,
            "gamma_power_mode": self.gamma,
            "n_replications": int(self.K.shape[0]),
            "n_levels": int(self.K.shape[1]),
            "n_times": int(self.K.shape[2]),
            "n_probe_pairs": self.n_probe_pairs,
            "seminorm_empirical": self.seminorm_empirical.tolist(),
            "chain_bound": self.chain_bound.tolist(),
            "bound_holds": self.bound_holds,
            "pathwise": self.pathwise.to_dict(),
            "sup_is_lower_bound": True,
        }


def chaining_report(field: FieldSample, phi: ModulusFunction, alpha: float,
                    gamma: Optional[float] = None, probe_pairs: Optional[PairSet] = None) -> ChainingReport:
    """
    组装链式报告：K 表、经验半范数、链式上界和路径不等式检查

    Args:
        field: 场样本
        phi: 连续模数
        alpha: 指数 α（一般取 1/γ−ϑ）
        gamma: γ<1 时启用幂次模式
        probe_pairs: 探测点对

    Returns:
        ChainingReport
    """
    power = gamma if gamma is not None and gamma < 1 else None
    K = level_increment_table(field)
    probe_pairs = all_grid_pairs(field.grid) if probe_pairs is None else probe_pairs
    by_time = seminorm_by_time(field, phi, alpha, probe_pairs)
    bound = chaining_bound(K, phi, alpha, field.d, gamma=power)
    pathwise = verify_pathwise_chaining(field, K=K, power=power, pairs=probe_pairs)
    return ChainingReport(K=K, seminorm_by_time=by_time, chain_bound_by_time=bound.values, alpha=float(alpha),
                          C_d=bound.C_d, gamma=power, pathwise=pathwise,
                          n_probe_pairs=int(probe_pairs.first.size))


# ==================== 矩假设检验 ====================

def scale_probe_pairs(grid: DyadicGrid, pair_budget: int) -> Tuple[PairSet, np.ndarray]:
    """
    沿第一坐标轴、在每个二进间距 2^{-j} 上均匀选取点对

    Returns:
        (PairSet, 每个点对的尺度编号 j)
    """
    n_scales = grid.m + 1
    per_scale = max(1, pair_budget // n_scales)
    stride0 = grid.side ** (grid.d - 1)
    firsts, seconds, scales = [], [], []
    index = np.arange(grid.size, dtype=np.int64)
    for j in range(n_scales):
        offset = 2 ** (grid.m - j)
        candidates = index[grid.numerators[:, 0] + offset <= 2 ** grid.m]
        chosen = np.unique(np.linspace(0, candidates.size - 1, num=min(per_scale, candidates.size)).astype(np.int64))
        firsts.append(candidates[chosen])
        seconds.append(candidates[chosen] + offset * stride0)
        scales.append(np.full(chosen.size, j, dtype=np.int64))
    return make_pair_set(grid, np.concatenate(firsts), np.concatenate(seconds)), np.concatenate(scales)


def _moment_estimates(field: FieldSample, gamma: float, pairs: PairSet) -> np.ndarray:
    """Ê[sup_t ‖X_t(x)−X_t(y)‖^γ]，每个点对一个值"""
    total = np.zeros(pairs.first.size)
    for rows in _replication_chunks(field.n_rep):
        increments = _pair_increments(field, pairs.first, pairs.second, rows).max(axis=1)
        total += np.power(increments, gamma).sum(axis=0)
    return total / field.n_rep


@dataclass
class MomentHypothesisReport:
    gamma: float
    n_rep: int
    n_pairs: int
    separations: List[float]
    estimates: List[float]
    envelope: List[float]
    slope: Optional[float]
    slope_vs_distance: Optional[float]
    intercept: Optional[float]
    C_hat: Optional[float]
    worst_ratio: float
    consistent: bool
    slope_tol: float
    note: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "gamma": self.gamma,
            "n_rep": self.n_rep,
            "n_pairs": self.n_pairs,
            "separations": self.separations,
            "estimates": self.estimates,
            "envelope": self.envelope,
            "slope": self.slope,
            "slope_vs_distance": self.slope_vs_distance,
            "intercept": self.intercept,
            "C_hat": self.C_hat,
            "worst_ratio": self.worst_ratio,
            "consistent": self.consistent,
            "slope_tol": self.slope_tol,
            "note": self.note,
        }


def _pooled_by_scale(estimates: np.ndarray, scales: np.ndarray, distances: np.ndarray):
    unique_scales = np.unique(scales)
    pooled = np.array([estimates[scales == j].mean() for j in unique_scales])
    separation = np.array([distances[scales == j][0] for j in unique_scales])
    return separation, pooled


def moment_hypothesis_check(field: FieldSample, gamma: float, phi: ModulusFunction,
                            pair_budget: Optional[int] = None,
                            slope_tol: Optional[float] = None) -> MomentHypothesisReport:
    """
    蒙特卡罗检验 E[sup_t ‖X_t(x)−X_t(y)‖^γ] ≤ C|x−y|^d φ(|x−y|)

    Args:
        field: 场样本
        gamma: 矩指数 γ
        phi: 连续模数
        pair_budget: 点对预算，按二进尺度均分
        slope_tol: 斜率容差

    Returns:
        MomentHypothesisReport
    """
    if field.n_rep < 2:
        raise InsufficientReplicationsError(f"至少需要 2 个复制，实际 {field.n_rep}", {"n_rep": field.n_rep})
    pair_budget = CHAINING_CONFIG["pair_budget"] if pair_budget is None else int(pair_budget)
    slope_tol = CHAINING_CONFIG["slope_tol"] if slope_tol is None else float(slope_tol)

    pairs, scales = scale_probe_pairs(field.grid, pair_budget)
    estimates = _moment_estimates(field, gamma, pairs)
    envelope = np.power(pairs.distance, field.d) * np.asarray(eval_modulus(phi, pairs.distance))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(estimates == 0, 0.0, estimates / envelope)
    worst_ratio = float(np.max(ratios))

    separation, pooled = _pooled_by_scale(estimates, scales, pairs.distance)
    pooled_envelope = np.power(separation, field.d) * np.asarray(eval_modulus(phi, separation))

    report = MomentHypothesisReport(
        gamma=float(gamma), n_rep=field.n_rep, n_pairs=int(pairs.first.size),
        separations=separation.tolist(), estimates=pooled.tolist(), envelope=pooled_envelope.tolist(),
        slope=None, slope_vs_distance=None, intercept=None, C_hat=None,
        worst_ratio=worst_ratio, consistent=False, slope_tol=slope_tol,
    )

    if np.all(pooled == 0):
        report.consistent = True
        report.note = "全部增量为零"
        return report

    try:
        fit = loglog_fit(pooled_envelope, pooled)
        report.slope_vs_distance = loglog_fit(separation, pooled).slope
    except DegenerateFitError as e:
        report.note = f"无法拟合: {e}"
        return report

    report.slope, report.intercept, report.C_hat = fit.slope, fit.intercept, fit.constant
    report.consistent = bool(fit.slope >= 1.0 - slope_tol and np.isfinite(worst_ratio))
    return report


@dataclass
class HolderFit:
    epsilon_hat: float
    C_hat: float
    slope: float
    separations: List[float]
    estimates: List[float]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epsilon_hat": self.epsilon_hat,
            "C_hat": self.C_hat,
            "slope": self.slope,
            "separations": self.separations,
            "estimates": self.estimates,
        }


def holder_exponent_fit(field: FieldSample, gamma: float, pair_budget: Optional[int] = None) -> HolderFit:
    """
    拟合 log Ê[sup_t‖ΔX‖^γ] = log C + (d+ε)·log|x−y|

    Returns:
        HolderFit，ε̂ = 斜率 − d
    """
    if field.n_rep < 2:
        raise InsufficientReplicationsError(f"至少需要 2 个复制，实际 {field.n_rep}", {"n_rep": field.n_rep})
    pair_budget = CHAINING_CONFIG["pair_budget"] if pair_budget is None else int(pair_budget)
    pairs, scales = scale_probe_pairs(field.grid, pair_budget)
    estimates = _moment_estimates(field, gamma, pairs)
    separation, pooled = _pooled_by_scale(estimates, scales, pairs.distance)
    fit = loglog_fit(separation, pooled)
    return HolderFit(epsilon_hat=fit.slope - field.d, C_hat=fit.constant, slope=fit.slope,
                     separations=separation.tolist(), estimates=pooled.tolist())
