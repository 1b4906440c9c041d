"""
场生成器
内置的测试随机场，每个都有闭式矩：
线性场 X(x)=c·x、常数场、空间布朗场 B(x)（d=1，时间冻结）和随机缩放场 ξ·x
"""

import logging
from typing import Any, Callable, Dict, Optional

import numpy as np

from ..config import CHAINING_CONFIG
from ..core.chaining import FieldSample, NormKind, build_grid
from ..utils.parallel import map_replications

logger = logging.getLogger(__name__)


class FieldGenerator:
    """
    场生成器类
    在 D_{m_max} 上生成 FieldSample，所有场在时间方向上冻结
    """

    def __init__(self, d: int, m_max: int, n_time: int = 1, norm: str = CHAINING_CONFIG["default_norm"],
                 n_threads: Optional[int] = None):
        """
        初始化场生成器

        Args:
            d: 空间维数
            m_max: 网格层级
            n_time: 时间网格点数（[0,1] 上等距）
            norm: H 上的范数
            n_threads: 并行线程数
        """
        self.d = d
        self.m_max = m_max
        self.grid = build_grid(d, m_max)
        self.time_grid = np.linspace(0.0, 1.0, n_time) if n_time > 1 else np.zeros(1)
        self.norm = NormKind(norm)
        self.n_threads = n_threads

    def _frozen(self, per_replication: np.ndarray, seed: Optional[int]) -> FieldSample:
        """(复制, 网格点, h_dim) → 在时间方向上复制"""
        values = np.broadcast_to(per_replication[:, None, :, :],
                                 (per_replication.shape[0], self.time_grid.size) + per_replication.shape[1:])
        return FieldSample(d=self.d, m_max=self.m_max, time_grid=self.time_grid, values=np.array(values),
                           norm=self.norm, seed=seed)

    def linear(self, n_rep: int = 1, scale: float = 1.0) -> FieldSample:
        """X(x) = scale·x，h_dim = d"""
        points = self.grid.points * scale
        return self._frozen(np.repeat(points[None, :, :], n_rep, axis=0), None)

    def constant(self, n_rep: int = 1, value: float = 1.0, h_dim: int = 1) -> FieldSample:
        """X(x) ≡ value"""
        return self._frozen(np.full((n_rep, self.grid.size, h_dim), float(value)), None)

    def brownian(self, n_rep: int, seed: int) -> FieldSample:
        """
        空间布朗运动 B(x)，x ∈ [0,1]，B(0) = 0

        E|B(x)−B(y)|^γ 有闭式，例如 E|ΔB|⁴ = 3|Δx|²。
        """
        if self.d != 1:
            raise ValueError(f"布朗场只支持 d=1: {self.d}")
        n_steps = 2 ** self.m_max
        step_std = np.sqrt(1.0 / n_steps)

        def one_replication(index: int, rng: np.random.Generator) -> np.ndarray:
            increments = rng.standard_normal(n_steps) * step_std
            return np.concatenate([[0.0], np.cumsum(increments)])

        logger.info(f"🚀 生成布朗场: {n_rep} 个复制, m_max={self.m_max}")
        paths = map_replications(one_replication, n_rep, seed, n_threads=self.n_threads, desc="brownian")
        return self._frozen(np.stack(paths)[:, :, None], seed)

    def scaled_noise(self, n_rep: int, seed: int) -> FieldSample:
        """X(x) = ξ·x，ξ ~ N(0,1) 每个复制一个，E|ΔX|² = |Δx|²"""
        points = self.grid.points

        def one_replication(index: int, rng: np.random.Generator) -> np.ndarray:
            return rng.standard_normal() * points

        paths = map_replications(one_replication, n_rep, seed, n_threads=self.n_threads, desc="scaled_noise")
        return self._frozen(np.stack(paths), seed)

    def generate(self, name: str, n_rep: int, seed: int, params: Optional[Dict[str, Any]] = None) -> FieldSample:
        """
        按名称生成场

        Args:
            name: linear / constant / brownian / scaled_noise
            n_rep: 复制数
            seed: 主种子
            params: 生成器参数

        Returns:
            FieldSample
        """
        params = params or {}
        builders: Dict[str, Callable[[], FieldSample]] = {
            "linear": lambda: self.linear(n_rep, float(params.get("scale", 1.0))),
            "constant": lambda: self.constant(n_rep, float(params.get("value", 1.0)), int(params.get("h_dim", 1))),
            "brownian": lambda: self.brownian(n_rep, seed),
            "scaled_noise": lambda: self.scaled_noise(n_rep, seed),
        }
        if name not in builders:
            raise ValueError(f"未知的场生成器: {name}，可选 {sorted(builders)}")
        if n_rep < 1:
            raise ValueError(f"复制数必须 ≥ 1: {n_rep}")
        sample = builders[name]()
        sample.seed = seed
        return sample


FIELD_NAMES = ("linear", "constant", "brownian", "scaled_noise")
