"""
epsilon扫描实验：随机初值下观测到的最大聚类数 vs 理论上界
"""

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from pyodrs.core.bounds import SphericalCodeTable, cluster_bound
from pyodrs.core.clusters import clusters
from pyodrs.core.dynamics import DEFAULT_MAX_STEPS, DEFAULT_TOL, OpinionMatrix, simulate
from pyodrs.core.kernels import KernelConfig, SimilarityMethod


@dataclass
class SweepRow:
    """单个epsilon的扫描结果"""
    epsilon: float
    observed: int
    mean_observed: float
    bound: int
    unterminated: int = 0

    @property
    def dominated(self) -> bool:
        return self.observed <= self.bound


def bound_sweep(method: SimilarityMethod, epsilons: Sequence[float], n: int, m: int,
                trials: int, seed: int, table: Optional[SphericalCodeTable] = None,
                max_steps: int = DEFAULT_MAX_STEPS, tol: float = DEFAULT_TOL,
                progress: Optional[Callable[[float], None]] = None) -> List[SweepRow]:
    """
    对每个epsilon运行trials次随机初值仿真，记录终态聚类数与理论上界

    Args:
        method: 核函数类型
        epsilons: epsilon网格
        n, m: 用户数与观点维度
        trials: 每个epsilon的随机试验次数
        seed: 随机种子
        table: 可选球面编码表（角度法）
        progress: 每完成一个epsilon调用一次

    Returns:
        每个epsilon一行的SweepRow列表
    """
    method = SimilarityMethod(method)
    rng = np.random.default_rng(seed)
    rows = []
    for epsilon in epsilons:
        cfg = KernelConfig(method=method, epsilon=float(epsilon))
        counts = []
        unterminated = 0
        for _ in range(trials):
            X0 = OpinionMatrix(rng.uniform(0.0, 1.0, size=(n, m)))
            trajectory = simulate(X0, cfg, max_steps=max_steps, tol=tol, record_clusters=False)
            if not trajectory.terminated:
                unterminated += 1
            counts.append(clusters(trajectory.final, cfg).count)
        rows.append(SweepRow(
            epsilon=float(epsilon),
            observed=max(counts) if counts else 0,
            mean_observed=float(np.mean(counts)) if counts else 0.0,
            bound=cluster_bound(method, float(epsilon), m, n, table),
            unterminated=unterminated,
        ))
        if progress is not None:
            progress(float(epsilon))
    return rows
