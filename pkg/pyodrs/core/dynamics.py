"""
ODRS自治动力学

X(k+1) = diag(S 1)^-1 S X(k)，其中S由当前观点经截断核重新计算。
"""

from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Optional

import numpy as np

from pyodrs.core.clusters import clusters
from pyodrs.core.errors import ContractViolation
from pyodrs.core.kernels import KernelConfig, connectivity_matrix

DEFAULT_TOL = 1e-9
DEFAULT_MAX_STEPS = 10_000


@dataclass(frozen=True, eq=False)
class OpinionMatrix:
    """n×m观点矩阵，每个元素位于[0,1]"""
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ContractViolation(f"观点矩阵必须是非空二维数组，当前形状为 {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ContractViolation("观点矩阵包含非有限值")
        if values.min() < 0.0 or values.max() > 1.0:
            raise ContractViolation(
                f"观点取值必须在[0,1]内，当前范围为 [{values.min()}, {values.max()}]"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape

    def row(self, i: int) -> np.ndarray:
        return self.values[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, OpinionMatrix):
            return NotImplemented
        return self.values.shape == other.values.shape and bool(np.array_equal(self.values, other.values))

    def __repr__(self) -> str:
        return f"OpinionMatrix(n={self.n}, m={self.m})"


class DiameterResult(NamedTuple):
    """直径及退化标记（全零矩阵时为True）"""
    value: float
    degenerate: bool


@dataclass
class Trajectory:
    """观点演化轨迹"""
    snapshots: List[OpinionMatrix]
    diameters: List[float]
    cluster_counts: List[int] = field(default_factory=list)
    terminated: bool = False
    termination_step: Optional[int] = None

    def __post_init__(self):
        if not self.snapshots:
            raise ContractViolation("轨迹至少包含一个快照")
        if len(self.diameters) != len(self.snapshots):
            raise ContractViolation("直径序列长度必须与快照数一致")
        if self.terminated and (self.termination_step is None
                                or self.termination_step >= len(self.snapshots)):
            raise ContractViolation("终止步必须小于快照数")

    @property
    def final(self) -> OpinionMatrix:
        return self.snapshots[-1]

    @property
    def steps(self) -> int:
        return len(self.snapshots) - 1

    def as_array(self) -> np.ndarray:
        """(K, n, m) 数组"""
        return np.stack([s.values for s in self.snapshots])


def _values(X) -> np.ndarray:
    return X.values if isinstance(X, OpinionMatrix) else np.asarray(X, dtype=float)


def weight_matrix(X: OpinionMatrix, cfg: KernelConfig) -> np.ndarray:
    """
    归一化权重 w_ij = s(x_i,x_j) / sum_j s(x_i,x_j)

    求和包含j=i，自环保证分母为正。
    """
    S = connectivity_matrix(_values(X), cfg)
    row_sums = S.sum(axis=1, keepdims=True)
    assert np.all(row_sums > 0), "自环规则保证每行分母为正"
    return S / row_sums


def step(X: OpinionMatrix, cfg: KernelConfig) -> OpinionMatrix:
    """单步演化 X' = diag(S1)^-1 S X"""
    values = _values(X)
    S = connectivity_matrix(values, cfg)
    degree = S.sum(axis=1)
    assert np.all(degree > 0), "自环规则保证每行分母为正"
    # 先求和再相除：评分网格上的平均可以精确表示
    updated = (S @ values) / degree[:, None]
    # 凸组合在舍入下可能越界一个ulp
    np.clip(updated, 0.0, 1.0, out=updated)
    return OpinionMatrix(updated)


def diameter(X: OpinionMatrix) -> DiameterResult:
    """
    观点集合直径：非零观点两两夹角的最大值（弧度）

    夹角用 2*atan2(|a-b|, |a+b|)（a、b为单位向量）计算，平行向量精确为0。
    """
    values = _values(X)
    norms = np.sqrt(np.sum(values * values, axis=1))
    nonzero = norms > 0
    if not np.any(nonzero):
        return DiameterResult(0.0, True)
    if np.count_nonzero(nonzero) == 1:
        return DiameterResult(0.0, False)
    unit = values[nonzero] / norms[nonzero][:, None]
    diff = unit[:, None, :] - unit[None, :, :]
    summ = unit[:, None, :] + unit[None, :, :]
    angles = 2.0 * np.arctan2(np.sqrt(np.sum(diff * diff, axis=2)),
                              np.sqrt(np.sum(summ * summ, axis=2)))
    return DiameterResult(float(angles.max()), False)


def connection_pattern(X: OpinionMatrix, cfg: KernelConfig) -> np.ndarray:
    """连接矩阵的零/非零模式"""
    return connectivity_matrix(_values(X), cfg) > 0


def simulate(X0: OpinionMatrix, cfg: KernelConfig,
             max_steps: int = DEFAULT_MAX_STEPS, tol: float = DEFAULT_TOL,
             record_clusters: bool = True,
             progress: Optional[Callable[[int], None]] = None) -> Trajectory:
    """
    迭代演化直到终止或达到最大步数

    终止判据：相邻两步连接模式不变且观点最大变化小于tol。
    终止时最后一个快照即为终止状态，termination_step为其下标。

    Args:
        X0: 初始观点
        cfg: 核函数配置
        max_steps: 最大步数
        tol: 观点变化容差
        record_clusters: 是否记录每一步的聚类数
        progress: 每步回调（参数为当前步数）

    Returns:
        Trajectory
    """
    if max_steps < 1:
        raise ContractViolation(f"max_steps必须为正整数，当前为 {max_steps}")
    if tol <= 0:
        raise ContractViolation(f"tol必须为正数，当前为 {tol}")

    current = X0 if isinstance(X0, OpinionMatrix) else OpinionMatrix(X0)
    pattern = connection_pattern(current, cfg)
    snapshots = [current]
    diameters = [diameter(current).value]
    counts = [clusters(current, cfg).count] if record_clusters else []

    for k in range(max_steps):
        nxt = step(current, cfg)
        next_pattern = connection_pattern(nxt, cfg)
        change = float(np.max(np.abs(nxt.values - current.values)))
        if change < tol and np.array_equal(pattern, next_pattern):
            return Trajectory(snapshots, diameters, counts, terminated=True, termination_step=k)
        current, pattern = nxt, next_pattern
        snapshots.append(current)
        diameters.append(diameter(current).value)
        if record_clusters:
            counts.append(clusters(current, cfg).count)
        if progress is not None:
            progress(k + 1)

    return Trajectory(snapshots, diameters, counts, terminated=False)
