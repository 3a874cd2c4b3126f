"""
仿真结果指标
"""

from typing import Any, Dict, List, Sequence

import numpy as np
import pandas as pd

from pyodrs.core.clusters import ClusterPartition
from pyodrs.core.dynamics import OpinionMatrix, Trajectory


def cluster_centers(X: OpinionMatrix, partition: ClusterPartition) -> List[List[float]]:
    """每个聚类的观点均值，按聚类编号排列"""
    values = X.values
    members = partition.members()
    return [values[members[label]].mean(axis=0).tolist() for label in range(partition.count)]


def intra_cluster_spread(X: OpinionMatrix, partition: ClusterPartition) -> float:
    """聚类内部最大欧氏距离（收敛后应接近0）"""
    values = X.values
    spread = 0.0
    for members in partition.members().values():
        block = values[members]
        diff = block[:, None, :] - block[None, :, :]
        spread = max(spread, float(np.sqrt((diff ** 2).sum(axis=2)).max()))
    return spread


def rank_correlation(a: Sequence[float], b: Sequence[float]) -> float:
    """
    Spearman秩相关

    任一序列为常数时返回NaN。
    """
    frame = pd.DataFrame({"a": list(a), "b": list(b)})
    if len(frame) < 2:
        return float("nan")
    return float(frame["a"].corr(frame["b"], method="spearman"))


def bound_slack(observed: Sequence[int], bounds: Sequence[int]) -> Dict[str, Any]:
    """上界与观测值之间的差距统计"""
    gaps = np.asarray(bounds, dtype=float) - np.asarray(observed, dtype=float)
    if gaps.size == 0:
        return {"min_gap": None, "mean_gap": None, "violations": 0}
    return {
        "min_gap": float(gaps.min()),
        "mean_gap": float(gaps.mean()),
        "violations": int((gaps < 0).sum()),
    }


def trajectory_summary(trajectory: Trajectory) -> Dict[str, Any]:
    """轨迹摘要：步数、终止信息、初末直径、初末聚类数"""
    summary: Dict[str, Any] = {
        "steps": trajectory.steps,
        "terminated": trajectory.terminated,
        "termination_step": trajectory.termination_step,
        "initial_diameter": trajectory.diameters[0],
        "final_diameter": trajectory.diameters[-1],
    }
    if trajectory.cluster_counts:
        summary["initial_clusters"] = trajectory.cluster_counts[0]
        summary["final_clusters"] = trajectory.cluster_counts[-1]
    return summary
