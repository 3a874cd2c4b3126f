"""
观点聚类检测

聚类 = 连接图（s(x_i,x_j) > 0 即连边）的连通分量。
"""

from dataclasses import dataclass
from typing import Dict, List, Tuple

import networkx as nx
import numpy as np

from pyodrs.core.errors import ContractViolation
from pyodrs.core.kernels import KernelConfig, connectivity_matrix


@dataclass(frozen=True)
class ClusterPartition:
    """聚类划分：每个用户的聚类编号（0起连续）"""
    assignments: Tuple[int, ...]
    count: int

    def __post_init__(self):
        if self.count < 1 or sorted(set(self.assignments)) != list(range(self.count)):
            raise ContractViolation("聚类编号必须为 0..count-1 的连续整数")

    def members(self) -> Dict[int, List[int]]:
        """聚类编号 -> 成员下标列表"""
        groups: Dict[int, List[int]] = {}
        for user, label in enumerate(self.assignments):
            groups.setdefault(label, []).append(user)
        return groups


def connection_graph(X, cfg: KernelConfig) -> nx.Graph:
    """构建无向连接图"""
    values = getattr(X, "values", X)
    values = np.asarray(values, dtype=float)
    S = connectivity_matrix(values, cfg)
    graph = nx.Graph()
    graph.add_nodes_from(range(values.shape[0]))
    rows, cols = np.nonzero(np.triu(S, k=1))
    graph.add_edges_from(zip(rows.tolist(), cols.tolist()))
    return graph


def clusters(X, cfg: KernelConfig) -> ClusterPartition:
    """
    检测观点聚类

    按成员最小下标排序分量，保证编号确定。
    """
    graph = connection_graph(X, cfg)
    components = sorted((sorted(c) for c in nx.connected_components(graph)), key=lambda c: c[0])
    assignments = [0] * graph.number_of_nodes()
    for label, component in enumerate(components):
        for user in component:
            assignments[user] = label
    return ClusterPartition(assignments=tuple(assignments), count=len(components))
