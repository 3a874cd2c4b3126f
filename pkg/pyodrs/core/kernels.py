"""
相似度核函数

推荐系统只把"足够相似"的用户推荐给彼此。这里实现两种截断核：
基于欧氏距离的指示函数，以及基于余弦相似度的截断函数。
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Mapping

import numpy as np

from pyodrs.core.errors import ContractViolation


class SimilarityMethod(Enum):
    """相似度度量方式"""
    DISTANCE = "distance"
    ANGLE = "angle"


@dataclass(frozen=True)
class KernelConfig:
    """核函数配置：度量方式 + 阈值epsilon"""
    method: SimilarityMethod
    epsilon: float

    def __post_init__(self):
        if not isinstance(self.method, SimilarityMethod):
            object.__setattr__(self, "method", SimilarityMethod(self.method))
        if not 0.0 <= self.epsilon <= 1.0:
            raise ContractViolation(f"epsilon必须在[0,1]内，当前为 {self.epsilon}")

    def radius(self, m: int) -> float:
        """距离法的连接半径 sqrt(m)*(1-epsilon)"""
        return math.sqrt(m) * (1.0 - self.epsilon)

    @classmethod
    def from_radius(cls, method: SimilarityMethod, radius: float, m: int) -> "KernelConfig":
        """由连接半径反推epsilon（实验中常用半径形式给出参数）"""
        if radius < 0 or radius > math.sqrt(m):
            raise ContractViolation(f"半径必须在[0, sqrt({m})]内，当前为 {radius}")
        return cls(method=SimilarityMethod(method), epsilon=1.0 - radius / math.sqrt(m))

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "KernelConfig":
        return cls(method=SimilarityMethod(data.get("kernel", "distance")),
                   epsilon=float(data.get("epsilon", 0.5)))

    def to_dict(self) -> Dict[str, Any]:
        return {"kernel": self.method.value, "epsilon": self.epsilon}


def _check_pair(a: np.ndarray, b: np.ndarray):
    if a.ndim != 1 or a.shape != b.shape:
        raise ContractViolation(f"观点向量维度不一致: {a.shape} vs {b.shape}")


def euclidean_distance(a, b) -> float:
    """两个观点向量的欧氏距离"""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_pair(a, b)
    return float(np.sqrt(np.sum((a - b) ** 2)))


def cosine_similarity(a, b) -> float:
    """
    余弦相似度

    任一向量范数为0时返回0；自环的特殊处理由调用方负责。
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_pair(a, b)
    norm_a = float(np.sqrt(np.sum(a * a)))
    norm_b = float(np.sqrt(np.sum(b * b)))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    sim = float(np.sum(a * b)) / (norm_a * norm_b)
    return min(max(sim, 0.0), 1.0)


def connectivity(a, b, cfg: KernelConfig) -> float:
    """截断核 s(a, b)，阈值比较包含边界"""
    if cfg.method is SimilarityMethod.DISTANCE:
        a = np.asarray(a, dtype=float)
        return 1.0 if euclidean_distance(a, b) <= cfg.radius(a.shape[0]) else 0.0
    sim = cosine_similarity(a, b)
    return sim if sim >= cfg.epsilon else 0.0


def pairwise_distances(X: np.ndarray) -> np.ndarray:
    """n×n距离矩阵，逐元素相减保证严格对称"""
    diff = X[:, None, :] - X[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=2))


def pairwise_cosine(X: np.ndarray) -> np.ndarray:
    """
    n×n余弦相似度矩阵

    零向量行与其他行相似度为0，对角线统一为1（自环规则）。
    """
    norms = np.sqrt(np.sum(X * X, axis=1))
    dots = np.sum(X[:, None, :] * X[None, :, :], axis=2)
    denom = norms[:, None] * norms[None, :]
    sims = np.zeros_like(dots)
    nonzero = denom > 0
    sims[nonzero] = dots[nonzero] / denom[nonzero]
    np.clip(sims, 0.0, 1.0, out=sims)
    np.fill_diagonal(sims, 1.0)
    return sims


def connectivity_matrix(X: np.ndarray, cfg: KernelConfig, others: np.ndarray = None) -> np.ndarray:
    """
    计算截断核矩阵S

    Args:
        X: n×m 用户观点
        cfg: 核函数配置
        others: 可选的 k×m 额外观点（传播者），给出时返回 n×(n+k)

    Returns:
        S[i, j] = s(x_i, y_j)，其中y为X与others的拼接
    """
    X = np.asarray(X, dtype=float)
    n, m = X.shape
    points = X if others is None else np.vstack([X, np.asarray(others, dtype=float)])
    if cfg.method is SimilarityMethod.DISTANCE:
        dist = pairwise_distances(points)[:n]
        S = (dist <= cfg.radius(m)).astype(float)
        # 自身距离恒为0
        S[np.arange(n), np.arange(n)] = 1.0
        return S
    sims = pairwise_cosine(points)[:n]
    return np.where(sims >= cfg.epsilon, sims, 0.0)
