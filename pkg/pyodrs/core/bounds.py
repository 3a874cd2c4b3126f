"""
聚类数量的理论上界

距离法：覆盖数网格构造，每个网格单元至多容纳一个收敛观点。
角度法：球面编码问题，m=2为圆周等分，m=3默认使用Toth界，
也可以读入已知球面编码表。
"""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

from pyodrs.core.errors import ContractViolation, DomainError, NoBoundAvailableError
from pyodrs.core.kernels import SimilarityMethod

# Toth界与弦长比较时的浮点容差（N=6时两者理论上相等）
CHORD_TOL = 1e-12
# 1/tau 本应为整数时，1-epsilon 的舍入误差会使其略小于该整数
GRID_TOL = 1e-9


@dataclass(frozen=True)
class SphericalCodeTable:
    """球面编码表：维度m下 (点数N, 最小夹角theta弧度)"""
    dimension: int
    entries: Tuple[Tuple[int, float], ...]

    def __post_init__(self):
        if self.dimension < 2:
            raise ContractViolation(f"球面编码表维度至少为2，当前为 {self.dimension}")
        for (n_prev, t_prev), (n_next, t_next) in zip(self.entries, self.entries[1:]):
            if n_next <= n_prev:
                raise ContractViolation(f"点数必须严格递增: {n_prev} -> {n_next}")
            if t_next >= t_prev:
                raise ContractViolation(f"最小夹角必须严格递减: N={n_prev} -> N={n_next}")

    def largest_count_above(self, theta: float) -> Optional[int]:
        """最小夹角严格大于theta的最大点数，不存在时返回None"""
        best = None
        for count, angle in self.entries:
            if angle > theta:
                best = count
        return best


def load_spherical_code_table(path: Union[str, Path], dimension: int) -> SphericalCodeTable:
    """
    读取球面编码表

    文件格式：UTF-8文本，每行 `N<TAB>theta_degrees`，N升序，`#` 开头为注释。
    相同夹角的多行只保留最大的N。

    Args:
        path: 表文件路径
        dimension: 表对应的维度m

    Returns:
        SphericalCodeTable
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise OSError(f"无法读取球面编码表 {path}: {e}") from e

    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ContractViolation(f"{path} 第{lineno}行格式错误，应为 N<TAB>theta_degrees")
        try:
            count, degrees = int(parts[0]), float(parts[1])
        except ValueError:
            raise ContractViolation(f"{path} 第{lineno}行无法解析: {raw!r}")
        rows.append((count, math.radians(degrees)))

    collapsed = []
    for count, angle in rows:
        if collapsed and collapsed[-1][1] == angle:
            collapsed[-1] = (count, angle)
        else:
            collapsed.append((count, angle))
    return SphericalCodeTable(dimension=dimension, entries=tuple(collapsed))


def distance_cluster_bound(epsilon: float, m: int, n: int, literal: bool = False) -> int:
    """
    距离法聚类数上界

    tau = 1-epsilon，i_bar = floor(1/tau + 1)（带GRID_TOL容差）。默认返回网格单元数 min(i_bar^m, n)；
    literal=True 时只按单维计数，返回 min(i_bar, n)。
    """
    _check_ranges(epsilon, m, n)
    tau = 1.0 - epsilon
    if tau <= 0.0:
        return n
    i_bar = int(math.floor(1.0 / tau + 1.0 + GRID_TOL))
    cells = i_bar if literal else i_bar ** m
    return min(cells, n)


def toth_min_distance(N: int) -> float:
    """单位球面上N个点最小弦距的Toth上界 sqrt(4 - csc^2(N*pi / (6(N-2))))"""
    if N < 3:
        raise DomainError(f"Toth界要求 N >= 3，当前为 {N}")
    csc = 1.0 / math.sin(N * math.pi / (6.0 * (N - 2)))
    return math.sqrt(max(4.0 - csc * csc, 0.0))


def angle_cluster_bound(epsilon: float, m: int, n: int,
                        table: Optional[SphericalCodeTable] = None) -> int:
    """
    角度法聚类数上界

    theta* = arccos(epsilon)。m=2 用圆周等分；m=3 无表时用Toth界升序搜索；
    提供表时取夹角严格大于theta*的最大点数。

    Raises:
        NoBoundAvailableError: m>3 且未提供球面编码表
    """
    _check_ranges(epsilon, m, n)
    if m < 2:
        raise ContractViolation(f"角度法上界要求 m >= 2，当前为 {m}")
    theta = math.acos(min(max(epsilon, 0.0), 1.0))
    if theta == 0.0:
        return n

    if table is not None:
        if table.dimension != m:
            raise ContractViolation(f"球面编码表维度为 {table.dimension}，与 m={m} 不一致")
        count = table.largest_count_above(theta)
        return min(count if count is not None else 1, n)

    if m == 2:
        return min(int(math.floor(2.0 * math.pi / theta)), n)

    if m == 3:
        chord = 2.0 * math.sin(theta / 2.0)
        if toth_min_distance(3) < chord - CHORD_TOL:
            return min(2, n)
        count = 3
        while count < n and toth_min_distance(count + 1) >= chord - CHORD_TOL:
            count += 1
        return min(count, n)

    raise NoBoundAvailableError(f"m={m} 时没有解析上界，请提供球面编码表")


def cluster_bound(method: SimilarityMethod, epsilon: float, m: int, n: int,
                  table: Optional[SphericalCodeTable] = None) -> int:
    """按核函数类型分派聚类上界"""
    if SimilarityMethod(method) is SimilarityMethod.DISTANCE:
        return distance_cluster_bound(epsilon, m, n)
    return angle_cluster_bound(epsilon, m, n, table)


def epsilon_grid(points: int, low: float = 0.0, high: float = 1.0) -> Sequence[float]:
    """均匀epsilon网格（含端点）"""
    if points < 1:
        raise ContractViolation("网格点数必须为正")
    if points == 1:
        return [low]
    width = (high - low) / (points - 1)
    return [min(low + i * width, high) for i in range(points)]


def _check_ranges(epsilon: float, m: int, n: int):
    if not 0.0 <= epsilon <= 1.0:
        raise ContractViolation(f"epsilon必须在[0,1]内，当前为 {epsilon}")
    if m < 1 or n < 1:
        raise ContractViolation(f"m和n必须为正整数，当前为 m={m}, n={n}")
