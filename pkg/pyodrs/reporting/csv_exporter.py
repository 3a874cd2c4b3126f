"""
CSV导出

所有CSV均带表头、LF换行；浮点数以17位有效数字输出，读回时逐位一致。
"""

from pathlib import Path
from typing import List, Sequence, Union

import numpy as np
import pandas as pd

from pyodrs.core.dynamics import Trajectory
from pyodrs.core.errors import ContractViolation
from pyodrs.core.sweep import SweepRow

FLOAT_FORMAT = "%.17g"
TRAJECTORY_COLUMNS = ["k", "user", "dim", "value"]
BOUNDS_COLUMNS = ["epsilon", "observed", "bound"]
CURVE_COLUMNS = ["episode", "reward", "average_reward", "initial_value"]
HISTORY_COLUMNS = ["generation", "best_fitness"]
CONTROLS_COLUMNS = ["k", "propagator", "dim", "value"]

PathLike = Union[str, Path]


def _write_frame(frame: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    try:
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    except OSError as e:
        raise OSError(f"无法写入CSV文件 {path}: {e}") from e
    return path


def _read_frame(path: PathLike, columns: List[str]) -> pd.DataFrame:
    path = Path(path)
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except OSError as e:
        raise OSError(f"无法读取CSV文件 {path}: {e}") from e
    if list(frame.columns) != columns:
        raise ContractViolation(f"{path} 的表头应为 {','.join(columns)}")
    return frame


def _long_format(blocks: np.ndarray, columns: List[str]) -> pd.DataFrame:
    """(K, a, b) 数组 -> 行优先展开的长表"""
    K, a, b = blocks.shape
    k, i, j = np.indices((K, a, b))
    return pd.DataFrame({
        columns[0]: k.ravel(),
        columns[1]: i.ravel(),
        columns[2]: j.ravel(),
        columns[3]: blocks.ravel(),
    })


def export_trajectory_csv(trajectory: Trajectory, path: PathLike) -> Path:
    """轨迹 -> `k,user,dim,value`"""
    return _write_frame(_long_format(trajectory.as_array(), TRAJECTORY_COLUMNS), path)


def read_trajectory_csv(path: PathLike) -> np.ndarray:
    """
    读回轨迹CSV

    Returns:
        (K, n, m) 数组
    """
    frame = _read_frame(path, TRAJECTORY_COLUMNS)
    if frame.empty:
        raise ContractViolation(f"{path} 不包含任何快照")
    shape = (int(frame["k"].max()) + 1, int(frame["user"].max()) + 1, int(frame["dim"].max()) + 1)
    if len(frame) != shape[0] * shape[1] * shape[2]:
        raise ContractViolation(f"{path} 的行数与 k/user/dim 范围不一致")
    values = np.empty(shape)
    values[frame["k"].to_numpy(), frame["user"].to_numpy(), frame["dim"].to_numpy()] = \
        frame["value"].to_numpy(dtype=float)
    return values


def export_bounds_csv(rows: Sequence[SweepRow], path: PathLike) -> Path:
    """epsilon扫描结果 -> `epsilon,observed,bound`"""
    frame = pd.DataFrame([(r.epsilon, r.observed, r.bound) for r in rows], columns=BOUNDS_COLUMNS)
    return _write_frame(frame, path)


def export_training_curve_csv(curve, path: PathLike) -> Path:
    """训练曲线 -> `episode,reward,average_reward,initial_value`"""
    frame = pd.DataFrame({
        "episode": np.arange(1, len(curve.rewards) + 1),
        "reward": curve.rewards,
        "average_reward": curve.average_rewards,
        "initial_value": curve.initial_values,
    }, columns=CURVE_COLUMNS)
    return _write_frame(frame, path)


def export_fitness_history_csv(history: Sequence[float], path: PathLike) -> Path:
    """进化算法逐代最优适应度 -> `generation,best_fitness`"""
    frame = pd.DataFrame({
        "generation": np.arange(1, len(history) + 1),
        "best_fitness": list(history),
    }, columns=HISTORY_COLUMNS)
    return _write_frame(frame, path)


def export_controls_csv(controls: Sequence[np.ndarray], path: PathLike) -> Path:
    """控制序列 -> `k,propagator,dim,value`"""
    if len(controls) == 0:
        return _write_frame(pd.DataFrame(columns=CONTROLS_COLUMNS), path)
    return _write_frame(_long_format(np.stack(controls), CONTROLS_COLUMNS), path)
