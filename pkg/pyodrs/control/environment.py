"""
带传播者的受控ODRS环境

推荐系统把传播者观点u_j与用户观点同等对待：
X(k+1) = Wx X(k) + Wu U(k)，其中 [Wx | Wu] 按行归一化。
传播者不受用户影响，U是外部输入。
"""

from dataclasses import dataclass, field, replace
from typing import Any, Callable, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from pyodrs.core.dynamics import OpinionMatrix, Trajectory, diameter, step
from pyodrs.core.errors import ContractViolation
from pyodrs.core.kernels import KernelConfig, SimilarityMethod, connectivity_matrix

# 默认目标观点
EXEMPLAR_TARGET = (0.8147, 0.9058, 0.1270)
PSD_TOL = 1e-12


def _check_psd(name: str, matrix: np.ndarray, m: int):
    if matrix.shape != (m, m):
        raise ContractViolation(f"{name} 形状应为 ({m}, {m})，当前为 {matrix.shape}")
    if not np.allclose(matrix, matrix.T, rtol=0.0, atol=PSD_TOL):
        raise ContractViolation(f"{name} 必须对称")
    if np.linalg.eigvalsh(matrix).min() < -PSD_TOL:
        raise ContractViolation(f"{name} 必须半正定")


@dataclass(frozen=True, eq=False)
class ControlConfig:
    """操控问题配置"""
    n_propagators: int
    horizon: int
    target: np.ndarray
    P_x: np.ndarray
    P_u: np.ndarray
    kernel: KernelConfig

    def __post_init__(self):
        target = np.array(self.target, dtype=float)
        if target.ndim != 1 or target.size < 1:
            raise ContractViolation("目标观点必须是非空向量")
        if target.min() < 0.0 or target.max() > 1.0:
            raise ContractViolation(f"目标观点必须在[0,1]内: {target}")
        m = target.size
        P_x = np.array(self.P_x, dtype=float)
        P_u = np.array(self.P_u, dtype=float)
        _check_psd("P_x", P_x, m)
        _check_psd("P_u", P_u, m)
        if self.n_propagators < 1:
            raise ContractViolation(f"传播者数量必须为正，当前为 {self.n_propagators}")
        if self.horizon < 1:
            raise ContractViolation(f"时域长度必须为正，当前为 {self.horizon}")
        for name, value in (("target", target), ("P_x", P_x), ("P_u", P_u)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def m(self) -> int:
        return self.target.size

    @property
    def genome_length(self) -> int:
        return self.horizon * self.n_propagators * self.m

    def with_target(self, target) -> "ControlConfig":
        return replace(self, target=np.asarray(target, dtype=float))

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "ControlConfig":
        """
        从配置字典构建

        P_x = state_weight * I，P_u = control_weight * I。
        """
        target = np.asarray(data.get("target", EXEMPLAR_TARGET), dtype=float)
        m = target.size
        kernel = KernelConfig(method=SimilarityMethod(data.get("kernel", "distance")),
                              epsilon=float(data.get("epsilon", 0.2)))
        return cls(
            n_propagators=int(data.get("propagators", 2)),
            horizon=int(data.get("horizon", 20)),
            target=target,
            P_x=float(data.get("state_weight", 1.0)) * np.eye(m),
            P_u=float(data.get("control_weight", 0.1)) * np.eye(m),
            kernel=kernel,
        )

    def to_dict(self) -> dict:
        return {
            "propagators": self.n_propagators,
            "horizon": self.horizon,
            "target": self.target.tolist(),
            "P_x": self.P_x.tolist(),
            "P_u": self.P_u.tolist(),
            **self.kernel.to_dict(),
        }


def as_control_input(U, n_propagators: int, m: int) -> np.ndarray:
    """校验并返回 n_e×m 的控制输入"""
    U = np.asarray(U, dtype=float)
    if U.shape != (n_propagators, m):
        raise ContractViolation(f"控制输入形状应为 ({n_propagators}, {m})，当前为 {U.shape}")
    if not np.all(np.isfinite(U)) or U.min() < 0.0 or U.max() > 1.0:
        raise ContractViolation("控制输入必须位于[0,1]内")
    return U


def _values(X) -> np.ndarray:
    return X.values if isinstance(X, OpinionMatrix) else np.asarray(X, dtype=float)


def extended_weights(X: OpinionMatrix, U, kernel: KernelConfig) -> Tuple[np.ndarray, np.ndarray]:
    """
    传播者扩展权重

    Returns:
        (Wx: n×n, Wu: n×n_e)，[Wx | Wu] 每行和为1
    """
    values = _values(X)
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or U.shape[1] != values.shape[1]:
        raise ContractViolation(f"控制输入维度与观点维度不一致: {U.shape} vs {values.shape}")
    n = values.shape[0]
    S = connectivity_matrix(values, kernel, others=U)
    row_sums = S.sum(axis=1, keepdims=True)
    assert np.all(row_sums > 0), "自环规则保证每行分母为正"
    W = S / row_sums
    return W[:, :n], W[:, n:]


def controlled_step(X: OpinionMatrix, U, kernel: KernelConfig) -> OpinionMatrix:
    """受控单步演化 X' = Wx X + Wu U"""
    values = _values(X)
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or U.shape[1] != values.shape[1]:
        raise ContractViolation(f"控制输入维度与观点维度不一致: {U.shape} vs {values.shape}")
    n = values.shape[0]
    S = connectivity_matrix(values, kernel, others=U)
    degree = S.sum(axis=1)
    updated = (S[:, :n] @ values + S[:, n:] @ U) / degree[:, None]
    np.clip(updated, 0.0, 1.0, out=updated)
    return OpinionMatrix(updated)


def stage_cost(X_k: OpinionMatrix, U_prev, cfg: ControlConfig) -> float:
    """单步代价 tr(E Px E^T) + tr(U Pu U^T)，E = X - 1 x_c^T"""
    E = _values(X_k) - cfg.target[None, :]
    U_prev = np.asarray(U_prev, dtype=float)
    tracking = float(np.einsum("ij,jk,ik->", E, cfg.P_x, E))
    effort = float(np.einsum("ij,jk,ik->", U_prev, cfg.P_u, U_prev))
    return tracking + effort


def reward(X_k: OpinionMatrix, U_prev, cfg: ControlConfig) -> float:
    """
    第k步奖励 r(k) = -tr(E Px E^T) - tr(U(k-1) Pu U(k-1)^T)

    控制项取负号，使 J_N = -sum r(k) 成立。
    """
    return -stage_cost(X_k, U_prev, cfg)


def trajectory_cost(snapshots: Sequence[OpinionMatrix], controls: Sequence,
                    cfg: ControlConfig) -> float:
    """
    时域代价 J_N

    Args:
        snapshots: X(1..N)
        controls: U(0..N-1)
    """
    if len(snapshots) != len(controls):
        raise ContractViolation(
            f"快照数({len(snapshots)})与控制数({len(controls)})必须相等"
        )
    if len(snapshots) != cfg.horizon:
        raise ContractViolation(f"序列长度必须等于时域 N={cfg.horizon}，当前为 {len(snapshots)}")
    total = 0.0
    for X_k, U_prev in zip(snapshots, controls):
        total += stage_cost(X_k, U_prev, cfg)
    return total


def average_deviation(snapshots: Sequence[OpinionMatrix], target) -> float:
    """用户与目标观点的平均欧氏偏差（对用户和步数取平均）"""
    target = np.asarray(target, dtype=float)
    stacked = np.stack([_values(s) for s in snapshots])
    return float(np.mean(np.sqrt(np.sum((stacked - target) ** 2, axis=2))))


class ControlOutcome(NamedTuple):
    """一次时域展开的结果"""
    trajectory: Trajectory
    cost: float
    avg_deviation: float
    controls: List[np.ndarray]


def build_outcome(snapshots: List[OpinionMatrix], controls: List[np.ndarray],
                  cost: float, cfg: ControlConfig) -> ControlOutcome:
    trajectory = Trajectory(snapshots=snapshots,
                            diameters=[diameter(s).value for s in snapshots])
    return ControlOutcome(trajectory, cost, average_deviation(snapshots[1:], cfg.target), controls)


def rollout(X0: OpinionMatrix, controls: Sequence, cfg: ControlConfig) -> ControlOutcome:
    """按给定控制序列开环展开N步"""
    if len(controls) != cfg.horizon:
        raise ContractViolation(f"控制序列长度必须为 {cfg.horizon}，当前为 {len(controls)}")
    X0 = X0 if isinstance(X0, OpinionMatrix) else OpinionMatrix(X0)
    env = ManipulationEnv(cfg)
    env.reset(X0)
    snapshots = [X0]
    used = []
    for U in controls:
        state, _, _ = env.step(U)
        snapshots.append(state.X)
        used.append(np.array(U, dtype=float))
    return build_outcome(snapshots, used, env.cost, cfg)


def uncontrolled_outcome(X0: OpinionMatrix, cfg: ControlConfig) -> ControlOutcome:
    """无传播者基线：自治演化N步，代价只含跟踪项"""
    X0 = X0 if isinstance(X0, OpinionMatrix) else OpinionMatrix(X0)
    zero = np.zeros((cfg.n_propagators, cfg.m))
    snapshots = [X0]
    cost = 0.0
    for _ in range(cfg.horizon):
        snapshots.append(step(snapshots[-1], cfg.kernel))
        cost += stage_cost(snapshots[-1], zero, cfg)
    return build_outcome(snapshots, [], cost, cfg)


@dataclass(frozen=True)
class EnvState:
    """环境状态：观点、步数、上一步控制"""
    X: OpinionMatrix
    k: int
    last_control: np.ndarray = field(repr=False)


class ManipulationEnv:
    """单时域的观点操控环境"""

    def __init__(self, config: ControlConfig):
        self.config = config
        self._state: Optional[EnvState] = None
        self.cost = 0.0

    @property
    def state(self) -> EnvState:
        if self._state is None:
            raise ContractViolation("环境尚未reset")
        return self._state

    def reset(self, X0: OpinionMatrix, target=None) -> EnvState:
        """重置到初始观点，可同时更换目标观点"""
        X0 = X0 if isinstance(X0, OpinionMatrix) else OpinionMatrix(X0)
        if target is not None:
            self.config = self.config.with_target(target)
        if X0.m != self.config.m:
            raise ContractViolation(f"观点维度 {X0.m} 与目标维度 {self.config.m} 不一致")
        self.cost = 0.0
        self._state = EnvState(X=X0, k=0,
                               last_control=np.zeros((self.config.n_propagators, self.config.m)))
        return self._state

    def step(self, U) -> Tuple[EnvState, float, bool]:
        """
        施加控制U(k)，返回 (新状态, r(k+1), 是否到达时域末端)
        """
        state = self.state
        if state.k >= self.config.horizon:
            raise ContractViolation("已到达时域末端，请先reset")
        U = as_control_input(U, self.config.n_propagators, self.config.m)
        X_next = controlled_step(state.X, U, self.config.kernel)
        r = reward(X_next, U, self.config)
        self.cost -= r
        self._state = EnvState(X=X_next, k=state.k + 1, last_control=U)
        return self._state, r, self._state.k >= self.config.horizon


def random_env_factory(n_users: int, m: int) -> Callable[[np.random.Generator], Tuple[OpinionMatrix, np.ndarray]]:
    """每个episode均匀采样初始观点X(0)与目标观点x_c"""
    def factory(rng: np.random.Generator) -> Tuple[OpinionMatrix, np.ndarray]:
        X0 = OpinionMatrix(rng.uniform(0.0, 1.0, size=(n_users, m)))
        return X0, rng.uniform(0.0, 1.0, size=m)
    return factory


def fixed_env_factory(X0: OpinionMatrix, target) -> Callable[[np.random.Generator], Tuple[OpinionMatrix, np.ndarray]]:
    """每个episode都从同一组初始观点与目标观点出发"""
    X0 = X0 if isinstance(X0, OpinionMatrix) else OpinionMatrix(X0)
    target = np.array(target, dtype=float)

    def factory(rng: np.random.Generator) -> Tuple[OpinionMatrix, np.ndarray]:
        return X0, target
    return factory
