"""
策略网络与价值网络（numpy手写前向/反向传播）

Actor:  obs -> FC(256) -> ReLU -> FC(n_e*m) -> ReLU ─┬─> FC(n_e*m) -> sigmoid  (均值)
                                                    └─> FC(n_e*m) -> softplus (标准差)
Critic: obs -> FC(256) -> ReLU -> FC(1)

全连接层约定 z = x @ W + b，W形状为 (输入维度, 输出维度)。
"""

from dataclasses import dataclass
from typing import Dict, Iterator, NamedTuple, Tuple

import numpy as np

from pyodrs.core.errors import ContractViolation

HIDDEN_UNITS = 256
MIN_STD = 1e-6
BOTTLENECK_BIAS = 0.1

ACTOR_LAYERS = ("W1", "b1", "W2", "b2", "Wm", "bm", "Ws", "bs")
CRITIC_LAYERS = ("W1", "b1", "W2", "b2")


@dataclass
class MlpParams:
    """按层名保存的网络参数"""
    layers: Dict[str, np.ndarray]

    def __post_init__(self):
        for name, value in self.layers.items():
            if not np.all(np.isfinite(value)):
                raise ContractViolation(f"参数 {name} 包含非有限值")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.layers[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.layers)

    def items(self):
        return self.layers.items()

    def copy(self) -> "MlpParams":
        return MlpParams({name: value.copy() for name, value in self.layers.items()})

    def zeros_like(self) -> "MlpParams":
        return MlpParams({name: np.zeros_like(value) for name, value in self.layers.items()})

    def scaled(self, name: str, factor: float) -> "MlpParams":
        params = self.copy()
        params.layers[name] = params.layers[name] * factor
        return params

    @property
    def input_size(self) -> int:
        return self.layers["W1"].shape[0]

    def parameter_count(self) -> int:
        return int(sum(value.size for value in self.layers.values()))


def parameter_count(params: MlpParams) -> int:
    return params.parameter_count()


def _dense(rng: np.random.Generator, fan_in: int, fan_out: int, scale: float = 1.0):
    W = rng.normal(0.0, scale * np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
    return W, np.zeros(fan_out)


def init_actor(input_size: int, action_size: int, rng: np.random.Generator,
               hidden: int = HIDDEN_UNITS, initial_std: float = 0.3) -> MlpParams:
    """
    初始化Actor参数

    输出头权重取较小尺度，初始均值接近0.5，初始标准差接近initial_std。
    隐层输出全为非负，瓶颈层权重按列去均值并加正偏置，避免单元一开始就全部失活。
    """
    W1, b1 = _dense(rng, input_size, hidden)
    W2, _ = _dense(rng, hidden, action_size)
    W2 -= W2.mean(axis=0, keepdims=True)
    b2 = np.full(action_size, BOTTLENECK_BIAS)
    Wm, bm = _dense(rng, action_size, action_size, scale=0.01)
    Ws, _ = _dense(rng, action_size, action_size, scale=0.01)
    bs = np.full(action_size, np.log(np.expm1(initial_std)))
    return MlpParams({"W1": W1, "b1": b1, "W2": W2, "b2": b2,
                      "Wm": Wm, "bm": bm, "Ws": Ws, "bs": bs})


def init_critic(input_size: int, rng: np.random.Generator, hidden: int = HIDDEN_UNITS) -> MlpParams:
    W1, b1 = _dense(rng, input_size, hidden)
    W2, b2 = _dense(rng, hidden, 1, scale=0.1)
    return MlpParams({"W1": W1, "b1": b1, "W2": W2, "b2": b2})


def sigmoid(z: np.ndarray) -> np.ndarray:
    return np.exp(-np.logaddexp(0.0, -z))


def softplus(z: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, z)


def _as_batch(params: MlpParams, obs) -> Tuple[np.ndarray, bool]:
    obs = np.asarray(obs, dtype=float)
    single = obs.ndim == 1
    batch = obs[None, :] if single else obs
    if batch.ndim != 2 or batch.shape[1] != params.input_size:
        raise ContractViolation(
            f"观测维度 {obs.shape} 与网络输入维度 {params.input_size} 不一致"
        )
    return batch, single


class ActorCache(NamedTuple):
    obs: np.ndarray
    z1: np.ndarray
    h: np.ndarray
    g: np.ndarray
    zm: np.ndarray
    zs: np.ndarray
    mean: np.ndarray
    std: np.ndarray


class CriticCache(NamedTuple):
    obs: np.ndarray
    z1: np.ndarray
    value: np.ndarray


def actor_forward_batch(params: MlpParams, obs: np.ndarray) -> ActorCache:
    """批量前向传播，保留反向传播所需的中间量"""
    obs, _ = _as_batch(params, obs)
    z1 = obs @ params["W1"] + params["b1"]
    a1 = np.maximum(z1, 0.0)
    h = a1 @ params["W2"] + params["b2"]
    g = np.maximum(h, 0.0)
    zm = g @ params["Wm"] + params["bm"]
    zs = g @ params["Ws"] + params["bs"]
    mean = sigmoid(zm)
    std = np.maximum(softplus(zs), MIN_STD)
    return ActorCache(obs, z1, h, g, zm, zs, mean, std)


def actor_forward(params: MlpParams, obs) -> Tuple[np.ndarray, np.ndarray]:
    """
    Actor前向传播

    Args:
        params: Actor参数
        obs: 单个观测向量或 (B, d) 批量

    Returns:
        (mean, stddev)，形状与输入批量对应
    """
    _, single = _as_batch(params, obs)
    cache = actor_forward_batch(params, obs)
    if single:
        return cache.mean[0], cache.std[0]
    return cache.mean, cache.std


def actor_backward(params: MlpParams, cache: ActorCache,
                   d_mean: np.ndarray, d_std: np.ndarray) -> MlpParams:
    """由 dL/dmean、dL/dstd 反向传播得到各层梯度"""
    d_zm = d_mean * cache.mean * (1.0 - cache.mean)
    d_zs = d_std * sigmoid(cache.zs) * (softplus(cache.zs) > MIN_STD)
    d_g = d_zm @ params["Wm"].T + d_zs @ params["Ws"].T
    d_h = d_g * (cache.h > 0.0)
    a1 = np.maximum(cache.z1, 0.0)
    d_a1 = d_h @ params["W2"].T
    d_z1 = d_a1 * (cache.z1 > 0.0)
    return MlpParams({
        "W1": cache.obs.T @ d_z1,
        "b1": d_z1.sum(axis=0),
        "W2": a1.T @ d_h,
        "b2": d_h.sum(axis=0),
        "Wm": cache.g.T @ d_zm,
        "bm": d_zm.sum(axis=0),
        "Ws": cache.g.T @ d_zs,
        "bs": d_zs.sum(axis=0),
    })


def critic_forward_batch(params: MlpParams, obs: np.ndarray) -> CriticCache:
    obs, _ = _as_batch(params, obs)
    z1 = obs @ params["W1"] + params["b1"]
    value = (np.maximum(z1, 0.0) @ params["W2"] + params["b2"])[:, 0]
    return CriticCache(obs, z1, value)


def critic_forward(params: MlpParams, obs):
    """Critic前向传播：单个观测返回float，批量返回 (B,) 数组"""
    _, single = _as_batch(params, obs)
    cache = critic_forward_batch(params, obs)
    return float(cache.value[0]) if single else cache.value


def critic_backward(params: MlpParams, cache: CriticCache, d_value: np.ndarray) -> MlpParams:
    d_out = np.asarray(d_value, dtype=float)[:, None]
    a1 = np.maximum(cache.z1, 0.0)
    d_z1 = (d_out @ params["W2"].T) * (cache.z1 > 0.0)
    return MlpParams({
        "W1": cache.obs.T @ d_z1,
        "b1": d_z1.sum(axis=0),
        "W2": a1.T @ d_out,
        "b2": d_out.sum(axis=0),
    })
