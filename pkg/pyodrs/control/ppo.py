"""
PPO训练：裁剪代理目标 + GAE优势估计 + 手写Adam

每次更新先采集batch_episodes个长度为N的时域，再在整批样本上做若干轮小批量更新。
观测中不含时间步，优势先按时间步跨episode去均值，再整体标准化。
"""

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, NamedTuple, Optional, Tuple, Union

import numpy as np

from pyodrs.control.environment import (
    ControlConfig,
    ControlOutcome,
    ManipulationEnv,
    build_outcome,
    random_env_factory,
)
from pyodrs.control.networks import (
    ACTOR_LAYERS,
    CRITIC_LAYERS,
    HIDDEN_UNITS,
    MlpParams,
    actor_backward,
    actor_forward,
    actor_forward_batch,
    critic_backward,
    critic_forward,
    critic_forward_batch,
    init_actor,
    init_critic,
)
from pyodrs.core.dynamics import OpinionMatrix
from pyodrs.core.errors import ContractViolation, TrainingDivergedError
from pyodrs.core.kernels import SimilarityMethod

CHECKPOINT_FORMAT_VERSION = 1
LOG_2PI = math.log(2.0 * math.pi)

EnvFactory = Callable[[np.random.Generator], Tuple[OpinionMatrix, np.ndarray]]


@dataclass(frozen=True)
class PPOConfig:
    """PPO超参数"""
    episodes: int = 10000
    gamma: float = 1.0
    gae_lambda: float = 0.95
    clip_ratio: float = 0.2
    actor_lr: float = 3e-4
    critic_lr: float = 1e-3
    epochs: int = 10
    batch_episodes: int = 8
    minibatch_size: int = 40
    entropy_coef: float = 0.01
    max_grad_norm: float = 0.5
    average_window: int = 100
    hidden: int = HIDDEN_UNITS
    seed: int = 0

    def __post_init__(self):
        if self.episodes < 1:
            raise ContractViolation(f"episodes必须为正，当前为 {self.episodes}")
        if not 0.0 < self.gamma <= 1.0:
            raise ContractViolation(f"gamma必须在(0,1]内，当前为 {self.gamma}")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ContractViolation(f"gae_lambda必须在[0,1]内，当前为 {self.gae_lambda}")
        if self.clip_ratio <= 0.0:
            raise ContractViolation("clip_ratio必须为正")
        if self.actor_lr <= 0.0 or self.critic_lr <= 0.0:
            raise ContractViolation("学习率必须为正")
        if self.epochs < 1:
            raise ContractViolation("epochs必须为正")
        if self.batch_episodes < 1 or self.minibatch_size < 1:
            raise ContractViolation("batch_episodes与minibatch_size必须为正")
        if self.entropy_coef < 0.0:
            raise ContractViolation("entropy_coef不能为负")
        if self.max_grad_norm <= 0.0:
            raise ContractViolation("max_grad_norm必须为正")
        if self.average_window < 1 or self.hidden < 1:
            raise ContractViolation("average_window与hidden必须为正")

    @classmethod
    def for_kernel(cls, method: SimilarityMethod, **overrides) -> "PPOConfig":
        """按核函数选择默认episode数（距离法10000，角度法3000）"""
        episodes = 10000 if SimilarityMethod(method) is SimilarityMethod.DISTANCE else 3000
        overrides.setdefault("episodes", episodes)
        return cls(**overrides)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any], method: SimilarityMethod = SimilarityMethod.DISTANCE) -> "PPOConfig":
        known = {f.name for f in fields(cls)}
        overrides = {k: v for k, v in data.items() if k in known and v is not None}
        return cls.for_kernel(method, **overrides)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class TrainingCurve:
    """逐episode的奖励、滑动平均奖励与初始状态价值估计"""
    rewards: List[float] = field(default_factory=list)
    average_rewards: List[float] = field(default_factory=list)
    initial_values: List[float] = field(default_factory=list)

    def append(self, reward: float, initial_value: float, window: int):
        self.rewards.append(float(reward))
        recent = self.rewards[-window:]
        self.average_rewards.append(float(sum(recent) / len(recent)))
        self.initial_values.append(float(initial_value))

    def __len__(self) -> int:
        return len(self.rewards)


@dataclass
class RunningMoments:
    """样本均值与方差的增量估计（按批合并）"""
    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def update(self, samples) -> None:
        samples = np.asarray(samples, dtype=float).reshape(-1)
        if samples.size == 0:
            return
        batch_mean = float(samples.mean())
        batch_m2 = float(np.sum((samples - batch_mean) ** 2))
        total = self.count + samples.size
        delta = batch_mean - self.mean
        self.mean += delta * samples.size / total
        self.m2 += batch_m2 + delta * delta * self.count * samples.size / total
        self.count = total

    @property
    def std(self) -> float:
        return math.sqrt(self.m2 / self.count) if self.count else 0.0

    @property
    def scale(self) -> float:
        """奖励缩放因子；样本方差为0时取1"""
        std = self.std
        return std if std > 1e-8 else 1.0


@dataclass
class PolicyParams:
    """Actor-Critic参数及其对应的问题规模"""
    actor: MlpParams
    critic: MlpParams
    n_users: int
    n_propagators: int
    m: int

    @property
    def observation_size(self) -> int:
        return self.n_users * self.m + self.m

    @property
    def action_size(self) -> int:
        return self.n_propagators * self.m


def init_policy(n_users: int, n_propagators: int, m: int, rng: np.random.Generator,
                hidden: int = HIDDEN_UNITS) -> PolicyParams:
    obs_size = n_users * m + m
    return PolicyParams(
        actor=init_actor(obs_size, n_propagators * m, rng, hidden=hidden),
        critic=init_critic(obs_size, rng, hidden=hidden),
        n_users=n_users,
        n_propagators=n_propagators,
        m=m,
    )


def observe(X: OpinionMatrix, target) -> np.ndarray:
    """观测 = 按行展平的X 拼接 目标观点x_c"""
    values = X.values if isinstance(X, OpinionMatrix) else np.asarray(X, dtype=float)
    return np.concatenate([values.reshape(-1), np.asarray(target, dtype=float).reshape(-1)])


class SampledAction(NamedTuple):
    control: np.ndarray
    raw: np.ndarray
    log_prob: float


def gaussian_log_prob(x: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    """对角高斯对数概率（对最后一维求和）"""
    z = (x - mean) / std
    return np.sum(-0.5 * z * z - np.log(std) - 0.5 * LOG_2PI, axis=-1)


def gaussian_entropy(std: np.ndarray) -> np.ndarray:
    return np.sum(np.log(std) + 0.5 * (LOG_2PI + 1.0), axis=-1)


def sample_action(mean: np.ndarray, stddev: np.ndarray, rng: np.random.Generator,
                  shape: Optional[Tuple[int, int]] = None) -> SampledAction:
    """
    高斯采样后裁剪到[0,1]

    log_prob按裁剪前的样本计算。shape给定时把控制输入整形为 n_e×m。
    """
    mean = np.asarray(mean, dtype=float)
    stddev = np.asarray(stddev, dtype=float)
    raw = mean + stddev * rng.standard_normal(mean.shape)
    control = np.clip(raw, 0.0, 1.0)
    if shape is not None:
        control = control.reshape(shape)
    return SampledAction(control, raw, float(gaussian_log_prob(raw, mean, stddev)))


def actor_loss_and_grad(actor: MlpParams, obs: np.ndarray, raw_actions: np.ndarray,
                        old_log_probs: np.ndarray, advantages: np.ndarray,
                        clip_ratio: float, entropy_coef: float = 0.0) -> Tuple[float, MlpParams]:
    """
    裁剪代理损失 L = -mean(min(r A, clip(r) A)) - c_ent * mean(H)

    Returns:
        (loss, 各层梯度)
    """
    cache = actor_forward_batch(actor, obs)
    mean, std = cache.mean, cache.std
    batch = obs.shape[0]
    log_probs = gaussian_log_prob(raw_actions, mean, std)
    ratio = np.exp(log_probs - old_log_probs)
    clipped = np.clip(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio)
    unclipped_obj = ratio * advantages
    clipped_obj = clipped * advantages
    surrogate = np.minimum(unclipped_obj, clipped_obj)
    entropy = gaussian_entropy(std)
    loss = float(-surrogate.mean() - entropy_coef * entropy.mean())

    # 只有取到未裁剪分支时梯度非零
    d_logp = np.where(unclipped_obj <= clipped_obj, -ratio * advantages, 0.0) / batch
    diff = raw_actions - mean
    var = std * std
    d_mean = d_logp[:, None] * diff / var
    d_std = d_logp[:, None] * (diff * diff / (var * std) - 1.0 / std)
    d_std = d_std - entropy_coef / batch / std
    return loss, actor_backward(actor, cache, d_mean, d_std)


def critic_loss_and_grad(critic: MlpParams, obs: np.ndarray,
                         returns: np.ndarray) -> Tuple[float, MlpParams]:
    """价值损失 0.5 * mean((V - R)^2)"""
    cache = critic_forward_batch(critic, obs)
    error = cache.value - returns
    loss = float(0.5 * np.mean(error * error))
    return loss, critic_backward(critic, cache, error / obs.shape[0])


def compute_gae(rewards: np.ndarray, values: np.ndarray, gamma: float, lam: float,
                last_value: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """
    广义优势估计

    Args:
        rewards: r(1..N)
        values: V(obs(0..N-1))
        last_value: 时域末端价值（单时域问题中为0）

    Returns:
        (advantages, returns)
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    advantages = np.zeros_like(rewards)
    next_value = last_value
    running = 0.0
    for t in reversed(range(len(rewards))):
        delta = rewards[t] + gamma * next_value - values[t]
        running = delta + gamma * lam * running
        advantages[t] = running
        next_value = values[t]
    return advantages, advantages + values


def clip_by_global_norm(grads: MlpParams, max_norm: float) -> float:
    """原地缩放梯度使全局范数不超过max_norm，返回缩放前范数"""
    norm = math.sqrt(sum(float(np.sum(g * g)) for _, g in grads.items()))
    if norm > max_norm:
        scale = max_norm / (norm + 1e-12)
        for name in grads:
            grads.layers[name] = grads.layers[name] * scale
    return norm


class AdamOptimizer:
    """Adam优化器，原地更新MlpParams"""

    def __init__(self, params: MlpParams, lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = params.zeros_like()
        self.v = params.zeros_like()

    def step(self, params: MlpParams, grads: MlpParams, max_grad_norm: Optional[float] = None):
        if max_grad_norm is not None:
            clip_by_global_norm(grads, max_grad_norm)
        self.t += 1
        correction1 = 1.0 - self.beta1 ** self.t
        correction2 = 1.0 - self.beta2 ** self.t
        for name in params:
            g = grads[name]
            self.m.layers[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v.layers[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * g * g
            m_hat = self.m[name] / correction1
            v_hat = self.v[name] / correction2
            params.layers[name] = params[name] - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class Rollout(NamedTuple):
    """一个episode的采样数据"""
    observations: np.ndarray
    raw_actions: np.ndarray
    log_probs: np.ndarray
    rewards: np.ndarray


class UpdateBatch(NamedTuple):
    observations: np.ndarray
    raw_actions: np.ndarray
    log_probs: np.ndarray
    advantages: np.ndarray
    returns: np.ndarray


def collect_episode(env: ManipulationEnv, policy: PolicyParams, X0: OpinionMatrix, target,
                    rng: np.random.Generator) -> Rollout:
    """用当前策略采样一个完整时域"""
    state = env.reset(X0, target)
    shape = (env.config.n_propagators, env.config.m)
    observations, raw_actions, log_probs, rewards = [], [], [], []
    done = False
    while not done:
        obs = observe(state.X, env.config.target)
        mean, std = actor_forward(policy.actor, obs)
        action = sample_action(mean, std, rng, shape)
        state, r, done = env.step(action.control)
        observations.append(obs)
        raw_actions.append(action.raw)
        log_probs.append(action.log_prob)
        rewards.append(r)
    return Rollout(np.stack(observations), np.stack(raw_actions),
                   np.asarray(log_probs), np.asarray(rewards, dtype=float))


def build_update_batch(rollouts: List[Rollout], critic: MlpParams, cfg: PPOConfig,
                       reward_scale: float) -> UpdateBatch:
    """
    由若干等长episode构建一次更新的样本

    奖励除以reward_scale后计算GAE。episode数大于1时优势按时间步去均值，
    再对整批标准化。
    """
    advantages, returns = [], []
    for rollout in rollouts:
        values = critic_forward(critic, rollout.observations)
        adv, ret = compute_gae(rollout.rewards / reward_scale, values, cfg.gamma, cfg.gae_lambda)
        advantages.append(adv)
        returns.append(ret)
    advantages = np.stack(advantages)
    if len(rollouts) > 1:
        advantages = advantages - advantages.mean(axis=0, keepdims=True)
    spread = advantages.std()
    if spread > 0:
        advantages = (advantages - advantages.mean()) / (spread + 1e-8)
    return UpdateBatch(
        observations=np.concatenate([r.observations for r in rollouts]),
        raw_actions=np.concatenate([r.raw_actions for r in rollouts]),
        log_probs=np.concatenate([r.log_probs for r in rollouts]),
        advantages=advantages.reshape(-1),
        returns=np.concatenate(returns),
    )


def ppo_update(policy: PolicyParams, batch: UpdateBatch, cfg: PPOConfig,
               actor_opt: AdamOptimizer, critic_opt: AdamOptimizer, rng: np.random.Generator) -> None:
    """在一批样本上做cfg.epochs轮随机小批量更新"""
    size = batch.observations.shape[0]
    for _ in range(cfg.epochs):
        order = rng.permutation(size)
        for start in range(0, size, cfg.minibatch_size):
            idx = order[start:start + cfg.minibatch_size]
            _, actor_grads = actor_loss_and_grad(policy.actor, batch.observations[idx], batch.raw_actions[idx],
                                                 batch.log_probs[idx], batch.advantages[idx],
                                                 cfg.clip_ratio, cfg.entropy_coef)
            actor_opt.step(policy.actor, actor_grads, cfg.max_grad_norm)
            _, critic_grads = critic_loss_and_grad(policy.critic, batch.observations[idx], batch.returns[idx])
            critic_opt.step(policy.critic, critic_grads, cfg.max_grad_norm)


def ppo_train(env_factory: Optional[EnvFactory], cfg: PPOConfig, control_cfg: ControlConfig,
              n_users: int = 8,
              progress: Optional[Callable[[int, float], None]] = None) -> Tuple[PolicyParams, TrainingCurve]:
    """
    训练PPO策略

    Args:
        env_factory: rng -> (X0, x_c)，为None时每个episode均匀随机采样
        cfg: PPO超参数
        control_cfg: 操控问题配置
        n_users: 用户数（决定观测维度）
        progress: 每个episode结束后调用 progress(episode, reward)

    Returns:
        (训练后的参数, 训练曲线)

    Raises:
        TrainingDivergedError: episode奖励出现NaN或参数更新后出现非有限值
    """
    rng = np.random.default_rng(cfg.seed)
    if env_factory is None:
        env_factory = random_env_factory(n_users, control_cfg.m)
    policy = init_policy(n_users, control_cfg.n_propagators, control_cfg.m, rng, hidden=cfg.hidden)
    actor_opt = AdamOptimizer(policy.actor, cfg.actor_lr)
    critic_opt = AdamOptimizer(policy.critic, cfg.critic_lr)
    env = ManipulationEnv(control_cfg)
    curve = TrainingCurve()
    # 累计回报的尺度，critic在缩放后的单位下学习
    return_moments = RunningMoments()

    episode = 0
    while episode < cfg.episodes:
        rollouts = []
        for _ in range(min(cfg.batch_episodes, cfg.episodes - episode)):
            episode += 1
            X0, target = env_factory(rng)
            X0 = X0 if isinstance(X0, OpinionMatrix) else OpinionMatrix(X0)
            if X0.n != n_users:
                raise ContractViolation(f"环境用户数 {X0.n} 与策略用户数 {n_users} 不一致")
            rollout = collect_episode(env, policy, X0, target, rng)
            episode_reward = float(np.sum(rollout.rewards))
            if math.isnan(episode_reward):
                raise TrainingDivergedError(episode, "episode奖励为NaN")
            initial_value = critic_forward(policy.critic, rollout.observations[0]) * return_moments.scale
            curve.append(episode_reward, initial_value, cfg.average_window)
            rollouts.append(rollout)
            if progress is not None:
                progress(episode, episode_reward)

        for rollout in rollouts:
            return_moments.update(compute_gae(rollout.rewards, np.zeros_like(rollout.rewards),
                                              cfg.gamma, 1.0)[1])
        batch = build_update_batch(rollouts, policy.critic, cfg, return_moments.scale)
        try:
            ppo_update(policy, batch, cfg, actor_opt, critic_opt, rng)
        except ContractViolation as e:
            raise TrainingDivergedError(episode, str(e)) from e
        for net_name, net in (("actor", policy.actor), ("critic", policy.critic)):
            for layer, value in net.items():
                if not np.all(np.isfinite(value)):
                    raise TrainingDivergedError(episode, f"{net_name}/{layer} 出现非有限值")

    return policy, curve


def evaluate_policy(params: PolicyParams, X0: OpinionMatrix, control_cfg: ControlConfig,
                    deterministic: bool = True,
                    rng: Optional[np.random.Generator] = None) -> ControlOutcome:
    """
    在单个时域上闭环运行策略

    deterministic=True 时直接使用均值动作；否则用调用方给出的rng从高斯分布采样。
    返回的ControlOutcome包含轨迹、代价J_N与平均偏差。
    """
    X0 = X0 if isinstance(X0, OpinionMatrix) else OpinionMatrix(X0)
    if X0.n != params.n_users or X0.m != params.m:
        raise ContractViolation(
            f"初始观点形状 ({X0.n}, {X0.m}) 与策略规模 ({params.n_users}, {params.m}) 不一致"
        )
    if not deterministic and rng is None:
        raise ContractViolation("随机评估必须传入rng")
    shape = (control_cfg.n_propagators, control_cfg.m)
    env = ManipulationEnv(control_cfg)
    state = env.reset(X0)
    snapshots = [X0]
    controls = []
    done = False
    while not done:
        mean, std = actor_forward(params.actor, observe(state.X, control_cfg.target))
        if deterministic:
            control = np.clip(mean, 0.0, 1.0).reshape(shape)
        else:
            control = sample_action(mean, std, rng, shape).control
        state, _, done = env.step(control)
        snapshots.append(state.X)
        controls.append(control)
    return build_outcome(snapshots, controls, env.cost, control_cfg)


def save_policy(params: PolicyParams, path: Union[str, Path],
                ppo_cfg: Optional[PPOConfig] = None) -> Path:
    """保存策略检查点（.npz）"""
    path = Path(path)
    arrays: Dict[str, np.ndarray] = {
        "format_version": np.array(CHECKPOINT_FORMAT_VERSION),
        "shape": np.array([params.n_users, params.n_propagators, params.m]),
        "ppo_config": np.array(json.dumps(ppo_cfg.to_dict() if ppo_cfg else {})),
    }
    for prefix, net in (("actor", params.actor), ("critic", params.critic)):
        for name, value in net.items():
            arrays[f"{prefix}/{name}"] = value
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as f:
            np.savez(f, **arrays)
    except OSError as e:
        raise OSError(f"无法写入策略检查点 {path}: {e}") from e
    return path


def load_policy(path: Union[str, Path]) -> PolicyParams:
    """读取策略检查点"""
    path = Path(path)
    try:
        with np.load(path, allow_pickle=False) as data:
            contents = {key: data[key] for key in data.files}
    except OSError as e:
        raise OSError(f"无法读取策略检查点 {path}: {e}") from e

    version = int(contents.get("format_version", -1))
    if version != CHECKPOINT_FORMAT_VERSION:
        raise ContractViolation(f"{path} 的检查点版本 {version} 不受支持")
    try:
        n_users, n_propagators, m = (int(v) for v in contents["shape"])
        actor = MlpParams({name: contents[f"actor/{name}"] for name in ACTOR_LAYERS})
        critic = MlpParams({name: contents[f"critic/{name}"] for name in CRITIC_LAYERS})
    except KeyError as e:
        raise ContractViolation(f"{path} 缺少字段 {e}") from e
    params = PolicyParams(actor, critic, n_users, n_propagators, m)
    if actor.input_size != params.observation_size or actor["bm"].size != params.action_size:
        raise ContractViolation(f"{path} 中的网络形状与问题规模不一致")
    return params
