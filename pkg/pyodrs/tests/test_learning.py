"""
策略网络、PPO训练与检查点测试
"""

import math
import os
import shutil
import tempfile
import unittest
from pathlib import Path
from unittest import mock

import numpy as np

from pyodrs.control.environment import (
    EXEMPLAR_TARGET,
    ControlConfig,
    fixed_env_factory,
    trajectory_cost,
    uncontrolled_outcome,
)
from pyodrs.control.networks import (
    ACTOR_LAYERS,
    BOTTLENECK_BIAS,
    CRITIC_LAYERS,
    MlpParams,
    actor_forward,
    critic_forward,
    init_actor,
    init_critic,
    parameter_count,
)
from pyodrs.control.ppo import (
    AdamOptimizer,
    PPOConfig,
    Rollout,
    RunningMoments,
    TrainingCurve,
    actor_loss_and_grad,
    build_update_batch,
    clip_by_global_norm,
    compute_gae,
    critic_loss_and_grad,
    evaluate_policy,
    gaussian_log_prob,
    init_policy,
    load_policy,
    observe,
    ppo_train,
    sample_action,
    save_policy,
)
from pyodrs.core.dynamics import OpinionMatrix
from pyodrs.core.errors import ContractViolation, TrainingDivergedError
from pyodrs.core.kernels import KernelConfig, SimilarityMethod
from pyodrs.utils.file_utils import bundled_fixture_path
from pyodrs.utils.ratings import densify, load_ratings_csv

SLOW = os.environ.get("PYODRS_SLOW") == "1"
FD_STEP = 1e-6
GRADIENT_SEEDS = range(100, 110)


def random_params(layout, rng, scale=0.5):
    return MlpParams({name: rng.normal(0.0, scale, size=shape) for name, shape in layout.items()})


def actor_layout(obs_size, hidden, action_size):
    return {"W1": (obs_size, hidden), "b1": (hidden,), "W2": (hidden, action_size), "b2": (action_size,),
            "Wm": (action_size, action_size), "bm": (action_size,),
            "Ws": (action_size, action_size), "bs": (action_size,)}


def critic_layout(obs_size, hidden):
    return {"W1": (obs_size, hidden), "b1": (hidden,), "W2": (hidden, 1), "b2": (1,)}


def finite_difference(loss_fn, params):
    """中心差分数值梯度"""
    grads = params.zeros_like()
    for name, value in params.items():
        for index in np.ndindex(value.shape):
            original = value[index]
            value[index] = original + FD_STEP
            plus = loss_fn(params)
            value[index] = original - FD_STEP
            minus = loss_fn(params)
            value[index] = original
            grads.layers[name][index] = (plus - minus) / (2 * FD_STEP)
    return grads


def control_config(n_propagators=2, horizon=5, epsilon=0.2, target=(0.8147, 0.9058, 0.1270),
                   control_weight=0.1):
    m = len(target)
    return ControlConfig(n_propagators, horizon, np.asarray(target), np.eye(m),
                         control_weight * np.eye(m), KernelConfig(SimilarityMethod.DISTANCE, epsilon))


class TestNetworks(unittest.TestCase):
    """测试网络前向传播"""

    def test_observation_layout(self):
        """观测依次为各用户观点与目标观点"""
        X = OpinionMatrix(np.arange(24).reshape(8, 3) / 24.0)
        obs = observe(X, [0.1, 0.2, 0.3])
        self.assertEqual(obs.shape, (27,))
        np.testing.assert_array_equal(obs[:3], X.values[0])
        np.testing.assert_array_equal(obs[-3:], [0.1, 0.2, 0.3])

    def test_zero_actor(self):
        """全零Actor输出均值0.5、标准差ln2"""
        actor = init_actor(27, 6, np.random.default_rng(0)).zeros_like()
        mean, std = actor_forward(actor, np.full(27, 0.5))
        np.testing.assert_allclose(mean, np.full(6, 0.5), rtol=0, atol=1e-15)
        np.testing.assert_allclose(std, np.full(6, math.log(2.0)), rtol=0, atol=1e-15)

    def test_zero_critic(self):
        """全零Critic输出0"""
        critic = init_critic(27, np.random.default_rng(0)).zeros_like()
        self.assertEqual(critic_forward(critic, np.full(27, 0.3)), 0.0)

    def test_scaled_output_layer(self):
        """输出层权重加倍时价值加倍"""
        critic = random_params(critic_layout(5, 7), np.random.default_rng(1)).copy()
        critic.layers["b2"] = np.zeros(1)
        obs = np.random.default_rng(2).uniform(size=5)
        doubled = critic.scaled("W2", 2.0)
        self.assertAlmostEqual(critic_forward(doubled, obs), 2.0 * critic_forward(critic, obs), places=12)

    def test_forward_matches_loops(self):
        """向量化前向与逐元素循环一致"""
        rng = np.random.default_rng(8)
        actor = random_params(actor_layout(5, 4, 2), rng)
        obs = rng.uniform(size=5)
        hidden = [max(0.0, sum(obs[i] * actor["W1"][i, j] for i in range(5)) + actor["b1"][j]) for j in range(4)]
        common = [max(0.0, sum(hidden[i] * actor["W2"][i, j] for i in range(4)) + actor["b2"][j]) for j in range(2)]
        mean, std = actor_forward(actor, obs)
        for j in range(2):
            zm = sum(common[i] * actor["Wm"][i, j] for i in range(2)) + actor["bm"][j]
            zs = sum(common[i] * actor["Ws"][i, j] for i in range(2)) + actor["bs"][j]
            self.assertAlmostEqual(mean[j], 1.0 / (1.0 + math.exp(-zm)), places=12)
            self.assertAlmostEqual(std[j], math.log1p(math.exp(zs)), places=12)

    def test_output_ranges(self):
        """均值在(0,1)内、标准差为正"""
        rng = np.random.default_rng(4)
        actor = random_params(actor_layout(27, 16, 6), rng, scale=2.0)
        mean, std = actor_forward(actor, rng.uniform(size=(20, 27)))
        self.assertEqual(mean.shape, (20, 6))
        self.assertTrue(np.all((mean > 0.0) & (mean < 1.0)))
        self.assertTrue(np.all(std > 0.0))

    def test_parameter_counts(self):
        """8用户、2传播者时的参数量"""
        policy = init_policy(8, 2, 3, np.random.default_rng(0))
        self.assertEqual(parameter_count(policy.critic), 7425)
        self.assertEqual(parameter_count(policy.actor), 8794)
        self.assertEqual(tuple(policy.actor), ACTOR_LAYERS)
        self.assertEqual(tuple(policy.critic), CRITIC_LAYERS)

    def test_input_size_mismatch(self):
        """观测维度不符"""
        actor = init_actor(27, 6, np.random.default_rng(0), hidden=4)
        with self.assertRaises(ContractViolation):
            actor_forward(actor, np.zeros(26))

    def test_rejects_non_finite(self):
        """参数含NaN时拒绝构造"""
        with self.assertRaises(ContractViolation):
            MlpParams({"W1": np.array([[np.nan]])})

    def test_bottleneck_init(self):
        """瓶颈层权重按列均值为0，偏置为正"""
        actor = init_actor(27, 6, np.random.default_rng(3))
        np.testing.assert_allclose(actor["W2"].mean(axis=0), np.zeros(6), atol=1e-12)
        np.testing.assert_array_equal(actor["b2"], np.full(6, BOTTLENECK_BIAS))


class TestGradients(unittest.TestCase):
    """解析梯度与中心差分对比"""

    def assertGradientsClose(self, analytic, numeric):
        for name, value in analytic.items():
            a, n = value, numeric[name]
            bound = 1e-4 * np.maximum(np.abs(a) + np.abs(n), 1e-4)
            self.assertTrue(np.all(np.abs(a - n) <= bound), f"{name} 梯度不一致")

    def test_actor_gradient(self):
        """10个随机批量上Actor梯度与数值梯度一致"""
        for seed in GRADIENT_SEEDS:
            rng = np.random.default_rng(seed)
            actor = random_params(actor_layout(4, 6, 3), rng)
            obs = rng.uniform(size=(5, 4))
            mean, std = actor_forward(actor, obs)
            raw = mean + std * rng.standard_normal(mean.shape)
            old = gaussian_log_prob(raw, mean, std) + rng.normal(0.0, 0.3, size=5)
            advantages = rng.normal(size=5)
            for entropy_coef in (0.0, 0.01):
                with self.subTest(seed=seed, entropy_coef=entropy_coef):
                    _, grads = actor_loss_and_grad(actor, obs, raw, old, advantages, 0.2, entropy_coef)
                    numeric = finite_difference(
                        lambda p: actor_loss_and_grad(p, obs, raw, old, advantages, 0.2, entropy_coef)[0], actor)
                    self.assertGradientsClose(grads, numeric)

    def test_critic_gradient(self):
        """10个随机批量上Critic梯度与数值梯度一致"""
        for seed in GRADIENT_SEEDS:
            with self.subTest(seed=seed):
                rng = np.random.default_rng(seed)
                critic = random_params(critic_layout(4, 6), rng)
                obs = rng.uniform(size=(5, 4))
                returns = rng.normal(size=5)
                _, grads = critic_loss_and_grad(critic, obs, returns)
                numeric = finite_difference(lambda p: critic_loss_and_grad(p, obs, returns)[0], critic)
                self.assertGradientsClose(grads, numeric)

    def test_clipped_branch_has_no_gradient(self):
        """比率超出裁剪区间且优势为正时梯度为0"""
        rng = np.random.default_rng(12)
        actor = random_params(actor_layout(4, 6, 3), rng)
        obs = rng.uniform(size=(3, 4))
        mean, std = actor_forward(actor, obs)
        old = gaussian_log_prob(mean, mean, std) - 1.0
        _, grads = actor_loss_and_grad(actor, obs, mean, old, np.ones(3), 0.2)
        for _, value in grads.items():
            np.testing.assert_array_equal(value, np.zeros_like(value))


class TestSampling(unittest.TestCase):
    """测试动作采样"""

    def test_deterministic_with_seed(self):
        """同种子采样结果相同"""
        mean, std = np.full(6, 0.5), np.full(6, 0.2)
        a = sample_action(mean, std, np.random.default_rng(3), (2, 3))
        b = sample_action(mean, std, np.random.default_rng(3), (2, 3))
        np.testing.assert_array_equal(a.control, b.control)
        self.assertEqual(a.log_prob, b.log_prob)
        self.assertEqual(a.control.shape, (2, 3))

    def test_clamped_control(self):
        """控制被截断到[0,1]，对数概率按未截断样本计算"""
        action = sample_action(np.array([2.0, -1.0]), np.full(2, 1e-3), np.random.default_rng(0))
        np.testing.assert_array_equal(action.control, [1.0, 0.0])
        self.assertGreater(action.raw[0], 1.0)
        self.assertAlmostEqual(action.log_prob,
                               float(gaussian_log_prob(action.raw, np.array([2.0, -1.0]), np.full(2, 1e-3))))

    def test_vanishing_std_returns_mean(self):
        """标准差趋于0时返回均值"""
        mean = np.array([0.2, 0.9, 0.5])
        action = sample_action(mean, np.full(3, 1e-12), np.random.default_rng(1))
        np.testing.assert_allclose(action.control, mean, atol=1e-10)

    def test_empirical_mean(self):
        """大量采样的均值与标准差"""
        rng = np.random.default_rng(6)
        mean, std = np.array([0.3, 0.7]), np.array([0.1, 0.05])
        samples = np.stack([sample_action(mean, std, rng).raw for _ in range(20000)])
        np.testing.assert_allclose(samples.mean(axis=0), mean, atol=5e-3)
        np.testing.assert_allclose(samples.std(axis=0), std, rtol=0.05)


class TestOptimization(unittest.TestCase):
    """测试GAE、梯度裁剪与Adam"""

    def test_gae_monte_carlo(self):
        """lambda=1时优势为累计回报"""
        advantages, returns = compute_gae(np.ones(3), np.zeros(3), gamma=1.0, lam=1.0)
        np.testing.assert_allclose(advantages, [3.0, 2.0, 1.0])
        np.testing.assert_allclose(returns, [3.0, 2.0, 1.0])

    def test_gae_one_step(self):
        """lambda=0时优势为单步TD误差"""
        advantages, returns = compute_gae(np.ones(3), np.full(3, 0.5), gamma=1.0, lam=0.0)
        np.testing.assert_allclose(advantages, [1.0, 1.0, 0.5])
        np.testing.assert_allclose(returns, [1.5, 1.5, 1.0])

    def test_gae_discount(self):
        """折扣因子"""
        advantages, _ = compute_gae(np.array([0.0, 1.0]), np.zeros(2), gamma=0.5, lam=1.0)
        np.testing.assert_allclose(advantages, [0.5, 1.0])

    def test_clip_by_global_norm(self):
        """全局范数裁剪"""
        grads = MlpParams({"w": np.array([3.0, 4.0])})
        self.assertAlmostEqual(clip_by_global_norm(grads, 1.0), 5.0)
        np.testing.assert_allclose(grads["w"], [0.6, 0.8], atol=1e-9)
        small = MlpParams({"w": np.array([0.3, 0.4])})
        clip_by_global_norm(small, 1.0)
        np.testing.assert_array_equal(small["w"], [0.3, 0.4])

    def test_adam_first_step(self):
        """Adam第一步的步长等于学习率"""
        params = MlpParams({"w": np.array([1.0, -2.0])})
        optimizer = AdamOptimizer(params, lr=0.1)
        optimizer.step(params, MlpParams({"w": params["w"].copy()}))
        np.testing.assert_allclose(params["w"], [0.9, -1.9], atol=1e-6)
        self.assertEqual(optimizer.t, 1)

    def test_config(self):
        """PPO默认配置与校验"""
        self.assertEqual(PPOConfig.for_kernel(SimilarityMethod.DISTANCE).episodes, 10000)
        self.assertEqual(PPOConfig.from_mapping({}, SimilarityMethod.ANGLE).episodes, 3000)
        self.assertEqual(PPOConfig.from_mapping({"episodes": 5, "bogus": 1}).episodes, 5)
        with self.assertRaises(ContractViolation):
            PPOConfig(gamma=0.0)
        with self.assertRaises(ContractViolation):
            PPOConfig(clip_ratio=-0.1)
        cfg = PPOConfig()
        self.assertEqual((cfg.batch_episodes, cfg.minibatch_size, cfg.epochs), (8, 40, 10))
        self.assertEqual(cfg.entropy_coef, 0.01)
        with self.assertRaises(ContractViolation):
            PPOConfig(batch_episodes=0)
        with self.assertRaises(ContractViolation):
            PPOConfig(minibatch_size=0)

    def test_running_moments(self):
        """分批合并与一次性计算的方差一致"""
        samples = np.random.default_rng(5).normal(-40.0, 7.0, size=300)
        moments = RunningMoments()
        for chunk in np.array_split(samples, 7):
            moments.update(chunk)
        moments.update([])
        self.assertEqual(moments.count, 300)
        self.assertAlmostEqual(moments.mean, samples.mean(), places=9)
        self.assertAlmostEqual(moments.std, samples.std(), places=9)
        self.assertAlmostEqual(moments.scale, samples.std(), places=9)
        constant = RunningMoments()
        constant.update(np.full(5, -3.0))
        self.assertEqual(constant.scale, 1.0)
        self.assertEqual(RunningMoments().scale, 1.0)

    def test_update_batch_centers_each_step(self):
        """多个episode的优势按时间步去均值后标准化，回报按缩放因子换算"""
        critic = init_critic(4, np.random.default_rng(0), hidden=8).zeros_like()
        rollouts = [Rollout(np.zeros((3, 4)), np.zeros((3, 2)), np.zeros(3), np.array(rewards))
                    for rewards in ([-1.0, -2.0, -3.0], [-3.0, -2.0, -1.0])]
        batch = build_update_batch(rollouts, critic, PPOConfig(gae_lambda=1.0), reward_scale=2.0)
        np.testing.assert_allclose(batch.returns, [-3.0, -2.5, -1.5, -3.0, -1.5, -0.5])
        per_step = batch.advantages.reshape(2, 3)
        np.testing.assert_allclose(per_step.sum(axis=0), np.zeros(3), atol=1e-12)
        np.testing.assert_allclose(per_step[:, 0], [0.0, 0.0], atol=1e-12)
        self.assertAlmostEqual(batch.advantages.std(), 1.0, places=6)
        self.assertEqual(batch.observations.shape, (6, 4))

        single = build_update_batch(rollouts[:1], critic, PPOConfig(gae_lambda=1.0), reward_scale=1.0)
        self.assertAlmostEqual(single.advantages.mean(), 0.0, places=12)
        self.assertTrue(np.all(np.diff(single.advantages) > 0.0))

    def test_training_curve_window(self):
        """滑动平均窗口"""
        curve = TrainingCurve()
        for value in (1.0, 2.0, 3.0):
            curve.append(value, 0.0, window=2)
        self.assertEqual(curve.average_rewards, [1.0, 1.5, 2.5])
        self.assertEqual(len(curve), 3)


class TestTraining(unittest.TestCase):
    """测试PPO训练循环"""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.temp_dir)

    def test_small_run(self):
        """小规模训练的曲线长度与进度回调"""
        cfg = PPOConfig(episodes=3, hidden=8, seed=1)
        seen = []
        policy, curve = ppo_train(None, cfg, control_config(), n_users=4,
                                  progress=lambda e, r: seen.append(e))
        self.assertEqual(len(curve.rewards), 3)
        self.assertEqual(len(curve.average_rewards), 3)
        self.assertEqual(len(curve.initial_values), 3)
        self.assertEqual(seen, [1, 2, 3])
        self.assertTrue(all(r <= 0.0 for r in curve.rewards))
        self.assertEqual(policy.observation_size, 15)

    def test_partial_last_batch(self):
        """episode数不是批大小的整数倍时最后一批只采剩余数量"""
        cfg = PPOConfig(episodes=11, batch_episodes=4, minibatch_size=7, epochs=2, hidden=8, seed=2)
        seen = []
        policy, curve = ppo_train(None, cfg, control_config(), n_users=2,
                                  progress=lambda e, r: seen.append(e))
        self.assertEqual(seen, list(range(1, 12)))
        self.assertEqual(len(curve), 11)
        for _, value in policy.actor.items():
            self.assertTrue(np.all(np.isfinite(value)))

    def test_fixed_instance_training(self):
        """固定实例训练时同一批内的初始价值估计相同"""
        X0 = OpinionMatrix(np.random.default_rng(3).uniform(size=(3, 3)))
        factory = fixed_env_factory(X0, EXEMPLAR_TARGET)
        cfg = PPOConfig(episodes=4, batch_episodes=4, hidden=8)
        _, curve = ppo_train(factory, cfg, control_config(), n_users=3)
        self.assertEqual(len(set(curve.initial_values)), 1)

    def test_reproducible(self):
        """同种子训练结果相同"""
        cfg = PPOConfig(episodes=2, hidden=8, seed=4)
        first, curve_a = ppo_train(None, cfg, control_config(), n_users=3)
        second, curve_b = ppo_train(None, cfg, control_config(), n_users=3)
        self.assertEqual(curve_a.rewards, curve_b.rewards)
        for name in ACTOR_LAYERS:
            np.testing.assert_array_equal(first.actor[name], second.actor[name])

    def test_zero_reward_instance(self):
        """单个用户停在目标处且无法被连接时奖励恒为0"""
        cfg_control = control_config(n_propagators=1, horizon=4, epsilon=1.0,
                                     target=(0.5, 0.5, 0.5), control_weight=0.0)

        def factory(rng):
            return OpinionMatrix([[0.5, 0.5, 0.5]]), np.full(3, 0.5)

        _, curve = ppo_train(factory, PPOConfig(episodes=3, hidden=8), cfg_control, n_users=1)
        self.assertEqual(curve.rewards, [0.0, 0.0, 0.0])

    def test_nan_reward_aborts(self):
        """奖励为NaN时在第1个episode中止"""
        with mock.patch("pyodrs.control.environment.reward", return_value=float("nan")):
            with self.assertRaises(TrainingDivergedError) as ctx:
                ppo_train(None, PPOConfig(episodes=2, hidden=8), control_config(), n_users=2)
        self.assertEqual(ctx.exception.episode, 1)

    def test_user_count_mismatch(self):
        """环境用户数与策略不一致"""
        def factory(rng):
            return OpinionMatrix(rng.uniform(size=(3, 3))), rng.uniform(size=3)

        with self.assertRaises(ContractViolation):
            ppo_train(factory, PPOConfig(episodes=1, hidden=8), control_config(), n_users=4)

    def test_evaluate_policy(self):
        """确定性评估的轨迹、控制与代价"""
        cfg = control_config(horizon=6)
        policy = init_policy(4, 2, 3, np.random.default_rng(0), hidden=8)
        X0 = OpinionMatrix(np.random.default_rng(1).uniform(size=(4, 3)))
        outcome = evaluate_policy(policy, X0, cfg)
        again = evaluate_policy(policy, X0, cfg)
        self.assertEqual(outcome.cost, again.cost)
        self.assertEqual(len(outcome.trajectory.snapshots), 7)
        self.assertEqual(len(outcome.controls), 6)
        for control in outcome.controls:
            self.assertTrue(np.all((control >= 0.0) & (control <= 1.0)))
        self.assertAlmostEqual(
            trajectory_cost(outcome.trajectory.snapshots[1:], outcome.controls, cfg), outcome.cost, places=12)

        stochastic_a = evaluate_policy(policy, X0, cfg, deterministic=False, rng=np.random.default_rng(9))
        stochastic_b = evaluate_policy(policy, X0, cfg, deterministic=False, rng=np.random.default_rng(9))
        self.assertEqual(stochastic_a.cost, stochastic_b.cost)

        with self.assertRaises(ContractViolation):
            evaluate_policy(policy, OpinionMatrix(np.zeros((5, 3))), cfg)

    def test_stochastic_evaluation_needs_rng(self):
        """随机评估未传rng时报错，而不是使用未播种的生成器"""
        cfg = control_config(horizon=3)
        policy = init_policy(4, 2, 3, np.random.default_rng(0), hidden=8)
        X0 = OpinionMatrix(np.random.default_rng(1).uniform(size=(4, 3)))
        with self.assertRaises(ContractViolation):
            evaluate_policy(policy, X0, cfg, deterministic=False)

    def test_checkpoint_roundtrip(self):
        """检查点保存后读回参数不变"""
        policy = init_policy(4, 2, 3, np.random.default_rng(0), hidden=8)
        path = save_policy(policy, Path(self.temp_dir) / "nested" / "policy.npz", PPOConfig(hidden=8))
        loaded = load_policy(path)
        self.assertEqual((loaded.n_users, loaded.n_propagators, loaded.m), (4, 2, 3))
        for name in ACTOR_LAYERS:
            np.testing.assert_array_equal(loaded.actor[name], policy.actor[name])
        for name in CRITIC_LAYERS:
            np.testing.assert_array_equal(loaded.critic[name], policy.critic[name])

    def test_checkpoint_errors(self):
        """版本不符、字段缺失与文件不存在"""
        bad_version = Path(self.temp_dir) / "bad.npz"
        np.savez(bad_version, format_version=np.array(99))
        with self.assertRaises(ContractViolation):
            load_policy(bad_version)
        incomplete = Path(self.temp_dir) / "incomplete.npz"
        np.savez(incomplete, format_version=np.array(1), shape=np.array([4, 2, 3]))
        with self.assertRaises(ContractViolation):
            load_policy(incomplete)
        with self.assertRaises(OSError):
            load_policy(Path(self.temp_dir) / "missing.npz")

    @unittest.skipUnless(SLOW, "设置 PYODRS_SLOW=1 运行长时间训练")
    def test_training_improves_reward(self):
        """单用户实例上训练后奖励提升"""
        cfg_control = control_config(n_propagators=1, horizon=5, epsilon=0.0,
                                     target=(0.8, 0.8, 0.8), control_weight=0.01)

        def factory(rng):
            return OpinionMatrix([[0.2, 0.2, 0.2]]), np.full(3, 0.8)

        cfg = PPOConfig(episodes=600, hidden=32, actor_lr=3e-3, critic_lr=3e-3, seed=0)
        _, curve = ppo_train(factory, cfg, cfg_control, n_users=1)
        self.assertGreater(np.mean(curve.rewards[-50:]), np.mean(curve.rewards[:50]))

    @unittest.skipUnless(SLOW, "设置 PYODRS_SLOW=1 运行完整规模的训练")
    def test_fixture_manipulation(self):
        """随包8x3数据上训练后的策略把平均偏差压到0.2以内"""
        X0 = densify(load_ratings_csv(bundled_fixture_path()), 8, 3)
        for kernel in ("distance", "angle"):
            with self.subTest(kernel=kernel):
                cfg_control = ControlConfig.from_mapping({"kernel": kernel})
                np.testing.assert_array_equal(cfg_control.target, EXEMPLAR_TARGET)
                cfg = PPOConfig.for_kernel(cfg_control.kernel.method)
                policy, _ = ppo_train(fixed_env_factory(X0, cfg_control.target), cfg, cfg_control, n_users=8)
                trained = evaluate_policy(policy, X0, cfg_control).avg_deviation
                untrained = evaluate_policy(
                    init_policy(8, cfg_control.n_propagators, 3, np.random.default_rng(cfg.seed)),
                    X0, cfg_control).avg_deviation
                baseline = uncontrolled_outcome(X0, cfg_control).avg_deviation
                self.assertLessEqual(trained, 0.20)
                self.assertLessEqual(trained, 0.7 * baseline)
                self.assertLess(trained, untrained)


if __name__ == "__main__":
    unittest.main()
