#!/usr/bin/env python3
"""
PyODRS - 推荐系统中观点动力学仿真与操控命令行接口
"""

import copy
import functools
import math
import os
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import click
import numpy as np
import yaml

from pyodrs.control.environment import (
    EXEMPLAR_TARGET,
    ControlConfig,
    fixed_env_factory,
    rollout,
    uncontrolled_outcome,
)
from pyodrs.control.evolution import EAConfig, decode_genome, ea_optimize
from pyodrs.control.ppo import PPOConfig, evaluate_policy, init_policy, load_policy, ppo_train, save_policy
from pyodrs.core.bounds import epsilon_grid, load_spherical_code_table
from pyodrs.core.clusters import clusters
from pyodrs.core.dynamics import OpinionMatrix, simulate
from pyodrs.core.kernels import KernelConfig, SimilarityMethod
from pyodrs.core.sweep import bound_sweep
from pyodrs.reporting.console_reporter import ConsoleReporter
from pyodrs.reporting.csv_exporter import (
    export_bounds_csv,
    export_controls_csv,
    export_fitness_history_csv,
    export_training_curve_csv,
    export_trajectory_csv,
)
from pyodrs.reporting.json_reporter import RunRecord, export_run_json
from pyodrs.utils.file_utils import bundled_fixture_path, bundled_table_path, create_output_directory
from pyodrs.utils.metrics import bound_slack, intra_cluster_spread, rank_correlation, trajectory_summary
from pyodrs.utils.ratings import densify, load_ratings_csv

DEFAULT_CONFIG: Dict[str, Any] = {
    "simulation": {
        "kernel": "distance",
        "epsilon": 0.5,
        "users": 14,
        "items": 3,
        "max_steps": 10000,
        "tol": 1e-9,
    },
    "bounds": {
        "kernel": "distance",
        "points": 21,
        "eps_min": 0.0,
        "eps_max": 1.0,
        "users": 50,
        "dim": 3,
        "trials": 100,
        "table": None,
    },
    "manipulation": {
        "kernel": "distance",
        "epsilon": 0.2,
        "horizon": 20,
        "propagators": 2,
        "users": 8,
        "target": list(EXEMPLAR_TARGET),
        "state_weight": 1.0,
        "control_weight": 0.1,
    },
    "ppo": {},
    "ea": {},
    "reporting": {
        "output_dir": "./runs",
        "seed": 0,
    },
}


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """递归合并配置，override优先"""
    merged = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(config_path: str) -> Dict:
    """加载配置文件，缺失时使用默认配置"""
    if config_path and os.path.exists(config_path):
        with open(config_path, 'r', encoding='utf-8') as f:
            user_config = yaml.safe_load(f) or {}
        if not isinstance(user_config, dict):
            raise click.UsageError(f"配置文件 {config_path} 的顶层必须是映射")
        merged = deep_merge(DEFAULT_CONFIG, user_config)
        merged["__file__"] = str(config_path)
        return merged
    return copy.deepcopy(DEFAULT_CONFIG)


def runtime_errors(func):
    """运行期错误（ValueError/OSError）输出到stderr并以退出码1结束"""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (ValueError, OSError) as e:
            click.echo(f"❌ {e}", err=True)
            sys.exit(1)
    return wrapper


def parse_target(ctx, param, value: Optional[str]) -> Optional[Tuple[float, ...]]:
    if value is None:
        return None
    try:
        return tuple(float(part) for part in value.split(","))
    except ValueError:
        raise click.BadParameter(f"目标观点应为逗号分隔的实数，例如 0.8,0.9,0.1: {value}")


def pick(value, section: Dict[str, Any], key: str):
    """命令行参数优先，未给出时取配置值"""
    return section.get(key) if value is None else value


def resolve_seed(seed: Optional[int], config: Dict) -> int:
    return int(seed if seed is not None else config["reporting"].get("seed", 0))


def input_options(func):
    func = click.option("--items", "-m", type=click.IntRange(min=1), default=None, help="观点维度（商家数）")(func)
    func = click.option("--users", "-n", type=click.IntRange(min=1), default=None, help="用户数")(func)
    func = click.option("--random", "random_x0", is_flag=True, help="使用均匀随机初始观点")(func)
    func = click.option("--fixture", is_flag=True, help="使用随包发布的合成Yelp数据")(func)
    func = click.option("--input", "input_path", type=click.Path(dir_okay=False), default=None,
                        help="评分CSV（user_id,item_id,stars）")(func)
    return func


def control_options(func):
    func = click.option("--propagators", type=click.IntRange(min=1), default=None, help="传播者数量")(func)
    func = click.option("--target", callback=parse_target, default=None,
                        help="目标观点，逗号分隔")(func)
    func = click.option("--horizon", type=click.IntRange(min=1), default=None, help="时域长度N")(func)
    func = click.option("--epsilon", type=click.FloatRange(0.0, 1.0), default=None, help="核函数阈值epsilon")(func)
    func = click.option("--kernel", type=click.Choice(["distance", "angle"]), default=None,
                        help="相似度核函数")(func)
    return func


def common_options(func):
    func = click.option("--out", "-o", default=None, help="输出目录")(func)
    func = click.option("--seed", type=int, envvar="PYODRS_SEED", default=None,
                        help="随机种子（默认读取环境变量PYODRS_SEED）")(func)
    return func


def load_initial_opinions(input_path: Optional[str], fixture: bool, random_x0: bool,
                          users: int, items: int, seed: int,
                          default_fixture: bool = False) -> Tuple[OpinionMatrix, str]:
    """
    按输入来源构建初始观点矩阵

    Returns:
        (X0, 来源描述)
    """
    chosen = sum([input_path is not None, fixture, random_x0])
    if chosen > 1:
        raise click.UsageError("--input、--fixture、--random 只能选择一个")
    if chosen == 0:
        if not default_fixture:
            raise click.UsageError("缺少初始观点来源：请指定 --input、--fixture 或 --random")
        fixture = True
    if users is None or users < 1 or items is None or items < 1:
        raise click.UsageError("--users 与 --items 必须为正整数")

    if random_x0:
        rng = np.random.default_rng(seed)
        return OpinionMatrix(rng.uniform(0.0, 1.0, size=(users, items))), "random"
    path = bundled_fixture_path() if fixture else Path(input_path)
    click.echo(f"📄 读取评分数据: {path}")
    return densify(load_ratings_csv(path), users, items), str(path)


def build_control_config(config: Dict, kernel, epsilon, horizon, target, propagators) -> ControlConfig:
    section = dict(config["manipulation"])
    for key, value in (("kernel", kernel), ("epsilon", epsilon), ("horizon", horizon),
                       ("target", target), ("propagators", propagators)):
        if value is not None:
            section[key] = list(value) if key == "target" else value
    return ControlConfig.from_mapping(section)


@click.group()
@click.option("--config", "-c", default="config.yaml", help="配置文件路径")
@click.pass_context
def cli(ctx, config: str):
    """PyODRS - 推荐系统观点动力学仿真与操控工具"""
    ctx.obj = load_config(config)


@cli.command(name="simulate")
@input_options
@click.option("--kernel", type=click.Choice(["distance", "angle"]), default=None, help="相似度核函数")
@click.option("--epsilon", type=click.FloatRange(0.0, 1.0), default=None, help="核函数阈值epsilon")
@click.option("--radius", type=click.FloatRange(min=0.0), default=None, help="连接半径 sqrt(m)(1-epsilon)，仅距离法")
@click.option("--max-steps", type=click.IntRange(min=1), default=None, help="最大演化步数")
@click.option("--tol", type=click.FloatRange(min=0.0, min_open=True), default=None, help="终止容差")
@common_options
@click.pass_obj
@runtime_errors
def simulate_cmd(config: Dict, input_path, fixture, random_x0, users, items, kernel, epsilon,
                 radius, max_steps, tol, seed, out):
    """运行自治ODRS观点演化"""
    section = config["simulation"]
    seed = resolve_seed(seed, config)
    method = SimilarityMethod(pick(kernel, section, "kernel"))
    if epsilon is not None and radius is not None:
        raise click.UsageError("--epsilon 与 --radius 不能同时指定")
    if radius is not None and method is not SimilarityMethod.DISTANCE:
        raise click.UsageError("--radius 只适用于距离法")

    X0, source = load_initial_opinions(input_path, fixture, random_x0,
                                       pick(users, section, "users"), pick(items, section, "items"), seed)
    if radius is not None:
        if radius > math.sqrt(X0.m):
            raise click.BadParameter(f"半径必须在[0, sqrt({X0.m})]内，当前为 {radius}", param_hint="--radius")
        cfg = KernelConfig.from_radius(method, radius, X0.m)
    else:
        cfg = KernelConfig(method=method, epsilon=float(pick(epsilon, section, "epsilon")))

    max_steps = int(pick(max_steps, section, "max_steps"))
    tol = float(pick(tol, section, "tol"))
    click.echo(f"🔁 开始仿真: n={X0.n}, m={X0.m}, {method.value}, epsilon={cfg.epsilon:.6f}")
    record = RunRecord(command="simulate", seed=seed, config={
        **cfg.to_dict(), "radius": cfg.radius(X0.m), "n": X0.n, "m": X0.m,
        "source": source, "max_steps": max_steps, "tol": tol,
    })
    trajectory = simulate(X0, cfg, max_steps=max_steps, tol=tol)

    partition = clusters(trajectory.final, cfg)
    summary = trajectory_summary(trajectory)
    spread = intra_cluster_spread(trajectory.final, partition)

    out_dir = create_output_directory(pick(out, config["reporting"], "output_dir"))
    record.add_artifact("trajectory", export_trajectory_csv(trajectory, out_dir / "trajectory.csv"))
    record.cluster_counts = trajectory.cluster_counts
    record.results = {**summary, "clusters": partition.count,
                      "assignments": list(partition.assignments), "intra_cluster_spread": spread}
    export_run_json(record.finish(), out_dir / "run.json")

    ConsoleReporter("simulate", record.config).display_simulation(summary, partition.count, spread)
    click.echo(f"最终聚类数: {partition.count}")
    click.echo(f"最终直径: {summary['final_diameter']:.6g}")
    click.echo(f"📁 结果已写入: {out_dir}")


@cli.command(name="bounds")
@click.option("--kernel", type=click.Choice(["distance", "angle"]), default=None, help="相似度核函数")
@click.option("--points", type=click.IntRange(min=1), default=None, help="epsilon网格点数")
@click.option("--eps-min", type=click.FloatRange(0.0, 1.0), default=None, help="epsilon下限")
@click.option("--eps-max", type=click.FloatRange(0.0, 1.0), default=None, help="epsilon上限")
@click.option("--users", "-n", type=click.IntRange(min=1), default=None, help="用户数")
@click.option("--dim", "-m", type=click.IntRange(min=1), default=None, help="观点维度")
@click.option("--trials", type=click.IntRange(min=1), default=None, help="每个epsilon的随机试验次数")
@click.option("--table", type=click.Path(exists=True, dir_okay=False), default=None,
              help="球面编码表（N<TAB>角度）")
@click.option("--bundled-table", is_flag=True, help="使用随包发布的m=3球面编码表")
@common_options
@click.pass_obj
@runtime_errors
def bounds_cmd(config: Dict, kernel, points, eps_min, eps_max, users, dim, trials, table,
               bundled_table, seed, out):
    """扫描epsilon，对比观测最大聚类数与理论上界"""
    section = config["bounds"]
    seed = resolve_seed(seed, config)
    method = SimilarityMethod(pick(kernel, section, "kernel"))
    n = int(pick(users, section, "users"))
    m = int(pick(dim, section, "dim"))
    trials = int(pick(trials, section, "trials"))
    if table is not None and bundled_table:
        raise click.UsageError("--table 与 --bundled-table 不能同时指定")
    table_path = bundled_table_path() if bundled_table else pick(table, section, "table")
    code_table = load_spherical_code_table(table_path, m) if table_path else None
    low = float(pick(eps_min, section, "eps_min"))
    high = float(pick(eps_max, section, "eps_max"))
    if low > high:
        raise click.BadParameter(f"--eps-min ({low}) 不能大于 --eps-max ({high})", param_hint="--eps-min")
    grid = epsilon_grid(int(pick(points, section, "points")), low, high)

    click.echo(f"📐 扫描 {len(grid)} 个epsilon: n={n}, m={m}, trials={trials}, {method.value}")
    record = RunRecord(command="bounds", seed=seed, config={
        "kernel": method.value, "epsilons": list(grid), "n": n, "m": m, "trials": trials,
        "table": str(table_path) if table_path else None,
    })
    with click.progressbar(length=len(grid), label="扫描中...") as bar:
        rows = bound_sweep(method, grid, n, m, trials, seed, table=code_table,
                           progress=lambda _: bar.update(1))

    slack = bound_slack([r.observed for r in rows], [r.bound for r in rows])
    correlation = rank_correlation([r.observed for r in rows], [r.bound for r in rows])
    out_dir = create_output_directory(pick(out, config["reporting"], "output_dir"))
    record.add_artifact("bounds", export_bounds_csv(rows, out_dir / "bounds.csv"))
    record.results = {
        "rows": [{"epsilon": r.epsilon, "observed": r.observed, "mean_observed": r.mean_observed,
                  "bound": r.bound, "unterminated": r.unterminated} for r in rows],
        **slack,
        "rank_correlation": None if math.isnan(correlation) else correlation,
    }
    export_run_json(record.finish(), out_dir / "run.json")
    ConsoleReporter("bounds", record.config).display_bounds(rows, slack, correlation)
    click.echo(f"📁 结果已写入: {out_dir}")


@cli.command(name="train")
@control_options
@click.option("--users", "-n", type=click.IntRange(min=1), default=None, help="训练时的用户数")
@click.option("--episodes", type=click.IntRange(min=1), default=None, help="训练回合数")
@click.option("--fixture", is_flag=True, help="固定在随包数据与目标观点上训练（默认每回合随机采样）")
@click.option("--checkpoint", default=None, help="检查点路径（默认 <out>/policy.npz）")
@common_options
@click.pass_obj
@runtime_errors
def train_cmd(config: Dict, kernel, epsilon, horizon, target, propagators, users, episodes,
              fixture, checkpoint, seed, out):
    """用PPO训练观点操控策略"""
    seed = resolve_seed(seed, config)
    control_cfg = build_control_config(config, kernel, epsilon, horizon, target, propagators)
    n_users = int(pick(users, config["manipulation"], "users"))
    ppo_section = dict(config["ppo"])
    ppo_section["seed"] = seed
    if episodes is not None:
        ppo_section["episodes"] = episodes
    ppo_cfg = PPOConfig.from_mapping(ppo_section, control_cfg.kernel.method)
    env_factory = None
    if fixture:
        X0, _ = load_initial_opinions(None, True, False, n_users, control_cfg.m, seed)
        env_factory = fixed_env_factory(X0, control_cfg.target)

    out_dir = create_output_directory(pick(out, config["reporting"], "output_dir"))
    checkpoint = Path(checkpoint) if checkpoint else out_dir / "policy.npz"
    click.echo(f"🧠 开始训练: {ppo_cfg.episodes} 个回合, 用户数 {n_users}, "
               f"{control_cfg.kernel.method.value}, epsilon={control_cfg.kernel.epsilon}")
    record = RunRecord(command="train", seed=seed, config={
        "control": control_cfg.to_dict(), "ppo": ppo_cfg.to_dict(), "users": n_users,
        "instance": "fixture" if fixture else "random",
    })
    with click.progressbar(length=ppo_cfg.episodes, label="训练中...") as bar:
        params, curve = ppo_train(env_factory, ppo_cfg, control_cfg, n_users=n_users,
                                  progress=lambda episode, reward: bar.update(1))

    record.add_artifact("checkpoint", save_policy(params, checkpoint, ppo_cfg))
    record.add_artifact("training_curve", export_training_curve_csv(curve, out_dir / "training_curve.csv"))
    record.results = {"final_reward": curve.rewards[-1], "final_average_reward": curve.average_rewards[-1]}
    export_run_json(record.finish(), out_dir / "run.json")
    ConsoleReporter("train", record.config).display_training(curve.rewards, curve.average_rewards)
    click.echo(f"💾 检查点已保存: {checkpoint}")


@cli.command(name="evaluate")
@input_options
@control_options
@click.option("--checkpoint", type=click.Path(dir_okay=False), default=None, help="策略检查点")
@click.option("--untrained", is_flag=True, help="评估随机初始化（未训练）的策略")
@click.option("--stochastic", is_flag=True, help="按高斯分布采样动作而不是取均值")
@common_options
@click.pass_obj
@runtime_errors
def evaluate_cmd(config: Dict, input_path, fixture, random_x0, users, items, kernel, epsilon,
                 horizon, target, propagators, checkpoint, untrained, stochastic, seed, out):
    """在单个时域上评估策略"""
    seed = resolve_seed(seed, config)
    if (checkpoint is None) == (not untrained):
        raise click.UsageError("请指定 --checkpoint 或 --untrained 其中之一")
    control_cfg = build_control_config(config, kernel, epsilon, horizon, target, propagators)
    X0, source = load_initial_opinions(input_path, fixture, random_x0,
                                       pick(users, config["manipulation"], "users"),
                                       pick(items, {"items": control_cfg.m}, "items"),
                                       seed, default_fixture=True)
    if untrained:
        policy = init_policy(X0.n, control_cfg.n_propagators, control_cfg.m, np.random.default_rng(seed))
    else:
        policy = load_policy(checkpoint)
    outcome = evaluate_policy(policy, X0, control_cfg, deterministic=not stochastic,
                              rng=np.random.default_rng(seed))

    out_dir = create_output_directory(pick(out, config["reporting"], "output_dir"))
    record = RunRecord(command="evaluate", seed=seed, config={
        "control": control_cfg.to_dict(), "source": source,
        "checkpoint": None if untrained else str(checkpoint), "deterministic": not stochastic,
    })
    record.add_artifact("trajectory", export_trajectory_csv(outcome.trajectory, out_dir / "trajectory.csv"))
    record.add_artifact("controls", export_controls_csv(outcome.controls, out_dir / "controls.csv"))
    record.results = {"cost": outcome.cost, "avg_deviation": outcome.avg_deviation}
    export_run_json(record.finish(), out_dir / "run.json")

    label = "未训练策略" if untrained else "PPO策略"
    ConsoleReporter("evaluate", record.config).display_outcomes(
        [(label, outcome.cost, outcome.avg_deviation, None)])
    click.echo(f"代价: {outcome.cost:.6f}")
    click.echo(f"平均偏差: {outcome.avg_deviation:.6f}")


@cli.command(name="ea")
@input_options
@control_options
@click.option("--population", type=click.IntRange(min=2), default=None, help="种群规模")
@click.option("--max-generations", type=click.IntRange(min=1), default=None, help="最大代数")
@click.option("--patience", type=click.IntRange(min=1), default=None, help="停滞容忍代数")
@common_options
@click.pass_obj
@runtime_errors
def ea_cmd(config: Dict, input_path, fixture, random_x0, users, items, kernel, epsilon, horizon,
           target, propagators, population, max_generations, patience, seed, out):
    """用进化算法优化开环控制序列"""
    seed = resolve_seed(seed, config)
    control_cfg = build_control_config(config, kernel, epsilon, horizon, target, propagators)
    X0, source = load_initial_opinions(input_path, fixture, random_x0,
                                       pick(users, config["manipulation"], "users"),
                                       pick(items, {"items": control_cfg.m}, "items"),
                                       seed, default_fixture=True)
    ea_cfg = _ea_config(config, seed, population, max_generations, patience)

    click.echo(f"🧬 开始进化: 种群 {ea_cfg.population}, 最多 {ea_cfg.max_generations} 代")
    result = _run_ea(X0, control_cfg, ea_cfg)
    outcome = rollout(X0, decode_genome(result.best_genome, control_cfg), control_cfg)

    out_dir = create_output_directory(pick(out, config["reporting"], "output_dir"))
    record = RunRecord(command="ea", seed=seed, config={
        "control": control_cfg.to_dict(), "ea": ea_cfg.to_dict(), "source": source,
    })
    record.add_artifact("controls", export_controls_csv(outcome.controls, out_dir / "controls.csv"))
    record.add_artifact("fitness_history",
                        export_fitness_history_csv(result.fitness_history, out_dir / "fitness_history.csv"))
    record.add_artifact("trajectory", export_trajectory_csv(outcome.trajectory, out_dir / "trajectory.csv"))
    record.results = {"generations": result.generations, "best_fitness": result.best_fitness,
                      "cost": outcome.cost, "avg_deviation": outcome.avg_deviation}
    export_run_json(record.finish(), out_dir / "run.json")

    ConsoleReporter("ea", record.config).display_outcomes(
        [("EA", outcome.cost, outcome.avg_deviation, result.generations)])
    click.echo(f"代数: {result.generations}")
    click.echo(f"代价: {outcome.cost:.6f}")
    click.echo(f"平均偏差: {outcome.avg_deviation:.6f}")


@cli.command(name="compare")
@input_options
@control_options
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False), default=None,
              help="参与对比的PPO策略检查点")
@click.option("--population", type=click.IntRange(min=2), default=None, help="EA种群规模")
@click.option("--max-generations", type=click.IntRange(min=1), default=None, help="EA最大代数")
@click.option("--patience", type=click.IntRange(min=1), default=None, help="EA停滞容忍代数")
@common_options
@click.pass_obj
@runtime_errors
def compare_cmd(config: Dict, input_path, fixture, random_x0, users, items, kernel, epsilon,
                horizon, target, propagators, checkpoint, population, max_generations, patience,
                seed, out):
    """在同一初始观点上对比无控制、PPO策略与EA"""
    seed = resolve_seed(seed, config)
    control_cfg = build_control_config(config, kernel, epsilon, horizon, target, propagators)
    X0, source = load_initial_opinions(input_path, fixture, random_x0,
                                       pick(users, config["manipulation"], "users"),
                                       pick(items, {"items": control_cfg.m}, "items"),
                                       seed, default_fixture=True)
    rows = []
    baseline = uncontrolled_outcome(X0, control_cfg)
    rows.append(("无控制", baseline.cost, baseline.avg_deviation, None))
    if checkpoint is not None:
        rl = evaluate_policy(load_policy(checkpoint), X0, control_cfg)
        rows.append(("PPO", rl.cost, rl.avg_deviation, None))

    ea_cfg = _ea_config(config, seed, population, max_generations, patience)
    result = _run_ea(X0, control_cfg, ea_cfg)
    ea = rollout(X0, decode_genome(result.best_genome, control_cfg), control_cfg)
    rows.append(("EA", ea.cost, ea.avg_deviation, result.generations))

    out_dir = create_output_directory(pick(out, config["reporting"], "output_dir"))
    record = RunRecord(command="compare", seed=seed, config={
        "control": control_cfg.to_dict(), "ea": ea_cfg.to_dict(), "source": source,
        "checkpoint": str(checkpoint) if checkpoint else None,
    })
    record.results = {label: {"cost": cost, "avg_deviation": dev, "iterations": iters}
                      for label, cost, dev, iters in rows}
    export_run_json(record.finish(), out_dir / "run.json")
    ConsoleReporter("compare", record.config).display_outcomes(rows)


def _ea_config(config: Dict, seed: int, population, max_generations, patience) -> EAConfig:
    section = dict(config["ea"])
    section["seed"] = seed
    for key, value in (("population", population), ("max_generations", max_generations),
                       ("patience", patience)):
        if value is not None:
            section[key] = value
    return EAConfig.from_mapping(section)


def _run_ea(X0: OpinionMatrix, control_cfg: ControlConfig, ea_cfg: EAConfig):
    with click.progressbar(length=ea_cfg.max_generations, label="进化中...") as bar:
        return ea_optimize(X0, control_cfg, ea_cfg, progress=lambda generation, best: bar.update(1))


if __name__ == "__main__":
    cli()
