"""
控制台报告生成器
"""

import math
from datetime import datetime
from typing import Any, Dict, Optional, Sequence, Tuple

import click

from pyodrs.core.sweep import SweepRow

COLORS = {
    'red': '\033[91m',
    'green': '\033[92m',
    'yellow': '\033[93m',
    'blue': '\033[94m',
    'cyan': '\033[96m',
    'white': '\033[97m',
    'bold': '\033[1m',
    'reset': '\033[0m',
}

# (标签, 代价J_N, 平均偏差, 迭代次数)
OutcomeRow = Tuple[str, float, float, Optional[int]]


class ConsoleReporter:
    """控制台报告生成器（非终端输出时click会去掉颜色码）"""

    def __init__(self, command: str, config: Dict[str, Any]):
        self.command = command
        self.config = config
        self.timestamp = datetime.now().strftime("%Y-%m-%d %H:%M:%S")

    def _c(self, color: str, text: str) -> str:
        return f"{COLORS[color]}{text}{COLORS['reset']}"

    def _header(self, title: str):
        click.echo("\n" + "=" * 60)
        click.echo(self._c('bold', self._c('blue', f"🧭 {title}")))
        click.echo("=" * 60)
        click.echo(self._c('cyan', f"生成时间: {self.timestamp}"))
        click.echo(self._c('cyan', f"命令: {self.command}"))
        click.echo("-" * 60)

    def display_simulation(self, summary: Dict[str, Any], clusters: int, spread: float):
        """打印仿真摘要"""
        self._header("ODRS 观点演化仿真")
        kernel = self.config.get("kernel", "?")
        click.echo(f"核函数: {kernel}    epsilon: {self.config.get('epsilon')}")
        click.echo(f"演化步数: {summary['steps']}")
        if summary["terminated"]:
            click.echo(self._c('green', f"✅ 在第 {summary['termination_step']} 步终止"))
        else:
            click.echo(self._c('yellow', "⚠️  达到最大步数仍未终止"))
        click.echo(f"直径: {summary['initial_diameter']:.6f} -> {summary['final_diameter']:.6f}")
        color = 'green' if clusters == 1 else 'yellow'
        click.echo(self._c('bold', f"📊 最终聚类数: {self._c(color, str(clusters))}"))
        click.echo(f"聚类内最大距离: {spread:.3e}")

    def display_bounds(self, rows: Sequence[SweepRow], slack: Dict[str, Any], correlation: float):
        """打印epsilon扫描结果表"""
        self._header("聚类数上界扫描")
        click.echo(f"{'epsilon':>10} {'observed':>10} {'mean':>10} {'bound':>8}")
        for row in rows:
            color = 'white' if row.dominated else 'red'
            line = f"{row.epsilon:>10.4f} {row.observed:>10d} {row.mean_observed:>10.2f} {row.bound:>8d}"
            if row.unterminated:
                line += f"  (未终止 {row.unterminated})"
            click.echo(self._c(color, line))
        click.echo("-" * 60)
        if slack["violations"]:
            click.echo(self._c('red', f"❌ {slack['violations']} 行观测值超过上界"))
        else:
            click.echo(self._c('green', "✅ 所有观测值均不超过理论上界"))
        if slack["min_gap"] is not None:
            click.echo(f"最小间隙: {slack['min_gap']:.0f}    平均间隙: {slack['mean_gap']:.2f}")
        if not math.isnan(correlation):
            click.echo(f"观测值与上界的秩相关: {correlation:.3f}")

    def display_training(self, rewards: Sequence[float], average_rewards: Sequence[float]):
        """打印训练摘要"""
        self._header("PPO 训练")
        click.echo(f"训练回合数: {len(rewards)}")
        if rewards:
            click.echo(f"首回合奖励: {rewards[0]:.4f}")
            click.echo(f"末回合奖励: {rewards[-1]:.4f}")
            click.echo(self._c('bold', f"📈 末尾平均奖励: {average_rewards[-1]:.4f}"))

    def display_outcomes(self, rows: Sequence[OutcomeRow]):
        """打印操控效果对比表"""
        self._header("观点操控效果对比")
        click.echo(f"{'方法':<12} {'代价 J_N':>14} {'平均偏差':>12} {'迭代次数':>10}")
        best = min((r[2] for r in rows), default=None)
        for label, cost, deviation, iterations in rows:
            iters = "-" if iterations is None else str(iterations)
            line = f"{label:<12} {cost:>14.4f} {deviation:>12.4f} {iters:>10}"
            click.echo(self._c('green', line) if deviation == best else line)
