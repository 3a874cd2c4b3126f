"""
进化算法基线

个体 = 整个时域的开环控制序列（长度 N*n_e*m 的扁平向量）。
适应度 = -J_N。锦标赛选择 + 均匀交叉 + 高斯变异，精英直接保留。
"""

from dataclasses import asdict, dataclass, fields
from typing import Any, Callable, Dict, List, Mapping, NamedTuple, Optional

import numpy as np

from pyodrs.control.environment import ControlConfig, ManipulationEnv
from pyodrs.core.dynamics import OpinionMatrix
from pyodrs.core.errors import ContractViolation

IMPROVEMENT_TOL = 1e-9


@dataclass(frozen=True)
class EAConfig:
    """进化算法超参数"""
    population: int = 64
    tournament: int = 4
    elites: int = 8
    crossover_prob: float = 0.5
    mutation_prob: float = 0.1
    mutation_std: float = 0.1
    patience: int = 50
    max_generations: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.population < 2:
            raise ContractViolation(f"种群规模至少为2，当前为 {self.population}")
        if not 1 <= self.tournament <= self.population:
            raise ContractViolation(f"锦标赛规模必须在[1, {self.population}]内，当前为 {self.tournament}")
        if not 1 <= self.elites <= self.population:
            raise ContractViolation(f"精英数量必须在[1, {self.population}]内，当前为 {self.elites}")
        for name in ("crossover_prob", "mutation_prob"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ContractViolation(f"{name}必须在[0,1]内，当前为 {value}")
        if self.mutation_std < 0.0:
            raise ContractViolation("mutation_std不能为负")
        if self.patience < 1 or self.max_generations < 1:
            raise ContractViolation("patience与max_generations必须为正")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "EAConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known and v is not None})

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class Individual:
    genome: np.ndarray
    fitness: float


class EAResult(NamedTuple):
    """优化结果：最优基因组、逐代最优适应度、运行代数"""
    best_genome: np.ndarray
    fitness_history: List[float]
    generations: int
    best_fitness: float


def decode_genome(genome, cfg: ControlConfig) -> List[np.ndarray]:
    """扁平基因组 -> N个 n_e×m 控制输入（按 k, 传播者, 维度 的行优先顺序）"""
    genome = np.asarray(genome, dtype=float)
    if genome.shape != (cfg.genome_length,):
        raise ContractViolation(f"基因组长度应为 {cfg.genome_length}，当前为 {genome.shape}")
    blocks = genome.reshape(cfg.horizon, cfg.n_propagators, cfg.m)
    return [blocks[k] for k in range(cfg.horizon)]


def fitness(genome, X0: OpinionMatrix, cfg: ControlConfig) -> float:
    """适应度 = -J_N（由逐步奖励累加，与rollout代价一致）"""
    controls = decode_genome(genome, cfg)
    env = ManipulationEnv(cfg)
    env.reset(X0)
    total = 0.0
    for U in controls:
        _, r, _ = env.step(U)
        total += r
    return total


def _tournament(pool: List[Individual], size: int, rng: np.random.Generator) -> Individual:
    picks = rng.choice(len(pool), size=min(size, len(pool)), replace=False)
    return max((pool[i] for i in picks), key=lambda ind: ind.fitness)


def uniform_crossover(a: np.ndarray, b: np.ndarray, prob: float, rng: np.random.Generator) -> np.ndarray:
    """每个基因以prob的概率取自第二个父代"""
    mask = rng.random(a.shape) < prob
    return np.where(mask, b, a)


def gaussian_mutation(genome: np.ndarray, prob: float, std: float, rng: np.random.Generator) -> np.ndarray:
    """逐基因高斯变异并裁剪到[0,1]"""
    mask = rng.random(genome.shape) < prob
    noise = rng.normal(0.0, std, size=genome.shape) if std > 0 else np.zeros_like(genome)
    return np.clip(np.where(mask, genome + noise, genome), 0.0, 1.0)


def ea_optimize(X0: OpinionMatrix, control_cfg: ControlConfig, ea_cfg: EAConfig,
                progress: Optional[Callable[[int, float], None]] = None) -> EAResult:
    """
    进化算法优化开环控制序列

    每代：按适应度排序，前elites个个体原样进入下一代；其余个体由
    精英池中锦标赛选出的两个父代经均匀交叉与高斯变异生成。
    连续patience代最优适应度提升不超过1e-9，或达到max_generations时停止。

    Args:
        X0: 初始观点
        control_cfg: 操控问题配置
        ea_cfg: 进化算法超参数
        progress: 每代结束后调用 progress(generation, best_fitness)

    Returns:
        EAResult
    """
    X0 = X0 if isinstance(X0, OpinionMatrix) else OpinionMatrix(X0)
    rng = np.random.default_rng(ea_cfg.seed)
    length = control_cfg.genome_length

    def evaluate(genome: np.ndarray) -> Individual:
        return Individual(genome, fitness(genome, X0, control_cfg))

    population = [evaluate(rng.uniform(0.0, 1.0, size=length)) for _ in range(ea_cfg.population)]
    population.sort(key=lambda ind: ind.fitness, reverse=True)
    best = population[0]
    history: List[float] = []
    stale = 0
    generation = 0

    while generation < ea_cfg.max_generations and stale < ea_cfg.patience:
        generation += 1
        elites = population[:ea_cfg.elites]
        offspring = []
        for _ in range(ea_cfg.population - len(elites)):
            first = _tournament(elites, ea_cfg.tournament, rng)
            second = _tournament(elites, ea_cfg.tournament, rng)
            child = uniform_crossover(first.genome, second.genome, ea_cfg.crossover_prob, rng)
            child = gaussian_mutation(child, ea_cfg.mutation_prob, ea_cfg.mutation_std, rng)
            offspring.append(evaluate(child))

        # sort是稳定的，同分时精英排在子代前
        population = sorted(elites + offspring, key=lambda ind: ind.fitness, reverse=True)
        if population[0].fitness > best.fitness + IMPROVEMENT_TOL:
            stale = 0
        else:
            stale += 1
        if population[0].fitness > best.fitness:
            best = population[0]
        history.append(best.fitness)
        if progress is not None:
            progress(generation, best.fitness)

    return EAResult(best.genome.copy(), history, generation, best.fitness)
