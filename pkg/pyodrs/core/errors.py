"""
异常类型定义

所有异常都派生自ValueError，命令行层统一捕获后以退出码1结束。
"""

from typing import Optional


class ContractViolation(ValueError):
    """前置条件不满足（维度不一致、取值越界等）"""


class DomainError(ValueError):
    """参数超出公式定义域"""


class NoBoundAvailableError(ValueError):
    """当前维度没有可用的聚类上界"""


class RatingsParseError(ValueError):
    """评分CSV解析失败"""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"第{line}行: {message}"
        super().__init__(message)


class DenseBlockError(ValueError):
    """找不到完全稠密的用户×物品子块"""


class TrainingDivergedError(ValueError):
    """训练发散（回合奖励为NaN或参数出现非有限值）"""

    def __init__(self, episode: int, detail: str = ""):
        self.episode = episode
        message = f"训练在第{episode}个回合发散，已中止"
        if detail:
            message += f" ({detail})"
        super().__init__(message)
