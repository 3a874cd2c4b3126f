"""
运行记录（JSON）
"""

import time
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pyodrs import __version__
from pyodrs.utils.file_utils import read_json_file, write_json_file


@dataclass
class RunRecord:
    """
    一次命令运行的自描述记录

    config中回显的参数足以重新生成同样的输出。
    """
    command: str
    config: Dict[str, Any]
    seed: Optional[int] = None
    artifacts: Dict[str, str] = field(default_factory=dict)
    cluster_counts: List[int] = field(default_factory=list)
    results: Dict[str, Any] = field(default_factory=dict)
    duration_seconds: float = 0.0
    timestamp: str = field(default_factory=lambda: datetime.now().isoformat())
    _started: float = field(default_factory=time.perf_counter, repr=False)

    def add_artifact(self, name: str, path: Union[str, Path]):
        self.artifacts[name] = Path(path).name

    def finish(self) -> "RunRecord":
        self.duration_seconds = time.perf_counter() - self._started
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {
            "metadata": {
                "tool": "pyodrs",
                "version": __version__,
                "timestamp": self.timestamp,
                "command": self.command,
                "duration_seconds": self.duration_seconds,
            },
            "config": self.config,
            "seed": self.seed,
            "artifacts": self.artifacts,
            "cluster_counts": self.cluster_counts,
            "results": self.results,
        }


def export_run_json(record: RunRecord, path: Union[str, Path]) -> Path:
    """写出运行记录（缩进2、保留中文）"""
    return write_json_file(record.to_dict(), path)


def load_run_json(path: Union[str, Path]) -> Dict[str, Any]:
    return read_json_file(path)
