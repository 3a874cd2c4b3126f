"""
文件工具函数
"""

import json
from pathlib import Path
from typing import Any, Union

import numpy as np

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
FIXTURE_NAME = "yelp_like_fixture.csv"
TABLE_NAME = "tammes_m3.tsv"


def create_output_directory(output_path: Union[str, Path]) -> Path:
    """
    创建输出目录

    Args:
        output_path: 输出目录路径

    Returns:
        创建的目录路径
    """
    output_dir = Path(output_path)
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"无法创建输出目录 {output_dir}: {e}") from e
    return output_dir


def _json_default(value: Any):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"无法序列化类型 {type(value).__name__}")


def write_json_file(data: dict, file_path: Union[str, Path], indent: int = 2) -> Path:
    """
    写入JSON文件（numpy数组与标量自动转换）

    Args:
        data: 数据
        file_path: 文件路径
        indent: 缩进
    """
    file_path = Path(file_path)
    try:
        with open(file_path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(data, f, indent=indent, ensure_ascii=False, default=_json_default)
    except OSError as e:
        raise OSError(f"无法写入JSON文件 {file_path}: {e}") from e
    return file_path


def read_json_file(file_path: Union[str, Path]) -> dict:
    """
    读取JSON文件

    Args:
        file_path: 文件路径

    Returns:
        JSON数据
    """
    try:
        with open(file_path, "r", encoding="utf-8") as f:
            return json.load(f)
    except OSError as e:
        raise OSError(f"无法读取JSON文件 {file_path}: {e}") from e


def bundled_fixture_path() -> Path:
    """随包发布的合成Yelp评分数据"""
    return DATA_DIR / FIXTURE_NAME


def bundled_table_path() -> Path:
    """随包发布的m=3球面编码表"""
    return DATA_DIR / TABLE_NAME
