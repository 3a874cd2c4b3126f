"""
工具模块：文件读写、评分数据与结果指标
"""

from pyodrs.utils.file_utils import (
    bundled_fixture_path,
    bundled_table_path,
    create_output_directory,
    read_json_file,
    write_json_file,
)
from pyodrs.utils.metrics import (
    bound_slack,
    cluster_centers,
    intra_cluster_spread,
    rank_correlation,
    trajectory_summary,
)
from pyodrs.utils.ratings import RatingsTable, densify, load_ratings_csv, normalize_stars

__all__ = [
    "bundled_fixture_path",
    "bundled_table_path",
    "create_output_directory",
    "read_json_file",
    "write_json_file",
    "bound_slack",
    "cluster_centers",
    "intra_cluster_spread",
    "rank_correlation",
    "trajectory_summary",
    "RatingsTable",
    "densify",
    "load_ratings_csv",
    "normalize_stars",
]
