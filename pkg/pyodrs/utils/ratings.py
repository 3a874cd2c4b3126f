"""
评分数据读取与稠密化

把 (用户, 商家, 星级) 记录转换为初始观点矩阵：星级 s -> (s-1)/4。
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
import pandas as pd

from pyodrs.core.dynamics import OpinionMatrix
from pyodrs.core.errors import ContractViolation, DenseBlockError, RatingsParseError

COLUMNS = ["user_id", "item_id", "stars"]
MIN_STARS = 1
MAX_STARS = 5


@dataclass
class RatingsTable:
    """评分记录表，(user_id, item_id) 唯一"""
    frame: pd.DataFrame

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def users(self) -> List[str]:
        return sorted(self.frame["user_id"].unique().tolist())

    @property
    def items(self) -> List[str]:
        return sorted(self.frame["item_id"].unique().tolist())

    def records(self) -> List[Tuple[str, str, int]]:
        return [(u, i, int(s)) for u, i, s in self.frame[COLUMNS].itertuples(index=False)]


def normalize_stars(stars) -> np.ndarray:
    """星级归一化 s -> (s-1)/4"""
    return (np.asarray(stars, dtype=float) - MIN_STARS) / (MAX_STARS - MIN_STARS)


def load_ratings_csv(path: Union[str, Path]) -> RatingsTable:
    """
    读取评分CSV

    文件为UTF-8、逗号分隔，表头必须是 `user_id,item_id,stars`。
    重复的 (user_id, item_id) 以最后一条为准。

    Args:
        path: CSV文件路径

    Returns:
        RatingsTable

    Raises:
        RatingsParseError: 表头缺失、星级非整数或越界，错误信息带行号
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise RatingsParseError("文件为空，缺少表头 user_id,item_id,stars", line=1)
    except pd.errors.ParserError as e:
        raise RatingsParseError(f"CSV格式错误: {e}")
    except OSError as e:
        raise OSError(f"无法读取评分文件 {path}: {e}") from e

    header = [str(c).strip() for c in frame.columns]
    if header != COLUMNS:
        raise RatingsParseError(f"表头应为 {','.join(COLUMNS)}，实际为 {','.join(header)}", line=1)
    frame.columns = COLUMNS

    stars = []
    for index, row in enumerate(frame.itertuples(index=False)):
        line = index + 2
        if not row.user_id.strip() or not row.item_id.strip():
            raise RatingsParseError("user_id与item_id不能为空", line=line)
        raw = row.stars.strip()
        try:
            value = int(raw)
        except ValueError:
            raise RatingsParseError(f"星级不是整数: {raw!r}", line=line)
        if not MIN_STARS <= value <= MAX_STARS:
            raise RatingsParseError(f"星级必须在{MIN_STARS}到{MAX_STARS}之间: {value}", line=line)
        stars.append(value)

    frame = frame.assign(
        user_id=frame["user_id"].str.strip(),
        item_id=frame["item_id"].str.strip(),
        stars=pd.Series(stars, index=frame.index, dtype="int64"),
    )
    frame = frame.drop_duplicates(subset=["user_id", "item_id"], keep="last").reset_index(drop=True)
    return RatingsTable(frame)


def select_block(table: RatingsTable, n: int, m: int) -> Tuple[List[str], List[str]]:
    """
    按评分数量贪心选择n个用户与m个商家

    用户按总评分数降序、id升序；商家按所选用户内的评分数降序、id升序。
    """
    frame = table.frame
    user_counts = frame.groupby("user_id").size().reset_index(name="count")
    user_counts = user_counts.sort_values(["count", "user_id"], ascending=[False, True])
    users = user_counts["user_id"].head(n).tolist()

    chosen = frame[frame["user_id"].isin(users)]
    item_counts = chosen.groupby("item_id").size().reset_index(name="count")
    item_counts = item_counts.sort_values(["count", "item_id"], ascending=[False, True])
    items = item_counts["item_id"].head(m).tolist()
    return users, items


def densify(table: RatingsTable, n: int, m: int) -> OpinionMatrix:
    """
    提取完全稠密的 n×m 子块并归一化为观点矩阵

    Raises:
        DenseBlockError: 选中的子块不完全稠密或数据不足
    """
    if n < 1 or m < 1:
        raise ContractViolation(f"n与m必须为正整数，当前为 n={n}, m={m}")
    if len(table) == 0:
        raise ContractViolation("评分表为空")

    users, items = select_block(table, n, m)
    if len(users) < n or len(items) < m:
        raise DenseBlockError(
            f"数据只有 {len(users)} 个用户、{len(items)} 个商家，无法构成 {n}×{m} 子块，请减小n或m"
        )

    block = (table.frame[table.frame["user_id"].isin(users) & table.frame["item_id"].isin(items)]
             .pivot(index="user_id", columns="item_id", values="stars")
             .reindex(index=users, columns=items))
    missing = int(block.isna().to_numpy().sum())
    if missing:
        raise DenseBlockError(f"选中的 {n}×{m} 子块缺少 {missing} 个评分，请减小n或m")
    return OpinionMatrix(normalize_stars(block.to_numpy(dtype=float)))
