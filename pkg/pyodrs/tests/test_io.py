"""
评分数据读取、CSV/JSON导出与指标测试
"""

import math
import shutil
import tempfile
import unittest
from pathlib import Path

import numpy as np

from pyodrs.control.ppo import TrainingCurve
from pyodrs.core.clusters import clusters
from pyodrs.core.dynamics import OpinionMatrix, simulate
from pyodrs.core.errors import ContractViolation, DenseBlockError, RatingsParseError
from pyodrs.core.kernels import KernelConfig, SimilarityMethod
from pyodrs.core.sweep import SweepRow
from pyodrs.reporting.csv_exporter import (
    export_bounds_csv,
    export_controls_csv,
    export_fitness_history_csv,
    export_training_curve_csv,
    export_trajectory_csv,
    read_trajectory_csv,
)
from pyodrs.reporting.json_reporter import RunRecord, export_run_json, load_run_json
from pyodrs.utils.file_utils import (
    bundled_fixture_path,
    create_output_directory,
    read_json_file,
    write_json_file,
)
from pyodrs.utils.metrics import (
    bound_slack,
    cluster_centers,
    rank_correlation,
    trajectory_summary,
)
from pyodrs.utils.ratings import densify, load_ratings_csv, normalize_stars, select_block

HEADER = "user_id,item_id,stars\n"


class TempDirTestCase(unittest.TestCase):

    def setUp(self):
        self.temp_dir = Path(tempfile.mkdtemp())

    def tearDown(self):
        shutil.rmtree(self.temp_dir)

    def write(self, name, text):
        path = self.temp_dir / name
        path.write_text(text, encoding="utf-8")
        return path


class TestRatings(TempDirTestCase):
    """测试评分CSV读取"""

    def test_header_only(self):
        """只有表头时得到空表"""
        table = load_ratings_csv(self.write("empty.csv", HEADER))
        self.assertEqual(len(table), 0)

    def test_parse_records(self):
        """解析评分记录"""
        table = load_ratings_csv(self.write("r.csv", HEADER + "u1,b1,5\nu1,b2,1\nu2,b1,3\n"))
        self.assertEqual(table.records(), [("u1", "b1", 5), ("u1", "b2", 1), ("u2", "b1", 3)])
        self.assertEqual(table.users, ["u1", "u2"])
        self.assertEqual(table.items, ["b1", "b2"])

    def test_stars_out_of_range(self):
        """评分越界时报告行号"""
        with self.assertRaises(RatingsParseError) as ctx:
            load_ratings_csv(self.write("r.csv", HEADER + "u1,b1,5\nu2,b1,6\n"))
        self.assertEqual(ctx.exception.line, 3)
        self.assertIn("第3行", str(ctx.exception))

    def test_non_integer_stars(self):
        """评分不是整数"""
        with self.assertRaises(RatingsParseError) as ctx:
            load_ratings_csv(self.write("r.csv", HEADER + "u1,b1,4.5\n"))
        self.assertEqual(ctx.exception.line, 2)

    def test_missing_header(self):
        """缺少表头"""
        with self.assertRaises(RatingsParseError) as ctx:
            load_ratings_csv(self.write("r.csv", "u1,b1,5\n"))
        self.assertEqual(ctx.exception.line, 1)
        with self.assertRaises(RatingsParseError):
            load_ratings_csv(self.write("blank.csv", ""))

    def test_duplicates_keep_last(self):
        """重复评分保留最后一条"""
        table = load_ratings_csv(self.write("r.csv", HEADER + "u1,b1,2\nu1,b1,4\n"))
        self.assertEqual(table.records(), [("u1", "b1", 4)])

    def test_missing_file(self):
        """文件不存在"""
        with self.assertRaises(OSError):
            load_ratings_csv(self.temp_dir / "nope.csv")

    def test_normalize_stars(self):
        """1到5星映射到[0,1]"""
        np.testing.assert_array_equal(normalize_stars([1, 2, 3, 4, 5]), [0.0, 0.25, 0.5, 0.75, 1.0])


class TestDensify(TempDirTestCase):
    """测试稠密子块提取"""

    def setUp(self):
        super().setUp()
        self.table = load_ratings_csv(bundled_fixture_path())

    def test_fixture_block_8x3(self):
        """随包数据取出8x3稠密块"""
        users, items = select_block(self.table, 8, 3)
        self.assertEqual(users, ["u01", "u02", "u03", "u08", "u09", "u10", "u11", "u12"])
        self.assertEqual(items, ["b01", "b02", "b03"])
        X = densify(self.table, 8, 3)
        self.assertEqual(X.shape, (8, 3))
        np.testing.assert_array_equal(X.values * 4, np.round(X.values * 4))

    def test_fixture_block_14x3(self):
        """随包数据取出14x3稠密块"""
        X = densify(self.table, 14, 3)
        self.assertEqual(X.shape, (14, 3))
        self.assertTrue(np.all((X.values >= 0.0) & (X.values <= 1.0)))

    def test_deterministic(self):
        """稠密块选取结果确定"""
        np.testing.assert_array_equal(densify(self.table, 8, 3).values, densify(self.table, 8, 3).values)

    def test_sparse_block(self):
        """不存在稠密块时报错"""
        table = load_ratings_csv(self.write("r.csv", HEADER + "u1,b1,5\nu1,b2,4\nu2,b1,3\n"))
        with self.assertRaises(DenseBlockError):
            densify(table, 2, 2)

    def test_not_enough_users(self):
        """用户数不足"""
        with self.assertRaises(DenseBlockError):
            densify(self.table, 500, 3)

    def test_invalid_sizes(self):
        """块大小非法或评分表为空"""
        with self.assertRaises(ContractViolation):
            densify(self.table, 0, 3)
        empty = load_ratings_csv(self.write("empty.csv", HEADER))
        with self.assertRaises(ContractViolation):
            densify(empty, 1, 1)


class TestCsvExport(TempDirTestCase):
    """测试CSV导出"""

    def test_trajectory_rows(self):
        """轨迹CSV的行数与列"""
        trajectory = simulate(OpinionMatrix([[0.2], [0.4]]), KernelConfig(SimilarityMethod.DISTANCE, 0.0))
        self.assertEqual(len(trajectory.snapshots), 2)
        path = export_trajectory_csv(trajectory, self.temp_dir / "trajectory.csv")
        raw = path.read_bytes()
        self.assertNotIn(b"\r\n", raw)
        lines = raw.decode("utf-8").splitlines()
        self.assertEqual(lines[0], "k,user,dim,value")
        self.assertEqual(len(lines), 5)
        self.assertTrue(lines[1].startswith("0,0,0,"))
        self.assertTrue(lines[4].startswith("1,1,0,"))

    def test_trajectory_roundtrip_exact(self):
        """轨迹CSV读回后数值不变"""
        rng = np.random.default_rng(0)
        trajectory = simulate(OpinionMatrix(rng.uniform(size=(6, 3))), KernelConfig(SimilarityMethod.ANGLE, 0.7))
        path = export_trajectory_csv(trajectory, self.temp_dir / "trajectory.csv")
        np.testing.assert_array_equal(read_trajectory_csv(path), trajectory.as_array())

    def test_consensus_final_rows_equal(self):
        """共识时最后一步各行相同"""
        X0 = OpinionMatrix(np.random.default_rng(2).uniform(size=(5, 3)))
        trajectory = simulate(X0, KernelConfig(SimilarityMethod.DISTANCE, 0.0))
        values = read_trajectory_csv(export_trajectory_csv(trajectory, self.temp_dir / "t.csv"))
        final = values[-1]
        for row in final[1:]:
            np.testing.assert_array_equal(row, final[0])

    def test_bad_trajectory_header(self):
        """轨迹CSV表头错误"""
        path = self.write("bad.csv", "a,b,c,d\n0,0,0,0.5\n")
        with self.assertRaises(ContractViolation):
            read_trajectory_csv(path)

    def test_bounds_csv(self):
        """上界扫描CSV"""
        rows = [SweepRow(0.0, 3, 2.5, 8), SweepRow(0.5, 7, 6.0, 27)]
        path = export_bounds_csv(rows, self.temp_dir / "bounds.csv")
        lines = path.read_text(encoding="utf-8").splitlines()
        self.assertEqual(lines, ["epsilon,observed,bound", "0,3,8", "0.5,7,27"])

    def test_training_curve_csv(self):
        """训练曲线CSV"""
        curve = TrainingCurve()
        curve.append(-1.0, -0.5, window=10)
        curve.append(-0.5, -0.4, window=10)
        lines = export_training_curve_csv(curve, self.temp_dir / "curve.csv").read_text().splitlines()
        self.assertEqual(lines[0], "episode,reward,average_reward,initial_value")
        self.assertEqual(lines[2], "2,-0.5,-0.75,-0.40000000000000002")

    def test_fitness_history_and_controls(self):
        """适应度历史与控制序列CSV"""
        lines = export_fitness_history_csv([-2.0, -1.5], self.temp_dir / "h.csv").read_text().splitlines()
        self.assertEqual(lines, ["generation,best_fitness", "1,-2", "2,-1.5"])
        controls = [np.array([[0.25, 0.5]]), np.array([[0.75, 1.0]])]
        lines = export_controls_csv(controls, self.temp_dir / "c.csv").read_text().splitlines()
        self.assertEqual(lines[0], "k,propagator,dim,value")
        self.assertEqual(lines[-1], "1,0,1,1")
        self.assertEqual(len(lines), 5)
        empty = export_controls_csv([], self.temp_dir / "e.csv").read_text().splitlines()
        self.assertEqual(empty, ["k,propagator,dim,value"])


class TestJson(TempDirTestCase):
    """测试JSON运行记录"""

    def test_run_record_roundtrip(self):
        """运行记录写出后读回"""
        record = RunRecord(command="simulate", config={"epsilon": 0.5, "kernel": "distance"}, seed=3)
        record.add_artifact("trajectory", self.temp_dir / "trajectory.csv")
        record.cluster_counts = [8, 2]
        record.results["final_clusters"] = np.int64(2)
        path = export_run_json(record.finish(), self.temp_dir / "run.json")
        data = load_run_json(path)
        self.assertEqual(data["metadata"]["tool"], "pyodrs")
        self.assertEqual(data["metadata"]["command"], "simulate")
        self.assertEqual(data["artifacts"], {"trajectory": "trajectory.csv"})
        self.assertEqual(data["results"]["final_clusters"], 2)
        self.assertEqual(data["seed"], 3)
        self.assertGreaterEqual(data["metadata"]["duration_seconds"], 0.0)

    def test_unicode_and_arrays(self):
        """JSON保留中文并转换numpy数组"""
        path = write_json_file({"名称": "观点", "x": np.array([0.5, 1.0])}, self.temp_dir / "a.json")
        self.assertIn("观点", path.read_text(encoding="utf-8"))
        self.assertEqual(read_json_file(path)["x"], [0.5, 1.0])

    def test_unserializable(self):
        """无法序列化的对象"""
        with self.assertRaises(TypeError):
            write_json_file({"x": object()}, self.temp_dir / "b.json")

    def test_output_directory(self):
        """递归创建输出目录，读取缺失文件报错"""
        nested = create_output_directory(self.temp_dir / "a" / "b")
        self.assertTrue(nested.is_dir())
        with self.assertRaises(OSError):
            read_json_file(self.temp_dir / "missing.json")


class TestMetrics(unittest.TestCase):
    """测试指标计算"""

    def test_cluster_centers(self):
        """聚类中心"""
        X = OpinionMatrix([[0.1, 0.1], [0.3, 0.1], [0.9, 0.9]])
        partition = clusters(X, KernelConfig.from_radius(SimilarityMethod.DISTANCE, 0.25, 2))
        centers = cluster_centers(X, partition)
        np.testing.assert_allclose(centers, [[0.2, 0.1], [0.9, 0.9]])

    def test_rank_correlation(self):
        """秩相关系数"""
        self.assertAlmostEqual(rank_correlation([1, 2, 3], [10, 20, 30]), 1.0)
        self.assertAlmostEqual(rank_correlation([1, 2, 3], [3, 2, 1]), -1.0)
        self.assertTrue(math.isnan(rank_correlation([1], [2])))
        self.assertTrue(math.isnan(rank_correlation([1, 1, 1], [1, 2, 3])))

    def test_bound_slack(self):
        """上界余量与违例数"""
        self.assertEqual(bound_slack([3, 5], [8, 5]), {"min_gap": 0.0, "mean_gap": 2.5, "violations": 0})
        self.assertEqual(bound_slack([9], [8])["violations"], 1)
        self.assertEqual(bound_slack([], [])["min_gap"], None)

    def test_trajectory_summary(self):
        """轨迹摘要"""
        trajectory = simulate(OpinionMatrix([[0.2], [0.4]]), KernelConfig(SimilarityMethod.DISTANCE, 0.0))
        summary = trajectory_summary(trajectory)
        self.assertEqual(summary["steps"], 1)
        self.assertTrue(summary["terminated"])
        self.assertEqual(summary["termination_step"], 1)
        self.assertEqual(summary["final_clusters"], 1)


if __name__ == "__main__":
    unittest.main()
