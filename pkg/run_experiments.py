#!/usr/bin/env python3
"""
PyODRS运行脚本
"""

import sys
from pathlib import Path

# 添加项目根目录到Python路径
sys.path.insert(0, str(Path(__file__).parent))

from pyodrs.cli import cli


def run(args):
    """运行一条pyodrs子命令，不退出解释器"""
    print(f"\n$ pyodrs {' '.join(args)}")
    cli.main(args=args, prog_name="pyodrs", standalone_mode=False)


def main():
    """主函数：原样转发参数"""
    print("=" * 60)
    print("PyODRS 观点动力学仿真与操控工具")
    print("=" * 60)

    if len(sys.argv) < 2:
        print("用法: python run_experiments.py <子命令> [选项]")
        print("示例: python run_experiments.py simulate --fixture --radius 0.9")
        print("示例: python run_experiments.py demo")
        return

    try:
        run(sys.argv[1:])
    except Exception as e:
        print(f"❌ 运行失败: {e}")
        import traceback
        traceback.print_exc()


def demo():
    """演示模式：复现三种演化形态、上界扫描与一次小规模操控对比"""
    print("🎬 运行演示模式...")

    print("\n1. 共识、聚类与冻结三种形态:")
    for radius in ("0.9", "0.4", "0.1"):
        run(["simulate", "--fixture", "--kernel", "distance", "--radius", radius,
             "--out", f"runs/demo/simulate_r{radius}"])

    print("\n2. 角度法聚类数上界扫描（小规模）:")
    run(["bounds", "--kernel", "angle", "--points", "11", "--users", "20", "--trials", "10",
         "--out", "runs/demo/bounds"])

    print("\n3. 小规模PPO训练与EA对比:")
    run(["train", "--episodes", "200", "--out", "runs/demo/train"])
    run(["compare", "--checkpoint", "runs/demo/train/policy.npz", "--max-generations", "100",
         "--out", "runs/demo/compare"])

    print("\n✅ 演示完成！")


if __name__ == "__main__":
    if len(sys.argv) > 1 and sys.argv[1] == "demo":
        demo()
    else:
        main()
