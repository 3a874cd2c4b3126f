"""
PyODRS - 推荐系统驱动的观点动力学仿真与分析工具
"""

__version__ = "1.0.0"
__author__ = "开源软件基础课程小组"
__description__ = "观点动力学与推荐系统协同演化(ODRS)的仿真、聚类上界与观点操控工具"

__all__ = ["__version__"]
