"""pyodrs测试"""
