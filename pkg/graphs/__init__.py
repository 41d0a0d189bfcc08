"""
图核心模块
加权图、谱分解、热核与锚点
"""
