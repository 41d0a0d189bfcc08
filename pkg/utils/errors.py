"""
异常定义模块
集中定义图匹配工具包中所有领域异常
"""


class AnchorMatchError(Exception):
    """所有领域异常的基类"""


# ---- 图结构 ----

class GraphError(AnchorMatchError, ValueError):
    """图构建失败"""


class DuplicateEdge(GraphError):
    """同一无序节点对出现多次"""


class IndexOutOfRange(GraphError):
    """节点索引超出范围或出现自环"""


class NonPositiveWeight(GraphError):
    """边权重必须严格为正"""


# ---- 谱分解 / 热核 ----

class ConvergenceFailure(AnchorMatchError, RuntimeError):
    """特征分解或迭代求解未达到精度要求"""


class NegativeTime(AnchorMatchError, ValueError):
    """扩散时间为负"""


class AllZeroSpectrum(AnchorMatchError, ValueError):
    """谱中没有非零特征值（无边图）"""


# ---- 节点签名 ----

class KOutOfRange(AnchorMatchError, ValueError):
    """谱截断数 K 不在 [1, n] 内"""


class DimensionMismatch(AnchorMatchError, ValueError):
    """矩阵与向量维度不一致"""


class NegativeQuadraticForm(AnchorMatchError, ValueError):
    """二次型明显为负，说明 B 不是半正定的"""


class NonPositiveSigma(AnchorMatchError, ValueError):
    """WKS 带宽必须为正"""


class EmptyAnchorSet(AnchorMatchError, ValueError):
    """锚点集合为空"""


# ---- 邻近矩阵学习 ----

class SameNode(AnchorMatchError, ValueError):
    """损失函数的两个节点相同"""


class QPNumericalFailure(AnchorMatchError, RuntimeError):
    """受限二次规划数值求解失败"""


class NotSymmetric(AnchorMatchError, ValueError):
    """矩阵不对称"""


# ---- 匹配 ----

class ConflictingPair(AnchorMatchError, ValueError):
    """二阶距离的节点对存在冲突 (i=j 或 a=b)"""


class MissingProximityMatrix(AnchorMatchError, ValueError):
    """变体需要邻近矩阵 B 但未提供"""


class MissingAnchors(AnchorMatchError, ValueError):
    """变体需要锚点但未提供"""


class ZeroMatrix(AnchorMatchError, ValueError):
    """相容矩阵全为零"""


class TooLarge(AnchorMatchError, ValueError):
    """穷举求解规模过大"""


# ---- 基准实验 ----

class InvalidSpec(AnchorMatchError, ValueError):
    """实验参数非法"""


class TooManyAnchors(AnchorMatchError, ValueError):
    """锚点数超过内点数"""


class DuplicatePoints(AnchorMatchError, ValueError):
    """点集中存在重复坐标"""


class DisconnectedGraph(AnchorMatchError, RuntimeError):
    """重采样预算内未生成连通图"""


# ---- 输入输出 ----

class ParseError(AnchorMatchError, ValueError):
    """文件格式解析失败"""


class ValidationError(AnchorMatchError, ValueError):
    """文件内容校验失败"""


class InconsistentPointSets(AnchorMatchError, ValueError):
    """各帧的点编号不一致"""


class DuplicateAnchor(AnchorMatchError, ValueError):
    """锚点在某一侧重复出现"""


class UsageError(AnchorMatchError, ValueError):
    """命令行用法错误"""
