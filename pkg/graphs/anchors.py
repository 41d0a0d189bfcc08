"""
锚点模块
已知对应关系 U ↔ U′ 的表示与校验
"""
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

from utils.errors import DuplicateAnchor, EmptyAnchorSet, IndexOutOfRange


@dataclass(frozen=True)
class AnchorSet:
    """锚点对应集合

    pairs 中每项为 (i, a)：G 中节点 i 对应 G′ 中节点 a。
    两侧节点各自互不重复，且至少包含一个锚点。
    """
    pairs: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        if not self.pairs:
            raise EmptyAnchorSet("锚点集合不能为空")
        sources = [i for i, _ in self.pairs]
        targets = [a for _, a in self.pairs]
        if len(set(sources)) != len(sources):
            raise DuplicateAnchor(f"G 侧锚点重复: {sources}")
        if len(set(targets)) != len(targets):
            raise DuplicateAnchor(f"G′ 侧锚点重复: {targets}")

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[int]]) -> 'AnchorSet':
        return cls(tuple((int(i), int(a)) for i, a in pairs))

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def sources(self) -> Tuple[int, ...]:
        return tuple(i for i, _ in self.pairs)

    @property
    def targets(self) -> Tuple[int, ...]:
        return tuple(a for _, a in self.pairs)

    def validate_for(self, n_source: int, n_target: int) -> None:
        """校验锚点索引是否落在两个图的节点范围内

        Raises:
            IndexOutOfRange: 锚点索引越界
        """
        for i, a in self.pairs:
            if not (0 <= i < n_source and 0 <= a < n_target):
                raise IndexOutOfRange(f"锚点 ({i}, {a}) 超出图的节点范围 ({n_source}, {n_target})")
