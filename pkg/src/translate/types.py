# -*- coding: utf-8 -*-
"""翻訳パイプラインで受け渡す値"""
import re
from dataclasses import dataclass
from typing import Optional, Tuple

from src.data.dialogue import EntityMention

USER = "user"
AGENT = "agent"

_TOKEN = re.compile(r"\S+")


def token_offsets(text: str):
    """空白区切りトークンの (開始, 終了) 文字位置"""
    return [(m.start(), m.end()) for m in _TOKEN.finditer(text)]


@dataclass(frozen=True)
class TranslationUnit:
    """翻訳する発話1つと、その中のエンティティ注釈"""

    utterance: str
    entities: Tuple[EntityMention, ...] = ()
    role: str = USER

    def __post_init__(self):
        for entity in self.entities:
            if entity.has_span and self.utterance[entity.start:entity.end] != entity.value:
                raise ValueError(f"entity {entity.value!r} does not match the utterance at "
                                 f"{entity.start}:{entity.end}")


@dataclass(frozen=True)
class MTResult:
    """
    翻訳結果。alignment は (原文トークン番号, 訳文トークン番号) の組。
    spans は番兵保護で訳したときのエンティティ位置（unit.entities の添字 → (開始, 終了)）。
    """

    translation: str
    alignment: Optional[Tuple[Tuple[int, int], ...]] = None
    spans: Optional[Tuple[Tuple[int, Tuple[int, int]], ...]] = None

    def alignment_in_range(self, source: str) -> bool:
        if self.alignment is None:
            return True
        n_src = len(token_offsets(source))
        n_tgt = len(token_offsets(self.translation))
        return all(0 <= i < n_src and 0 <= j < n_tgt for i, j in self.alignment)


@dataclass(frozen=True)
class AlignedSpan:
    """訳文中でエンティティが占める位置と、その位置にあるはずの文字列"""

    index: int
    start: int
    end: int
    surface: str
    method: str  # "qmap" / "alignment" / "protected"
