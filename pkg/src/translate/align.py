# -*- coding: utf-8 -*-
"""
訳文中のエンティティ位置を決める。

1. 量的辞書の訳語が訳文にそのまま現れればその位置（左から、重ならない最初の一致）
2. 翻訳モデルのアライメントで原文トークンを射影し、訳文トークンの連続範囲(hull)をとる
3. どちらも駄目なら未解決
未解決が残ったときは、エンティティを番兵トークンで保護して訳し直す。
"""
import logging
from dataclasses import replace
from typing import Dict, List, Tuple

from src.constants import DEFAULT_SENTINEL_FORMAT
from src.errors import SentinelLostError
from src.translate.types import AlignedSpan, MTResult, TranslationUnit, token_offsets

logger = logging.getLogger(__name__)

QMAP = "qmap"
ALIGNMENT = "alignment"
PROTECTED = "protected"


def _overlaps(start, end, taken):
    return any(start < e and s < end for s, e in taken)


def _find_free(text, surface, taken):
    start = text.find(surface)
    while start != -1:
        end = start + len(surface)
        if not _overlaps(start, end, taken):
            return start, end
        start = text.find(surface, start + 1)
    return None


def project_hull(source: str, translation: str, alignment, start: int, end: int):
    """原文の文字範囲 [start, end) をアライメントで訳文へ射影し、連続した文字範囲を返す"""
    src_tokens = [i for i, (s, e) in enumerate(token_offsets(source)) if s < end and start < e]
    targets = sorted({j for i, j in alignment if i in src_tokens})
    if not targets:
        return None
    tgt_offsets = token_offsets(translation)
    return tgt_offsets[targets[0]][0], tgt_offsets[targets[-1]][1]


def align_entities(unit: TranslationUnit, mt: MTResult, qmap: Dict[int, str]) -> Tuple[List[AlignedSpan], List[int]]:
    """
    エンティティごとに訳文中の位置を求める。

    Args:
        unit (TranslationUnit): 原文と注釈
        mt (MTResult): 訳文（アライメント付きのことがある）
        qmap (dict): translate_quantities の結果（添字 → 訳語）

    Returns:
        tuple: (解決した AlignedSpan のリスト, 未解決のエンティティ添字のリスト)
    """
    taken = []
    spans = []
    unresolved = []
    for index, entity in enumerate(unit.entities):
        found = None
        if index in qmap:
            hit = _find_free(mt.translation, qmap[index], taken)
            if hit is not None:
                found = AlignedSpan(index, hit[0], hit[1], qmap[index], QMAP)
        if found is None and mt.alignment and entity.has_span:
            hull = project_hull(unit.utterance, mt.translation, mt.alignment, entity.start, entity.end)
            if hull is not None and not _overlaps(hull[0], hull[1], taken):
                found = AlignedSpan(index, hull[0], hull[1], mt.translation[hull[0]:hull[1]], ALIGNMENT)
        if found is None:
            unresolved.append(index)
            continue
        taken.append((found.start, found.end))
        spans.append(found)
    return spans, unresolved


def protect_and_retranslate(unit: TranslationUnit, translator, src_lang: str, tgt_lang: str,
                            sentinel_format: str = DEFAULT_SENTINEL_FORMAT, indices=None) -> MTResult:
    """
    指定したエンティティを番兵トークンに置き換えて訳し、番兵を元の値に戻す。
    番兵の番号 k は原文中の出現順に振る。

    Args:
        indices: 保護するエンティティの添字（align_entities の未解決分）。None ならスパンを持つすべて。

    Returns:
        MTResult: spans に保護したエンティティの訳文中の位置が入る

    Raises:
        SentinelLostError: 番兵が訳文に1回だけ現れる、が満たされなかった
    """
    wanted = range(len(unit.entities)) if indices is None else set(indices)
    protected = sorted((e.start, e.end, i) for i, e in enumerate(unit.entities) if i in wanted and e.has_span)
    pieces = []
    sentinels = {}
    cursor = 0
    for k, (start, end, index) in enumerate(protected):
        sentinel = sentinel_format.format(k=k)
        pieces.append(unit.utterance[cursor:start])
        pieces.append(sentinel)
        sentinels[sentinel] = index
        cursor = end
    pieces.append(unit.utterance[cursor:])
    mt = translator.translate("".join(pieces), src_lang, tgt_lang, protected=tuple(sentinels))

    located = []
    for sentinel, index in sentinels.items():
        count = mt.translation.count(sentinel)
        if count != 1:
            raise SentinelLostError(f"sentinel {sentinel} appears {count} times in {mt.translation!r}")
        located.append((mt.translation.find(sentinel), sentinel, index))

    rebuilt = []
    spans = {}
    cursor = 0
    length = 0
    for position, sentinel, index in sorted(located):
        before = mt.translation[cursor:position]
        rebuilt.append(before)
        length += len(before)
        value = unit.entities[index].value
        spans[index] = (length, length + len(value))
        rebuilt.append(value)
        length += len(value)
        cursor = position + len(sentinel)
    rebuilt.append(mt.translation[cursor:])
    return MTResult("".join(rebuilt), None, tuple(sorted(spans.items())))


def reanchor_spans(spans: List[AlignedSpan], translation: str, taken=()) -> Tuple[List[AlignedSpan], List[int]]:
    """
    解決済みのスパンを、訳し直した訳文の中で表層形から探し直す。
    taken（保護したエンティティの位置など）とは重ならない、左から最初の一致をとる。

    Returns:
        tuple: (位置を付け直した AlignedSpan のリスト, 見つからなかったエンティティ添字のリスト)
    """
    taken = list(taken)
    found = []
    lost = []
    for span in sorted(spans, key=lambda s: (s.start, s.index)):
        hit = _find_free(translation, span.surface, taken)
        if hit is None:
            lost.append(span.index)
            continue
        taken.append(hit)
        found.append(replace(span, start=hit[0], end=hit[1]))
    return found, lost
