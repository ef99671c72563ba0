# -*- coding: utf-8 -*-
"""
訳文中のエンティティを目的言語の知識ベースのエンティティに置き換える。

対話ごとに「元のレコード → 目的側のレコード」を一度だけ決め（DialogueMap）、
その対話のすべてのターンで同じ対応を使う。
"""
import logging
import random
from dataclasses import replace
from typing import Dict, List, Optional, Tuple

from src.errors import InconsistentAnnotationError, TypeMismatchError, UnknownSlotError
from src.formal.types import DomainIntent, KnowledgeBlock
from src.kb.store import AVAILABLE_OPTIONS
from src.translate.types import AlignedSpan, TranslationUnit

logger = logging.getLogger(__name__)


class DialogueMap:
    """
    1対話分の値の対応表。キーは (スロット, 元の値)。
    records には対応づけたレコード名 (ドメイン, 元の名前) → 目的側の名前 を残す。
    """

    def __init__(self, entries=None, records=None):
        self.entries: Dict[Tuple[str, str], str] = dict(entries or {})
        self.records: Dict[Tuple[str, str], str] = dict(records or {})
        self.unmapped: List[Tuple[str, str]] = []

    def get(self, slot: str, value: str) -> Optional[str]:
        return self.entries.get((slot, value))

    def resolve(self, slot: str, value: str, default: str) -> str:
        """対応があればそれを、無ければ default を登録して返す"""
        return self.entries.setdefault((slot, value), default)

    def __contains__(self, key):
        return key in self.entries

    def __len__(self):
        return len(self.entries)


def _referenced_records(dialogue, kb_src) -> List[Tuple[str, str]]:
    """対話中で name として現れる元KBのレコードを (ドメイン, 名前) で出現順に集める"""
    found = []

    def note(domain, name):
        if (domain, name) not in found and kb_src.find(domain, name) is not None:
            found.append((domain, name))

    for turn in dialogue.turns:
        if isinstance(turn.knowledge, KnowledgeBlock):
            for name in turn.knowledge.pairs.get("name", ()):
                note(turn.knowledge.frame.domain, name)
        for act in turn.acts.acts:
            if act.slot == "name" and act.values:
                for name in act.values:
                    note(turn.acts.frame.domain, name)
        for frame, constraints in turn.state.frames.items():
            if "name" in constraints:
                for name in constraints["name"].values:
                    note(frame.domain, name)
        for mention in turn.user_entities + turn.response_entities:
            if mention.slot == "name":
                note(turn.task_frame.domain, mention.value)
    return found


def _numeric_profile(dialogue, domain: str):
    """その対話でドメインに課された数値制約（最後に現れたもの）"""
    profile = {}
    for turn in dialogue.turns:
        for frame, constraints in turn.state.frames.items():
            if frame.domain != domain:
                continue
            for slot, constraint in constraints.items():
                if constraint.relation.is_numeric:
                    profile[(frame, slot)] = constraint
    return profile


def _candidates(kb_tgt, domain: str, profile) -> List:
    names = None
    for (frame, _), constraint in sorted(profile.items(), key=lambda item: (str(item[0][0]), item[0][1])):
        try:
            matched = {r.name for r in kb_tgt.matching(DomainIntent(domain, frame.intent), [constraint])}
        except (UnknownSlotError, TypeMismatchError) as e:
            logger.debug("Ignoring constraint %s for %s: %s", constraint.slot, domain, e)
            continue
        names = matched if names is None else names & matched
    records = kb_tgt.records(domain)
    if names is not None:
        records = [r for r in records if r.name in names]
    return sorted(records, key=lambda r: r.name)


def _map_values(dmap: DialogueMap, source, target, skip_slots) -> None:
    for slot, values in source.attrs.items():
        if slot in skip_slots or slot not in target.attrs:
            continue
        target_values = target.attrs[slot]
        for i, value in enumerate(values):
            mapped = target_values[min(i, len(target_values) - 1)]
            existing = dmap.entries.setdefault((slot, value), mapped)
            if existing != mapped:
                logger.debug("Keeping %r for %s=%r (record %s wanted %r)", existing, slot, value,
                             target.name, mapped)


def build_dialogue_map(dialogue, kb_src, kb_tgt, seed: int = 0) -> DialogueMap:
    """
    対話が参照する元KBのレコードを、目的KBのレコードに単射で割り当てる。

    候補は対話の数値制約（at_least / less_than）を満たす目的側レコードを名前順に並べたもの。
    乱数は f"{seed}:{dialogue.id}" で初期化するため、対話の処理順に依存しない。
    対話中で制約に使われたスロットは値の翻訳に任せ、ここでは対応づけない。

    Returns:
        DialogueMap
    """
    rng = random.Random(f"{seed}:{dialogue.id}")
    dmap = DialogueMap()
    used = set()
    for domain, name in _referenced_records(dialogue, kb_src):
        source = kb_src.find(domain, name)
        profile = _numeric_profile(dialogue, domain)
        candidates = [r for r in _candidates(kb_tgt, domain, profile) if (domain, r.name) not in used]
        if not candidates:
            logger.warning("No target %s record left for %r in dialogue %s", domain, name, dialogue.id)
            dmap.unmapped.append((domain, name))
            continue
        target = rng.choice(candidates)
        used.add((domain, target.name))
        dmap.records[(domain, name)] = target.name
        constrained = {slot for turn in dialogue.turns for frame, constraints in turn.state.frames.items()
                       if frame.domain == domain for slot in constraints}
        _map_values(dmap, source, target, constrained - {"name"} | {AVAILABLE_OPTIONS})
    return dmap


def localize_entities(unit_t: TranslationUnit, spans: List[AlignedSpan], dialogue_map: DialogueMap) -> TranslationUnit:
    """
    訳文中のエンティティ位置を目的側の値で置き換え、注釈を付け直す。

    Args:
        unit_t (TranslationUnit): 訳文と、元の値を持つ注釈（スパン無し）
        spans (list[AlignedSpan]): 訳文中の位置（align_entities / protect_and_retranslate の結果）
        dialogue_map (DialogueMap): 対話ごとの対応表。対応の無い値は訳文中の表層形を登録する。

    Returns:
        TranslationUnit: 置き換え後の発話と、位置を付け直した注釈（source_value に元の値）

    Raises:
        InconsistentAnnotationError: 置き換え前の訳文の該当位置が span.surface と一致しない
    """
    text = unit_t.utterance
    for span in spans:
        if text[span.start:span.end] != span.surface:
            raise InconsistentAnnotationError(
                f"expected {span.surface!r} at {span.start}:{span.end}, found {text[span.start:span.end]!r}")

    pieces = []
    mentions = []
    cursor = 0
    length = 0
    for span in sorted(spans, key=lambda s: s.start):
        entity = unit_t.entities[span.index]
        value = dialogue_map.resolve(entity.slot, entity.value, span.surface)
        before = text[cursor:span.start]
        pieces.append(before)
        length += len(before)
        mentions.append(replace(entity, value=value, start=length, end=length + len(value),
                                source_value=entity.source_value or entity.value))
        pieces.append(value)
        length += len(value)
        cursor = span.end
    pieces.append(text[cursor:])

    dropped = len(unit_t.entities) - len(spans)
    if dropped:
        logger.debug("%d entities had no span in %r", dropped, text)
    return TranslationUnit("".join(pieces), tuple(mentions), unit_t.role)
