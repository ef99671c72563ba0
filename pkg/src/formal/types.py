# -*- coding: utf-8 -*-
"""
形式表現で使うドメイン型の定義。
信念状態・デルタ・エージェントの対話行為・知識ブロックを不変な値として表す。
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Tuple, Union

from src.constants import MULTI_VALUE_SEPARATOR, Constants

INTENTS = ("search", "book")


class Relation(str, Enum):
    """スロットと値の関係を表す演算子"""

    EQUAL_TO = "equal_to"
    NOT = "not"
    LESS_THAN = "less_than"
    AT_LEAST = "at_least"
    ONE_OF = "one_of"

    @classmethod
    def lookup(cls, token: str) -> Optional["Relation"]:
        """トークンから関係を引く。未知のトークンなら None を返す。"""
        try:
            return cls(token)
        except ValueError:
            return None

    @property
    def is_numeric(self) -> bool:
        return self in (Relation.LESS_THAN, Relation.AT_LEAST)


def _is_token(text) -> bool:
    return isinstance(text, str) and bool(text) and not any(ch.isspace() for ch in text) \
        and not any(ch in '(),"' for ch in text)


def _check_value(value) -> None:
    if not isinstance(value, str) or not value:
        raise ValueError(f"values must be non-empty strings, got {value!r}")
    if value != value.strip():
        raise ValueError(f"value has leading or trailing whitespace: {value!r}")
    if '"' in value:
        raise ValueError(f"value contains a double quote: {value!r}")
    if MULTI_VALUE_SEPARATOR in f" {value} ":
        raise ValueError(f"value contains the multi-value separator: {value!r}")


@dataclass(frozen=True, order=True)
class DomainIntent:
    domain: str
    intent: str

    def __post_init__(self):
        if not _is_token(self.domain):
            raise ValueError(f"invalid domain token: {self.domain!r}")
        if self.intent not in INTENTS:
            raise ValueError(f"intent must be one of {INTENTS}, got {self.intent!r}")

    def __str__(self):
        return f"{self.domain} {self.intent}"


@dataclass(frozen=True)
class SlotConstraint:
    slot: str
    relation: Relation
    values: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "relation", Relation(self.relation))
        if not _is_token(self.slot):
            raise ValueError(f"invalid slot token: {self.slot!r}")
        if not self.values:
            raise ValueError(f"slot {self.slot!r} has no value")
        for value in self.values:
            _check_value(value)
        if len(self.values) > 1 and self.relation is not Relation.ONE_OF:
            raise ValueError(f"only one_of may carry several values (slot {self.slot!r})")

    @property
    def is_deletion(self) -> bool:
        """デルタ中で「このスロットを消す」を意味するエントリかどうか"""
        return self.values == (Constants.NULL,)

    def deletion(self) -> "SlotConstraint":
        return SlotConstraint(self.slot, self.relation, (Constants.NULL,))


def _frozen_frames(frames) -> dict:
    checked = {}
    for frame, constraints in frames.items():
        if not isinstance(frame, DomainIntent):
            raise TypeError(f"frame keys must be DomainIntent, got {frame!r}")
        slots = {}
        for slot, constraint in dict(constraints).items():
            if slot != constraint.slot:
                raise ValueError(f"slot key {slot!r} does not match constraint {constraint.slot!r}")
            slots[slot] = constraint
        checked[frame] = slots
    return checked


@dataclass(frozen=True)
class BeliefState:
    """
    累積された信念状態 B_t。
    frames は (domain, intent) ごとにスロット→制約の辞書を持つ。
    辞書の挿入順は保持するが、等価性は順序に依存しない。
    """

    frames: Mapping[DomainIntent, Mapping[str, SlotConstraint]] = field(default_factory=dict)

    def __post_init__(self):
        frames = _frozen_frames(self.frames)
        for constraints in frames.values():
            for constraint in constraints.values():
                if constraint.is_deletion:
                    raise ValueError(f"state cannot hold the deletion token (slot {constraint.slot!r})")
        object.__setattr__(self, "frames", frames)

    @classmethod
    def empty(cls) -> "BeliefState":
        return cls({})

    def is_empty(self) -> bool:
        return not self.frames

    def constraints(self, frame: DomainIntent) -> Optional[Mapping[str, SlotConstraint]]:
        return self.frames.get(frame)


class FrameOp(str, Enum):
    UPDATE = "update"
    DROP = "drop"
    CLEAR = "clear"


@dataclass(frozen=True)
class DeltaFrame:
    """デルタ中の1フレーム分の操作。UPDATE のときだけ entries を持つ。"""

    op: FrameOp = FrameOp.UPDATE
    entries: Mapping[str, SlotConstraint] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "op", FrameOp(self.op))
        entries = dict(self.entries)
        for slot, constraint in entries.items():
            if slot != constraint.slot:
                raise ValueError(f"slot key {slot!r} does not match constraint {constraint.slot!r}")
        if entries and self.op is not FrameOp.UPDATE:
            raise ValueError(f"{self.op.value} frames carry no entries")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def update(cls, entries=None) -> "DeltaFrame":
        return cls(FrameOp.UPDATE, entries or {})

    @classmethod
    def drop(cls) -> "DeltaFrame":
        return cls(FrameOp.DROP)

    @classmethod
    def clear(cls) -> "DeltaFrame":
        return cls(FrameOp.CLEAR)


@dataclass(frozen=True)
class BeliefDelta:
    """ターン単位の差分 ΔB_t"""

    frames: Mapping[DomainIntent, DeltaFrame] = field(default_factory=dict)

    def __post_init__(self):
        frames = dict(self.frames)
        for frame, update in frames.items():
            if not isinstance(frame, DomainIntent) or not isinstance(update, DeltaFrame):
                raise TypeError("delta frames map DomainIntent to DeltaFrame")
        object.__setattr__(self, "frames", frames)

    @classmethod
    def empty(cls) -> "BeliefDelta":
        return cls({})

    def is_empty(self) -> bool:
        return not self.frames

    @classmethod
    def from_state(cls, state: BeliefState) -> "BeliefDelta":
        """状態のすべての制約をそのまま upsert として持つデルタ"""
        return cls({frame: DeltaFrame.update(c) for frame, c in state.frames.items()})


@dataclass(frozen=True)
class AgentAct:
    act_name: str
    slot: Optional[str] = None
    relation: Optional[Relation] = None
    values: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        if not _is_token(self.act_name):
            raise ValueError(f"invalid act name: {self.act_name!r}")
        if self.relation is not None:
            object.__setattr__(self, "relation", Relation(self.relation))
        if self.values is not None:
            object.__setattr__(self, "values", tuple(self.values))
            if not self.values:
                raise ValueError("act values may not be empty when present")
            for value in self.values:
                _check_value(value)
            if self.relation is None:
                raise ValueError(f"act {self.act_name!r} has values but no relation")
            if len(self.values) > 1 and self.relation is not Relation.ONE_OF:
                raise ValueError(f"only one_of may carry several values (act {self.act_name!r})")
        if self.relation is not None and self.values is None:
            raise ValueError(f"act {self.act_name!r} has a relation but no value")
        if self.relation is not None and self.slot is None:
            raise ValueError(f"act {self.act_name!r} has a relation but no slot")
        if self.slot is not None and not _is_token(self.slot):
            raise ValueError(f"invalid slot token: {self.slot!r}")
        if self.act_name == "request" and (self.slot is None or self.relation is not None):
            raise ValueError("request acts carry a slot and nothing else")

    @property
    def key(self):
        return (self.act_name, self.slot, self.relation, self.values)


@dataclass(frozen=True)
class AgentActSet:
    """エージェントの対話行為 C_t。act は順序を保ったまま重複を取り除く。"""

    frame: DomainIntent
    acts: Tuple[AgentAct, ...] = ()

    def __post_init__(self):
        seen = set()
        unique = []
        for act in self.acts:
            if act.key in seen:
                continue
            seen.add(act.key)
            unique.append(act)
        object.__setattr__(self, "acts", tuple(unique))

    def values(self) -> Tuple[str, ...]:
        """すべての act が持つ値を出現順に返す"""
        found = []
        for act in self.acts:
            found.extend(act.values or ())
        return tuple(found)

    def offered_slots(self) -> set:
        return {act.slot for act in self.acts if act.act_name == "offer" and act.slot}


@dataclass(frozen=True)
class KnowledgeBlock:
    """API呼び出し結果の1エンティティ。pairs はスロット→値リスト（挿入順を保持）。"""

    frame: DomainIntent
    pairs: Mapping[str, Tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        pairs = {}
        for slot, values in dict(self.pairs).items():
            if not _is_token(slot):
                raise ValueError(f"invalid slot token: {slot!r}")
            values = (values,) if isinstance(values, str) else tuple(values)
            if not values:
                raise ValueError(f"knowledge slot {slot!r} has no value")
            for value in values:
                _check_value(value)
            pairs[slot] = values
        object.__setattr__(self, "pairs", pairs)


class _NoResult:
    """検索結果が0件だったことを表す単一の値"""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return Constants.NO_RESULT

    def __reduce__(self):
        return (_NoResult, ())


NO_RESULT = _NoResult()

# 知識: ブロック、NoResult、または呼び出しなし(None)
Knowledge = Union[KnowledgeBlock, _NoResult, None]
