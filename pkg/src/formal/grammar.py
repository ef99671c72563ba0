# -*- coding: utf-8 -*-
"""
形式表現（信念状態・デルタ・対話行為・知識ブロック）の文字列変換。

serialize_* は正規形（フレームは (domain, intent)、スロットは名前のコードポイント順）で出力し、
parse_* はトークン間の空白の揺れを許して読み込む。
エラー位置は UTF-8 のバイトオフセットで報告する。
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

from src.constants import Constants, MULTI_VALUE_SEPARATOR
from src.errors import DuplicateSlotError, FormalSyntaxError, UnknownRelationError
from src.formal.types import (
    NO_RESULT,
    AgentAct,
    AgentActSet,
    BeliefDelta,
    BeliefState,
    DeltaFrame,
    DomainIntent,
    FrameOp,
    Knowledge,
    KnowledgeBlock,
    Relation,
    SlotConstraint,
)

_PUNCT = "(),"


@dataclass(frozen=True)
class _Token:
    kind: str  # "(", ")", ",", "word", "value"
    text: str
    index: int  # 文字単位の位置


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


def _error(message: str, text: str, index: int, cls=FormalSyntaxError):
    return cls(message, text, _byte_offset(text, index))


def _tokenize(text: str) -> List[_Token]:
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _PUNCT:
            tokens.append(_Token(ch, ch, i))
            i += 1
            continue
        if ch == '"':
            end = text.find('"', i + 1)
            if end == -1:
                raise _error("unterminated quoted value", text, i)
            inner = text[i + 1:end]
            if len(inner) < 3 or inner[0] != " " or inner[-1] != " ":
                raise _error("quoted values must be framed by single spaces", text, i)
            value = inner[1:-1]
            if value != value.strip():
                raise _error("quoted value has extra surrounding whitespace", text, i)
            tokens.append(_Token("value", value, i))
            i = end + 1
            continue
        start = i
        while i < n and not text[i].isspace() and text[i] not in _PUNCT and text[i] != '"':
            i += 1
        tokens.append(_Token("word", text[start:i], start))
    return tokens


class _Cursor:
    """トークン列を先頭から読み進める"""

    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def at_end(self) -> bool:
        return self.pos >= len(self.tokens)

    def peek(self) -> Optional[_Token]:
        return None if self.at_end() else self.tokens[self.pos]

    def peek_kind(self, ahead: int = 0) -> Optional[str]:
        index = self.pos + ahead
        return self.tokens[index].kind if index < len(self.tokens) else None

    def end_index(self) -> int:
        return len(self.text)

    def here(self) -> int:
        token = self.peek()
        return token.index if token else self.end_index()

    def take(self, kind: str, what: str) -> _Token:
        token = self.peek()
        if token is None:
            raise _error(f"expected {what} but reached end of input", self.text, self.end_index())
        if token.kind != kind:
            raise _error(f"expected {what}, found {token.text!r}", self.text, token.index)
        self.pos += 1
        return token

    def error(self, message: str, cls=FormalSyntaxError):
        return _error(message, self.text, self.here(), cls)


def _frame_header(cur: _Cursor) -> DomainIntent:
    open_token = cur.take("(", "'('")
    domain = cur.take("word", "domain")
    intent = cur.take("word", "intent")
    cur.take(")", "')'")
    try:
        return DomainIntent(domain.text, intent.text)
    except ValueError as e:
        raise _error(str(e), cur.text, open_token.index) from e


def _split_values(relation: Optional[Relation], raw: str):
    if relation is Relation.ONE_OF:
        return tuple(part.strip() for part in raw.split(MULTI_VALUE_SEPARATOR))
    return (raw,)


def _relation(cur: _Cursor) -> Relation:
    token = cur.take("word", "relation")
    relation = Relation.lookup(token.text)
    if relation is None:
        raise _error(f"unknown relation {token.text!r}", cur.text, token.index, UnknownRelationError)
    return relation


def _constraint(cur: _Cursor) -> SlotConstraint:
    slot = cur.take("word", "slot")
    relation = _relation(cur)
    value = cur.take("value", "quoted value")
    try:
        return SlotConstraint(slot.text, relation, _split_values(relation, value.text))
    except ValueError as e:
        raise _error(str(e), cur.text, slot.index) from e


def _constraint_list(cur: _Cursor) -> dict:
    constraints = {}
    while True:
        start = cur.here()
        constraint = _constraint(cur)
        if constraint.slot in constraints:
            raise DuplicateSlotError(
                f"slot {constraint.slot!r} appears twice in one frame "
                f"(byte offset {_byte_offset(cur.text, start)})")
        constraints[constraint.slot] = constraint
        if cur.peek_kind() != ",":
            break
        cur.take(",", "','")
    return constraints


def _frame_ended(cur: _Cursor) -> bool:
    return cur.at_end() or cur.peek_kind() == "("


def _check_frame_end(cur: _Cursor) -> None:
    if not _frame_ended(cur):
        raise cur.error(f"unexpected token {cur.peek().text!r}")


def _new_frame(cur: _Cursor, seen) -> DomainIntent:
    start = cur.here()
    frame = _frame_header(cur)
    if frame in seen:
        raise _error(f"frame ( {frame} ) appears twice", cur.text, start)
    return frame


def _ensure_content(cur: _Cursor) -> None:
    if cur.at_end():
        raise _error("empty input", cur.text, 0)


# ==============================================================================
# 信念状態
# ==============================================================================

def _format_values(values) -> str:
    return f'" {MULTI_VALUE_SEPARATOR.join(values)} "'


def _format_constraint(constraint: SlotConstraint) -> str:
    return f"{constraint.slot} {constraint.relation.value} {_format_values(constraint.values)}"


def _format_frame(frame: DomainIntent, body: List[str]) -> str:
    head = f"( {frame.domain} {frame.intent} )"
    return f"{head} {' , '.join(body)}" if body else head


def _sorted_constraints(constraints) -> List[str]:
    return [_format_constraint(constraints[slot]) for slot in sorted(constraints)]


def serialize_state(state: BeliefState) -> str:
    """信念状態を正規形の文字列にする。空の状態は "null"。"""
    if state.is_empty():
        return Constants.NULL
    return " ".join(
        _format_frame(frame, _sorted_constraints(state.frames[frame]))
        for frame in sorted(state.frames)
    )


def parse_state(text: str) -> BeliefState:
    if text.strip() == Constants.NULL:
        return BeliefState.empty()
    cur = _Cursor(text)
    _ensure_content(cur)
    frames = {}
    while not cur.at_end():
        frame = _new_frame(cur, frames)
        constraints = {}
        if not _frame_ended(cur):
            if cur.peek().text == Constants.NULL and _frame_ended_after(cur):
                raise cur.error("frame markers are only allowed in a delta")
            constraints = _constraint_list(cur)
            for constraint in constraints.values():
                if constraint.is_deletion:
                    raise cur.error(f"state cannot hold the deletion token (slot {constraint.slot!r})")
        _check_frame_end(cur)
        frames[frame] = constraints
    return BeliefState(frames)


def _frame_ended_after(cur: _Cursor) -> bool:
    kind = cur.peek_kind(1)
    return kind is None or kind == "("


# ==============================================================================
# デルタ
# ==============================================================================

def serialize_delta(delta: BeliefDelta) -> str:
    """
    デルタを正規形の文字列にする。
    空のデルタは "null"、フレームの削除は "( d i ) null"、
    制約の全消去は "( d i ) clear" と書く。
    """
    if delta.is_empty():
        return Constants.NULL
    parts = []
    for frame in sorted(delta.frames):
        update = delta.frames[frame]
        if update.op is FrameOp.DROP:
            parts.append(_format_frame(frame, [Constants.NULL]))
        elif update.op is FrameOp.CLEAR:
            parts.append(_format_frame(frame, [Constants.CLEAR]))
        else:
            parts.append(_format_frame(frame, _sorted_constraints(update.entries)))
    return " ".join(parts)


def parse_delta(text: str) -> BeliefDelta:
    if text.strip() == Constants.NULL:
        return BeliefDelta.empty()
    cur = _Cursor(text)
    _ensure_content(cur)
    frames = {}
    while not cur.at_end():
        frame = _new_frame(cur, frames)
        update = DeltaFrame.update()
        if not _frame_ended(cur):
            token = cur.peek()
            if token.kind == "word" and token.text in (Constants.NULL, Constants.CLEAR) \
                    and _frame_ended_after(cur):
                cur.take("word", "marker")
                update = DeltaFrame.drop() if token.text == Constants.NULL else DeltaFrame.clear()
            else:
                update = DeltaFrame.update(_constraint_list(cur))
        _check_frame_end(cur)
        frames[frame] = update
    return BeliefDelta(frames)


# ==============================================================================
# 対話行為
# ==============================================================================

def _format_act(act: AgentAct) -> str:
    parts = [act.act_name]
    if act.slot is not None:
        parts.append(act.slot)
    if act.relation is not None:
        parts.append(act.relation.value)
        parts.append(_format_values(act.values))
    return " ".join(parts)


def serialize_acts(acts: Optional[AgentActSet]) -> str:
    """
    対話行為を文字列にする。act は与えられた順のまま出力する。
    acts が None のときは空文字列。
    """
    if acts is None:
        return ""
    return _format_frame(acts.frame, [_format_act(act) for act in acts.acts])


def _act(cur: _Cursor) -> AgentAct:
    name = cur.take("word", "act name")
    slot = relation = values = None
    if cur.peek_kind() == "word":
        slot = cur.take("word", "slot").text
        if cur.peek_kind() == "word":
            relation = _relation(cur)
            values = _split_values(relation, cur.take("value", "quoted value").text)
    if cur.peek_kind() == "value":
        raise cur.error("value without a relation")
    try:
        return AgentAct(name.text, slot, relation, values)
    except ValueError as e:
        raise _error(str(e), cur.text, name.index) from e


def parse_acts(text: str) -> AgentActSet:
    cur = _Cursor(text)
    _ensure_content(cur)
    frame = _frame_header(cur)
    acts = []
    if not cur.at_end():
        while True:
            acts.append(_act(cur))
            if cur.peek_kind() != ",":
                break
            cur.take(",", "','")
    if not cur.at_end():
        raise cur.error(f"unexpected token {cur.peek().text!r}")
    return AgentActSet(frame, tuple(acts))


# ==============================================================================
# 知識ブロック
# ==============================================================================

def serialize_knowledge(knowledge: Knowledge) -> str:
    """知識を文字列にする。呼び出しなしは "null"、結果0件は "NoResult"。"""
    if knowledge is None:
        return Constants.NULL
    if knowledge is NO_RESULT:
        return Constants.NO_RESULT
    body = [f"{slot} {_format_values(knowledge.pairs[slot])}" for slot in sorted(knowledge.pairs)]
    return _format_frame(knowledge.frame, body)


def parse_knowledge(text: str) -> Knowledge:
    stripped = text.strip()
    if stripped == Constants.NULL:
        return None
    if stripped == Constants.NO_RESULT:
        return NO_RESULT
    cur = _Cursor(text)
    _ensure_content(cur)
    frame = _frame_header(cur)
    pairs = {}
    if not cur.at_end():
        while True:
            slot = cur.take("word", "slot")
            value = cur.take("value", "quoted value")
            if slot.text in pairs:
                raise DuplicateSlotError(
                    f"slot {slot.text!r} appears twice in knowledge "
                    f"(byte offset {_byte_offset(text, slot.index)})")
            pairs[slot.text] = tuple(part.strip() for part in value.text.split(MULTI_VALUE_SEPARATOR))
            if cur.peek_kind() != ",":
                break
            cur.take(",", "','")
    if not cur.at_end():
        raise cur.error(f"unexpected token {cur.peek().text!r}")
    try:
        return KnowledgeBlock(frame, pairs)
    except ValueError as e:
        raise _error(str(e), text, 0) from e
