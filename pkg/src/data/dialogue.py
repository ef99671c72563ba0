# -*- coding: utf-8 -*-
"""
対話ファイル（スキーマバージョン1）の読み込み・検証・書き出し。

形式部分（delta / state / acts / knowledge）は形式表現の文字列で持ち、
knowledge だけは属性順を保つためのオブジェクト形式も受け付ける。
"""
import json
import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

from src.constants import DIALOGUE_SCHEMA_VERSION, Constants
from src.errors import FormalSyntaxError, SchemaError, StateChainError, DuplicateSlotError
from src.formal.delta import apply_delta
from src.formal.grammar import (
    parse_acts,
    parse_delta,
    parse_knowledge,
    parse_state,
    serialize_acts,
    serialize_delta,
    serialize_state,
)
from src.formal.types import (
    NO_RESULT,
    AgentActSet,
    BeliefDelta,
    BeliefState,
    DomainIntent,
    Knowledge,
    KnowledgeBlock,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EntityMention:
    """発話中のエンティティ注釈。start/end は文字位置（無い場合は None）。"""

    slot: str
    value: str
    start: Optional[int] = None
    end: Optional[int] = None
    source_value: Optional[str] = None

    @property
    def has_span(self) -> bool:
        return self.start is not None and self.end is not None

    def to_dict(self):
        data = {"slot": self.slot, "value": self.value}
        if self.has_span:
            data["start"] = self.start
            data["end"] = self.end
        if self.source_value is not None:
            data["source_value"] = self.source_value
        return data


@dataclass(frozen=True)
class TurnRecord:
    turn: int
    user: str
    delta: BeliefDelta
    state: BeliefState
    acts: AgentActSet
    api: bool
    knowledge: Knowledge
    response: str
    api_name: Optional[str] = None
    frame: Optional[DomainIntent] = None
    user_entities: Tuple[EntityMention, ...] = ()
    response_entities: Tuple[EntityMention, ...] = ()
    rg_filtered: bool = False

    @property
    def task_frame(self) -> DomainIntent:
        """このターンが属するタスク（明示が無ければ対話行為のフレーム）"""
        return self.frame or self.acts.frame


@dataclass(frozen=True)
class Dialogue:
    id: str
    language: str
    turns: Tuple[TurnRecord, ...] = field(default_factory=tuple)

    def with_turns(self, turns) -> "Dialogue":
        return replace(self, turns=tuple(turns))


# ==============================================================================
# 読み込み
# ==============================================================================

def _knowledge_from_raw(raw, where) -> Knowledge:
    if raw is None:
        return None
    if isinstance(raw, str):
        return parse_knowledge(raw)
    if isinstance(raw, dict):
        if raw == {} or set(raw) != {"domain", "intent", "slots"} or not isinstance(raw["slots"], dict):
            raise SchemaError("knowledge object needs domain, intent and slots", where)
        return KnowledgeBlock(DomainIntent(raw["domain"], raw["intent"]), raw["slots"])
    raise SchemaError("knowledge must be null, a string or an object", where)


def _mentions(raw, utterance, where) -> Tuple[EntityMention, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise SchemaError("entity annotations must be a list", where)
    mentions = []
    for i, item in enumerate(raw):
        at = dict(where, entity=i)
        if not isinstance(item, dict) or not isinstance(item.get("slot"), str) or not isinstance(item.get("value"), str):
            raise SchemaError("entity annotation needs slot and value strings", at)
        mention = EntityMention(item["slot"], item["value"], item.get("start"), item.get("end"),
                                item.get("source_value"))
        if mention.has_span and utterance[mention.start:mention.end] != mention.value:
            raise SchemaError(f"span text does not match value {mention.value!r}", at)
        mentions.append(mention)
    return tuple(mentions)


_REQUIRED_TURN_KEYS = ("turn", "user", "delta", "state", "acts", "api", "knowledge", "response")


def turn_from_dict(raw, dialogue_id) -> TurnRecord:
    where = {"dialogue": dialogue_id, "turn": raw.get("turn") if isinstance(raw, dict) else None}
    if not isinstance(raw, dict):
        raise SchemaError("turn must be an object", where)
    missing = [k for k in _REQUIRED_TURN_KEYS if k not in raw]
    if missing:
        raise SchemaError(f"turn is missing {', '.join(missing)}", where)
    if not isinstance(raw["api"], bool):
        raise SchemaError("api must be true or false", where)
    for key in ("user", "response"):
        if not isinstance(raw[key], str):
            raise SchemaError(f"{key} must be a string", where)

    current = None
    try:
        current = "delta"
        delta = parse_delta(raw["delta"])
        current = "state"
        state = parse_state(raw["state"])
        current = "acts"
        acts = parse_acts(raw["acts"])
        current = "knowledge"
        knowledge = _knowledge_from_raw(raw["knowledge"], where)
        current = "frame"
        frame = None
        if raw.get("frame"):
            domain, intent = raw["frame"].split()
            frame = DomainIntent(domain, intent)
    except (FormalSyntaxError, DuplicateSlotError, ValueError, TypeError, AttributeError) as e:
        if isinstance(e, SchemaError):
            raise
        raise SchemaError(f"invalid {current}: {e}", dict(where, field=current)) from e

    if raw["api"] != (knowledge is not None):
        raise SchemaError("api flag and knowledge disagree", where)
    return TurnRecord(
        turn=raw["turn"],
        user=raw["user"],
        delta=delta,
        state=state,
        acts=acts,
        api=raw["api"],
        knowledge=knowledge,
        response=raw["response"],
        api_name=raw.get("api_name"),
        frame=frame,
        user_entities=_mentions(raw.get("user_entities"), raw["user"], dict(where, field="user_entities")),
        response_entities=_mentions(raw.get("response_entities"), raw["response"],
                                    dict(where, field="response_entities")),
        rg_filtered=bool(raw.get("rg_filtered", False)),
    )


def validate_chain(dialogue: Dialogue) -> None:
    """ターン番号の連続性と、正解の状態がデルタの積み上げに一致することを確かめる"""
    previous = BeliefState.empty()
    for expected, turn in enumerate(dialogue.turns, start=1):
        if turn.turn != expected:
            raise SchemaError(f"turn numbers must run from 1 without gaps (expected {expected})",
                              {"dialogue": dialogue.id, "turn": turn.turn})
        rebuilt = apply_delta(previous, turn.delta)
        if rebuilt != turn.state:
            raise StateChainError(
                f"state {serialize_state(turn.state)!r} != previous state + delta "
                f"({serialize_state(rebuilt)!r})", dialogue.id, turn.turn)
        previous = turn.state


def dialogue_from_dict(raw, index=0) -> Dialogue:
    if not isinstance(raw, dict) or not isinstance(raw.get("id"), str):
        raise SchemaError("dialogue needs a string id", {"dialogue_index": index})
    turns_raw = raw.get("turns")
    if not isinstance(turns_raw, list):
        raise SchemaError("dialogue needs a list of turns", {"dialogue": raw["id"]})
    dialogue = Dialogue(
        id=raw["id"],
        language=raw.get("language", "en"),
        turns=tuple(turn_from_dict(t, raw["id"]) for t in turns_raw),
    )
    validate_chain(dialogue)
    return dialogue


def dialogues_from_document(document) -> List[Dialogue]:
    if not isinstance(document, dict):
        raise SchemaError("dialogue file must be an object")
    version = document.get("version")
    if version != DIALOGUE_SCHEMA_VERSION:
        raise SchemaError(f"unsupported dialogue schema version {version!r}")
    raw_dialogues = document.get("dialogues")
    if not isinstance(raw_dialogues, list):
        raise SchemaError("dialogue file needs a dialogues list")
    dialogues = [dialogue_from_dict(raw, i) for i, raw in enumerate(raw_dialogues)]
    seen = set()
    for dialogue in dialogues:
        if dialogue.id in seen:
            raise SchemaError("duplicate dialogue id", {"dialogue": dialogue.id})
        seen.add(dialogue.id)
    return dialogues


def load_dialogues(path) -> List[Dialogue]:
    """
    対話ファイルを読み込んで検証する。

    Args:
        path (str): JSONファイルのパス。空（空白のみ）のファイルは空リストになる。

    Returns:
        list[Dialogue]
    """
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    if not text.strip():
        return []
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"not valid JSON: {e.msg}", {"line": e.lineno, "column": e.colno}) from e
    dialogues = dialogues_from_document(document)
    logger.info("Loaded %d dialogues (%d turns) from %s",
                len(dialogues), sum(len(d.turns) for d in dialogues), path)
    return dialogues


# ==============================================================================
# 書き出し
# ==============================================================================

def knowledge_to_raw(knowledge: Knowledge):
    if knowledge is None:
        return None
    if knowledge is NO_RESULT:
        return Constants.NO_RESULT
    return {
        "domain": knowledge.frame.domain,
        "intent": knowledge.frame.intent,
        "slots": {slot: list(values) if len(values) > 1 else values[0]
                  for slot, values in knowledge.pairs.items()},
    }


def turn_to_dict(turn: TurnRecord) -> dict:
    data = {
        "turn": turn.turn,
        "user": turn.user,
        "delta": serialize_delta(turn.delta),
        "state": serialize_state(turn.state),
        "acts": serialize_acts(turn.acts),
        "api": turn.api,
        "knowledge": knowledge_to_raw(turn.knowledge),
        "response": turn.response,
    }
    if turn.api_name is not None:
        data["api_name"] = turn.api_name
    if turn.frame is not None:
        data["frame"] = str(turn.frame)
    data["user_entities"] = [m.to_dict() for m in turn.user_entities]
    data["response_entities"] = [m.to_dict() for m in turn.response_entities]
    if turn.rg_filtered:
        data["rg_filtered"] = True
    return data


def dialogues_to_document(dialogues) -> dict:
    return {
        "version": DIALOGUE_SCHEMA_VERSION,
        "dialogues": [
            {"id": d.id, "language": d.language, "turns": [turn_to_dict(t) for t in d.turns]}
            for d in dialogues
        ],
    }
