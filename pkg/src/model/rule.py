# -*- coding: utf-8 -*-
"""
ニューラルモデルを使わずに通しで動かすための決定的なルールモデル。

ユーザ発話は台本形式を想定する:
    [hotels search] I'd like a hotel.      -> フレームを開く
    stars>="5" rating="don't care"         -> slot と値の組
演算子は = (equal_to), != (not), >= (at_least), < (less_than), ~= (one_of, 値は | 区切り)。
"""
import json
import logging
import re

from src.constants import TASK_ACTS, TASK_API, TASK_DST, TASK_RG, TASKS, Constants
from src.formal.grammar import parse_acts, parse_knowledge, parse_state, serialize_acts, serialize_delta
from src.formal.types import (
    NO_RESULT,
    AgentAct,
    AgentActSet,
    BeliefDelta,
    DeltaFrame,
    DomainIntent,
    KnowledgeBlock,
    Relation,
    SlotConstraint,
)

logger = logging.getLogger(__name__)

_FRAME_TAG = re.compile(r"\[\s*(\w+)\s+(\w+)\s*\]")
_PAIR = re.compile(r'(\w+)\s*(!=|>=|~=|=|<)\s*"([^"]*)"')
_LAST_ACTS_FRAME = re.compile(r"AGENT_ACTS: \( (\S+) (\S+) \)")
_OPERATORS = {
    "=": Relation.EQUAL_TO,
    "!=": Relation.NOT,
    ">=": Relation.AT_LEAST,
    "<": Relation.LESS_THAN,
    "~=": Relation.ONE_OF,
}
# 情報を提示するときのスロットの順
OFFER_SLOTS = ("name", "rating", "available_options")


def _between(text, start, end):
    i = text.find(start)
    if i == -1:
        return None
    i += len(start)
    j = text.find(end, i)
    return text[i:j] if j != -1 else None


def _segment(text, start, end, default=Constants.NULL):
    """区切りトークンで囲まれた部分。区切りが無い入力では default（空の状態・知識なし）を返す。"""
    found = _between(text, start, end)
    return default if found is None else found


def _user_utterance(text):
    i = text.rfind("USER: ")
    if i == -1:
        return ""
    tail = text[i + len("USER: "):]
    return tail[:-len(" <endofhistory>")] if tail.endswith(" <endofhistory>") else tail


def load_ontology(path):
    """
    オントロジーファイルを読む。形式は
    {"required_slots": {"hotels search": ["price_level", "rating", "stars"], ...}}
    """
    with open(path, "r", encoding="utf-8") as f:
        raw = json.load(f)
    required = {}
    for key, slots in raw.get("required_slots", {}).items():
        domain, intent = key.split()
        required[DomainIntent(domain, intent)] = tuple(sorted(slots))
    return required


class RuleModel:
    """台本のユーザと知識ベースで決定的に動くモデル"""

    def __init__(self, store, required_slots):
        if not required_slots:
            raise ValueError("rule model needs at least one frame with required slots")
        self.store = store
        self.required_slots = dict(required_slots)

    @property
    def tasks(self):
        return frozenset(TASKS)

    def generate(self, task, text):
        handlers = {
            TASK_DST: self._track,
            TASK_API: self._detect_api,
            TASK_ACTS: self._acts,
            TASK_RG: self._respond,
        }
        return handlers[task](text)

    # ------------------------------------------------------------------ DST

    def _track(self, text):
        state = parse_state(_segment(text, "<state> ", " <endofstate>"))
        utterance = _user_utterance(text)

        tag = _FRAME_TAG.search(utterance)
        acts_frames = _LAST_ACTS_FRAME.findall(text)
        if tag:
            frame = DomainIntent(tag.group(1), tag.group(2))
        elif acts_frames:
            frame = DomainIntent(*acts_frames[-1])
        elif not state.is_empty():
            frame = sorted(state.frames)[0]
        else:
            return Constants.NULL

        schema = self.store.schema(frame.domain)
        entries = {}
        for slot, operator, value in _PAIR.findall(utterance):
            if slot not in schema:
                logger.warning("Ignoring slot %r which is not in the %s schema", slot, frame.domain)
                continue
            relation = _OPERATORS[operator]
            values = [v.strip() for v in value.split("|")] if relation is Relation.ONE_OF else [value.strip()]
            entries[slot] = SlotConstraint(slot, relation, values)
        if not entries and frame in state.frames:
            return Constants.NULL
        return serialize_delta(BeliefDelta({frame: DeltaFrame.update(entries)}))

    # ------------------------------------------------------------------ API

    def _missing(self, state, frame):
        filled = state.frames.get(frame, {})
        return [slot for slot in self.required_slots.get(frame, ()) if slot not in filled]

    def _detect_api(self, text):
        knowledge = _segment(text, "<knowledge> ", " <endofknowledge>")
        state = parse_state(_segment(text, "<state> ", " <endofstate>"))
        last_acts = _between(text, "AGENT_ACTS: ", " USER: ")
        offered = last_acts is not None and " offer " in f" {last_acts} "
        ready = any(frame in self.required_slots and not self._missing(state, frame) for frame in state.frames)
        if knowledge == Constants.NULL and ready and not offered:
            return Constants.YES
        return Constants.NO

    # ------------------------------------------------------------------ ACTS

    def _acts(self, text):
        knowledge = parse_knowledge(_segment(text, "<knowledge> ", " <endofknowledge>"))
        state = parse_state(_segment(text, "<state> ", " <endofstate>"))
        if isinstance(knowledge, KnowledgeBlock):
            frame = knowledge.frame
        elif not state.is_empty():
            frame = sorted(state.frames)[0]
        else:
            frame = next(iter(self.required_slots))
            return serialize_acts(AgentActSet(frame, (AgentAct("greeting"),)))

        missing = self._missing(state, frame)
        if missing:
            acts = [AgentAct("request", slot) for slot in missing]
        elif isinstance(knowledge, KnowledgeBlock):
            acts = [AgentAct("offer", slot, Relation.EQUAL_TO, (knowledge.pairs[slot][0],))
                    for slot in OFFER_SLOTS if slot in knowledge.pairs]
        elif knowledge is NO_RESULT:
            acts = [AgentAct("notify_fail")]
        else:
            acts = [AgentAct("goodbye")]
        return serialize_acts(AgentActSet(frame, tuple(acts)))

    # ------------------------------------------------------------------ RG

    def _respond(self, text):
        acts_text = _between(text, "<actions> ", " <endofactions>")
        if not acts_text or not acts_text.strip():
            return ""
        sentences = [s for s in (_sentence(act) for act in parse_acts(acts_text).acts) if s]
        return " ".join(sentences)


def _sentence(act: AgentAct):
    value = ", ".join(act.values) if act.values else None
    if act.act_name == "request":
        return f"What {act.slot.replace('_', ' ')} would you like?"
    if act.act_name == "offer" and act.slot == "name":
        return f"I recommend {value}."
    if act.act_name == "offer" and act.slot == "rating":
        return f"It has a rating of {value}."
    if act.act_name == "offer" and act.slot == "available_options":
        return f"There are {value} options available."
    if act.act_name == "notify_fail":
        return "Sorry, nothing matches your request."
    if act.act_name == "goodbye":
        return "Goodbye."
    if act.act_name == "greeting":
        return "Hello, how can I help you?"
    if value is not None:
        return f"{act.slot}: {value}."
    return None


def rule_model(store, ontology) -> RuleModel:
    """ontology はファイルパスか、フレーム→必須スロットの辞書"""
    required = load_ontology(ontology) if isinstance(ontology, str) else ontology
    return RuleModel(store, required)
