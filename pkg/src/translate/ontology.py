# -*- coding: utf-8 -*-
"""
オントロジー対応表と正規化(canonicalize)。

対応表は {カテゴリ: {元のトークン: 正規トークン}} のJSON。カテゴリは
domains / intents / slots / acts / apis / relations / values。
正規化は形式部分（ドメイン・インテント・スロット・対話行為名・API名・関係）だけを書き換え、
発話とスロット値には触れない。values は翻訳段で閉じた語彙の値を訳すときに使う。
"""
import logging
from dataclasses import replace

from src.errors import SchemaError, UnmappedTokenError
from src.formal.types import (
    INTENTS,
    AgentAct,
    AgentActSet,
    BeliefDelta,
    BeliefState,
    DeltaFrame,
    DomainIntent,
    KnowledgeBlock,
    Relation,
    SlotConstraint,
)
from src.utils.io import read_json

logger = logging.getLogger(__name__)

CATEGORIES = ("domains", "intents", "slots", "acts", "apis", "relations", "values")


class OntologyMapping:
    """カテゴリごとの単射な対応表"""

    def __init__(self, maps):
        self._maps = {}
        for category in CATEGORIES:
            table = dict(maps.get(category, {}))
            images = list(table.values())
            if len(set(images)) != len(images):
                raise SchemaError(f"{category} mapping is not one-to-one", {"category": category})
            for source, target in table.items():
                if target in table and table[target] != target:
                    raise SchemaError(f"{category} image {target!r} is itself remapped", {"category": category})
            self._maps[category] = table
        unknown = set(maps) - set(CATEGORIES)
        if unknown:
            raise SchemaError(f"unknown mapping categories: {', '.join(sorted(unknown))}")
        for relation in self._maps["relations"].values():
            if Relation.lookup(relation) is None:
                raise SchemaError(f"relation image {relation!r} is not a relation token")
        for intent in self._maps["intents"].values():
            if intent not in INTENTS:
                raise SchemaError(f"intent image {intent!r} is not search or book")
        self._images = {category: set(table.values()) for category, table in self._maps.items()}
        # 閉じた語彙は語彙全体が正規形
        self._images["relations"] |= {relation.value for relation in Relation}
        self._images["intents"] |= set(INTENTS)

    @classmethod
    def load(cls, path) -> "OntologyMapping":
        raw = read_json(path)
        if not isinstance(raw, dict):
            raise SchemaError("ontology mapping must be an object")
        return cls(raw)

    def map(self, category: str, token: str) -> str:
        """
        トークンを正規形にする。既に正規形（像の集合に含まれる）ならそのまま返す。
        関係とインテントは閉じた語彙なので、語彙に含まれるトークンは表が空でもそのまま通る。

        Raises:
            UnmappedTokenError: 対応表にも像の集合にも無いトークン
        """
        table = self._maps[category]
        if token in table:
            return table[token]
        if token in self._images[category]:
            return token
        raise UnmappedTokenError(token, category)

    def value(self, value: str):
        """閉じた語彙の値の訳。対応が無ければ None。"""
        return self._maps["values"].get(value)

    # ------------------------------------------------------------------ 形式部分の書き換え

    def frame(self, frame: DomainIntent) -> DomainIntent:
        return DomainIntent(self.map("domains", frame.domain), self.map("intents", frame.intent))

    def _relation(self, relation: Relation) -> Relation:
        return Relation(self.map("relations", relation.value))

    def constraint(self, constraint: SlotConstraint) -> SlotConstraint:
        return SlotConstraint(self.map("slots", constraint.slot), self._relation(constraint.relation),
                              constraint.values)

    def _constraints(self, constraints):
        mapped = {}
        for c in constraints.values():
            c = self.constraint(c)
            mapped[c.slot] = c
        return mapped

    def state(self, state: BeliefState) -> BeliefState:
        return BeliefState({self.frame(f): self._constraints(c) for f, c in state.frames.items()})

    def delta(self, delta: BeliefDelta) -> BeliefDelta:
        return BeliefDelta({
            self.frame(f): DeltaFrame(u.op, self._constraints(u.entries)) for f, u in delta.frames.items()
        })

    def act(self, act: AgentAct) -> AgentAct:
        return AgentAct(
            self.map("acts", act.act_name),
            self.map("slots", act.slot) if act.slot is not None else None,
            self._relation(act.relation) if act.relation is not None else None,
            act.values,
        )

    def acts(self, acts: AgentActSet) -> AgentActSet:
        return AgentActSet(self.frame(acts.frame), tuple(self.act(a) for a in acts.acts))

    def knowledge(self, knowledge):
        if not isinstance(knowledge, KnowledgeBlock):
            return knowledge
        return KnowledgeBlock(self.frame(knowledge.frame),
                              {self.map("slots", slot): values for slot, values in knowledge.pairs.items()})


def canonicalize_turn(turn, mapping: OntologyMapping):
    return replace(
        turn,
        delta=mapping.delta(turn.delta),
        state=mapping.state(turn.state),
        acts=mapping.acts(turn.acts),
        knowledge=mapping.knowledge(turn.knowledge),
        api_name=mapping.map("apis", turn.api_name) if turn.api_name is not None else None,
        frame=mapping.frame(turn.frame) if turn.frame is not None else None,
        user_entities=tuple(replace(m, slot=mapping.map("slots", m.slot)) for m in turn.user_entities),
        response_entities=tuple(replace(m, slot=mapping.map("slots", m.slot)) for m in turn.response_entities),
    )


def canonicalize(dialogue, mapping: OntologyMapping):
    """
    対話の形式部分を正規のトークンに書き換える。発話と値はそのまま。

    Raises:
        UnmappedTokenError: 対応表に無いトークンがあった
    """
    return dialogue.with_turns(canonicalize_turn(turn, mapping) for turn in dialogue.turns)
