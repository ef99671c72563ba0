# -*- coding: utf-8 -*-
"""
言語横断の訓練データ構築パイプライン。

段階は canonicalize → translate → align → filter の順に積み上げる。
前から k 個だけを使うことで、各段階を1つずつ外した比較用データセットが作れる。

    []                                       元のデータそのまま
    [canonicalize]                           形式部分だけ正規化（発話・値は元の言語）
    [canonicalize, translate]                発話と値を単独で機械翻訳（エンティティ注釈は捨てる）
    [canonicalize, translate, align]         エンティティの位置合わせと目的言語KBでの置き換え
    [canonicalize, translate, align, filter] さらに類似度の低いRGペアに印を付ける
"""
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

from tqdm import tqdm

from src.constants import DEFAULT_FILTER_THRESHOLD, DEFAULT_SENTINEL_FORMAT, STAGE_LADDER, Constants
from src.errors import (
    BackendUnavailableError,
    PipelineError,
    ProtocolError,
    SentinelLostError,
    StageOrderError,
    ToDKitError,
)
from src.filtering.filter import FilterReport, filter_pairs
from src.filtering.scorer import TrigramScorer
from src.formal.types import (
    AgentAct,
    AgentActSet,
    BeliefDelta,
    BeliefState,
    DeltaFrame,
    KnowledgeBlock,
    SlotConstraint,
)
from src.translate.align import PROTECTED, align_entities, protect_and_retranslate, reanchor_spans
from src.translate.backends import IdentityTranslator
from src.translate.localize import DialogueMap, build_dialogue_map, localize_entities
from src.translate.ontology import canonicalize
from src.translate.quantities import QuantityDictionary, translate_quantities
from src.translate.types import AGENT, USER, AlignedSpan, TranslationUnit

logger = logging.getLogger(__name__)

CANONICALIZE, TRANSLATE, ALIGN, FILTER = STAGE_LADDER


def check_stages(stages) -> Tuple[str, ...]:
    """
    段階の指定が積み上げ順の先頭部分になっているか確かめる。

    Raises:
        StageOrderError: 未知の段階、順序の入れ替え、途中の段階の欠落
    """
    stages = tuple(stages)
    unknown = [s for s in stages if s not in STAGE_LADDER]
    if unknown:
        raise StageOrderError(f"unknown stage {unknown[0]!r}; stages are {', '.join(STAGE_LADDER)}")
    if stages != STAGE_LADDER[:len(stages)]:
        raise StageOrderError(f"stages {list(stages)} must be a prefix of {list(STAGE_LADDER)}")
    return stages


@dataclass
class PipelineReport:
    stages: Tuple[str, ...]
    src_lang: str
    tgt_lang: str
    dialogues_in: int = 0
    dialogues_out: int = 0
    turns: int = 0
    counts: Counter = field(default_factory=Counter)
    dropped: List[dict] = field(default_factory=list)
    filter: Optional[FilterReport] = None

    def to_dict(self):
        return {
            "stages": list(self.stages),
            "src_lang": self.src_lang,
            "tgt_lang": self.tgt_lang,
            "dialogues_in": self.dialogues_in,
            "dialogues_out": self.dialogues_out,
            "turns": self.turns,
            "counts": dict(sorted(self.counts.items())),
            "dropped_dialogues": self.dropped,
            "filter": self.filter.to_dict() if self.filter is not None else None,
        }


def _clean(text: str, fallback: str) -> str:
    """形式表現の値として使える形に整える（前後の空白と二重引用符を除く）"""
    text = " ".join(text.replace('"', "'").split())
    return text or fallback


class _DialogueTranslator:
    """1対話分の翻訳。値の対応と翻訳結果のキャッシュは対話の中だけで共有する。"""

    def __init__(self, pipeline, dialogue, stats: Counter):
        self.pipeline = pipeline
        self.dialogue = dialogue
        self.stats = stats
        self.align = ALIGN in pipeline.stages
        self.stage = TRANSLATE
        self.turn = None
        self.cache = {}
        self.dmap = DialogueMap()
        if self.align and pipeline.kb_src is not None and pipeline.kb_tgt is not None:
            self.dmap = build_dialogue_map(dialogue, pipeline.kb_src, pipeline.kb_tgt, pipeline.seed)
            stats["localized_records"] += len(self.dmap.records)
            stats["unmapped_records"] += len(self.dmap.unmapped)

    def _mt(self, text: str, protected=()):
        p = self.pipeline
        return p.translator.translate(text, p.src_lang, p.tgt_lang, protected=protected)

    # ------------------------------------------------------------------ 値

    def value(self, slot: str, value: str) -> str:
        """
        形式部分の値の訳。対話の対応表 → 量的辞書 → 閉じた語彙 → 単独の機械翻訳 の順に試す。
        スロット削除の null はそのまま。
        """
        if value == Constants.NULL:
            return value
        if self.align:
            hit = self.dmap.get(slot, value)
            if hit is not None:
                return hit
            quantity = self.pipeline.qdict.lookup(value)
            if quantity is not None:
                return quantity[1]
        if self.pipeline.mapping is not None:
            closed = self.pipeline.mapping.value(value)
            if closed is not None:
                return closed
        key = (slot, value)
        if key not in self.cache:
            self.cache[key] = _clean(self._mt(value).translation, value)
            self.stats["values_translated"] += 1
        return self.cache[key]

    def constraint(self, c: SlotConstraint) -> SlotConstraint:
        return SlotConstraint(c.slot, c.relation, tuple(self.value(c.slot, v) for v in c.values))

    def state(self, state: BeliefState) -> BeliefState:
        return BeliefState({
            frame: {slot: self.constraint(c) for slot, c in constraints.items()}
            for frame, constraints in state.frames.items()
        })

    def delta(self, delta: BeliefDelta) -> BeliefDelta:
        return BeliefDelta({
            frame: DeltaFrame(update.op, {slot: self.constraint(c) for slot, c in update.entries.items()})
            for frame, update in delta.frames.items()
        })

    def acts(self, acts: AgentActSet) -> AgentActSet:
        translated = []
        for act in acts.acts:
            values = None
            if act.values is not None:
                values = tuple(self.value(act.slot, v) for v in act.values)
            translated.append(AgentAct(act.act_name, act.slot, act.relation, values))
        return AgentActSet(acts.frame, tuple(translated))

    def knowledge(self, knowledge):
        if not isinstance(knowledge, KnowledgeBlock):
            return knowledge
        return KnowledgeBlock(knowledge.frame, {
            slot: tuple(self.value(slot, v) for v in values) for slot, values in knowledge.pairs.items()
        })

    # ------------------------------------------------------------------ 発話

    def utterance(self, text: str, entities, role: str):
        if not text.strip():
            return text, ()
        self.stats["utterances_translated"] += 1
        if not self.align:
            return self._mt(text).translation, ()

        p = self.pipeline
        unit = TranslationUnit(text, tuple(entities), role)
        mt = self._mt(text)
        if not unit.entities:
            return mt.translation, ()
        self.stats["entities"] += len(unit.entities)
        spans, unresolved = align_entities(unit, mt, translate_quantities(unit, p.qdict))
        if unresolved:
            self.stats["unresolved_before_protection"] += len(unresolved)
        protectable = [i for i in unresolved if unit.entities[i].has_span]
        if protectable:
            self.stats["retranslated_utterances"] += 1
            mt = protect_and_retranslate(unit, p.translator, p.src_lang, p.tgt_lang, p.sentinel_format,
                                         indices=protectable)
            protected = []
            for index, (start, end) in mt.spans:
                entity = unit.entities[index]
                protected.append(AlignedSpan(index, start, end, entity.value, PROTECTED))
                self.dmap.resolve(entity.slot, entity.value, self.value(entity.slot, entity.value))
            spans, lost = reanchor_spans(spans, mt.translation, [(s.start, s.end) for s in protected])
            if lost:
                self.stats["lost_after_retranslation"] += len(lost)
            spans = sorted(protected + spans, key=lambda s: s.start)
        for span in spans:
            self.stats[f"resolved_{span.method}"] += 1
        self.stats["entities_without_span"] += len(unit.entities) - len(spans)
        bare = tuple(replace(e, start=None, end=None) for e in unit.entities)
        localized = localize_entities(TranslationUnit(mt.translation, bare, role), spans, self.dmap)
        return localized.utterance, localized.entities

    def run(self):
        self.stage = ALIGN if self.align else TRANSLATE
        texts = []
        for turn in self.dialogue.turns:
            self.turn = turn.turn
            user, user_entities = self.utterance(turn.user, turn.user_entities, USER)
            response, response_entities = self.utterance(turn.response, turn.response_entities, AGENT)
            texts.append((user, user_entities, response, response_entities))

        self.stage = TRANSLATE
        turns = []
        for turn, (user, user_entities, response, response_entities) in zip(self.dialogue.turns, texts):
            self.turn = turn.turn
            turns.append(replace(
                turn,
                user=user,
                response=response,
                delta=self.delta(turn.delta),
                state=self.state(turn.state),
                acts=self.acts(turn.acts),
                knowledge=self.knowledge(turn.knowledge),
                user_entities=user_entities,
                response_entities=response_entities,
            ))
        return replace(self.dialogue.with_turns(turns), language=self.pipeline.tgt_lang)


class _Pipeline:

    def __init__(self, stages, translator, mapping, qdict, kb_src, kb_tgt, src_lang, tgt_lang, seed,
                 sentinel_format):
        self.stages = stages
        self.translator = translator
        self.mapping = mapping
        self.qdict = qdict
        self.kb_src = kb_src
        self.kb_tgt = kb_tgt
        self.src_lang = src_lang
        self.tgt_lang = tgt_lang
        self.seed = seed
        self.sentinel_format = sentinel_format

    def process(self, dialogue):
        """
        1対話を処理する。

        Returns:
            tuple: (処理後の対話 または 除外したとき None, 集計, 除外の記録 または None)
        """
        stats = Counter()
        stage = CANONICALIZE
        worker = None
        try:
            if CANONICALIZE in self.stages:
                dialogue = canonicalize(dialogue, self.mapping)
                stats["canonicalized"] += 1
            if TRANSLATE in self.stages:
                worker = _DialogueTranslator(self, dialogue, stats)
                dialogue = worker.run()
            return dialogue, stats, None
        except SentinelLostError as e:
            turn = worker.turn if worker else None
            logger.warning("Dropping dialogue %s (turn %s): %s", dialogue.id, turn, e)
            return None, stats, {"dialogue": dialogue.id, "turn": turn, "reason": str(e)}
        except (BackendUnavailableError, ProtocolError):
            raise
        except (ToDKitError, ValueError) as e:
            if worker is not None:
                stage = worker.stage
            raise PipelineError(stage, dialogue.id, worker.turn if worker else None, e) from e


def _mark_filtered(sources, outputs, scorer, threshold) -> FilterReport:
    source_turns = {d.id: d.turns for d in sources}
    pairs = [(src.response, turn.response)
             for dialogue in outputs for src, turn in zip(source_turns[dialogue.id], dialogue.turns)]
    # 原文・訳文とも空の応答は採点せず、除かない
    scored = [i for i, (source, target) in enumerate(pairs) if source.strip() or target.strip()]
    kept, report = filter_pairs([pairs[i] for i in scored], scorer, threshold)
    flags = [False] * len(pairs)
    cursor = 0
    for i in scored:
        if cursor < len(kept) and (kept[cursor].source, kept[cursor].target) == pairs[i]:
            cursor += 1
        else:
            flags[i] = True
    flags = iter(flags)
    for i, dialogue in enumerate(outputs):
        outputs[i] = dialogue.with_turns(replace(t, rg_filtered=next(flags)) for t in dialogue.turns)
    return report


def translate_dataset(dialogues, translator=None, mapping=None, qdict=None, kb_src=None, kb_tgt=None,
                      stages=STAGE_LADDER, src_lang="en", tgt_lang="zh", scorer=None,
                      threshold=DEFAULT_FILTER_THRESHOLD, seed=0, sentinel_format=DEFAULT_SENTINEL_FORMAT,
                      workers=1, progress=False):
    """
    元言語の対話データから目的言語の訓練データを作る。

    Args:
        dialogues (list[Dialogue]): 元言語の対話
        translator: 翻訳バックエンド（省略時は IdentityTranslator）
        mapping (OntologyMapping): canonicalize 段階で必須
        qdict (QuantityDictionary): 量的エンティティの辞書（省略時は空）
        kb_src, kb_tgt (KBStore): align 段階でのエンティティ置き換えに使う（省略時は置き換えない）
        stages: 使う段階。STAGE_LADDER の先頭部分であること。
        scorer: filter 段階のスコアラ（省略時は TrigramScorer）
        threshold (float): filter 段階のしきい値
        seed (int): エンティティ割り当ての乱数シード
        workers (int): 対話単位の並列数。出力は入力の順序に戻す。

    Returns:
        tuple: (対話のリスト, PipelineReport)

    Raises:
        StageOrderError: 段階の指定が不正
        PipelineError: 段階内のエラー（対話IDとターン付き）
    """
    stages = check_stages(stages)
    if CANONICALIZE in stages and mapping is None:
        raise StageOrderError("the canonicalize stage needs an ontology mapping")
    dialogues = list(dialogues)
    pipeline = _Pipeline(stages, translator or IdentityTranslator(), mapping, qdict or QuantityDictionary.empty(),
                         kb_src, kb_tgt, src_lang, tgt_lang, seed, sentinel_format)
    report = PipelineReport(stages, src_lang, tgt_lang, dialogues_in=len(dialogues))

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(tqdm(pool.map(pipeline.process, dialogues), total=len(dialogues),
                            desc="Translating dialogues", disable=not progress))

    outputs = []
    for dialogue, stats, dropped in results:
        report.counts.update(stats)
        if dropped is not None:
            report.dropped.append(dropped)
            continue
        outputs.append(dialogue)

    if FILTER in stages:
        report.filter = _mark_filtered(dialogues, outputs, scorer or TrigramScorer(), threshold)
        report.counts["rg_filtered"] = len(report.filter.dropped)

    report.dialogues_out = len(outputs)
    report.turns = sum(len(d.turns) for d in outputs)
    logger.info("Pipeline %s: %d -> %d dialogues, %s", "+".join(stages) or "(none)", report.dialogues_in,
                report.dialogues_out, ", ".join(f"{k}={v}" for k, v in sorted(report.counts.items())) or "no counts")
    return outputs, report
