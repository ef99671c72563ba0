# -*- coding: utf-8 -*-
"""
言語横断データ構築パイプラインのテスト。
元言語のモック対話10件を対訳表の翻訳器で処理し、段階の積み上げごとの結果を確かめる。
"""
import pytest

from src.data.dialogue import EntityMention, dialogues_from_document, dialogues_to_document
from src.errors import (
    InconsistentAnnotationError,
    PipelineError,
    SchemaError,
    SentinelLostError,
    StageOrderError,
    UnmappedTokenError,
)
from src.formal.types import DomainIntent
from src.kb.store import KBStore
from src.translate.align import ALIGNMENT, QMAP, align_entities, project_hull, protect_and_retranslate, reanchor_spans
from src.translate.backends import GlossaryTranslator
from src.translate.localize import DialogueMap, build_dialogue_map, localize_entities
from src.translate.ontology import OntologyMapping, canonicalize
from src.translate.pipeline import check_stages, translate_dataset
from src.translate.quantities import QuantityDictionary, translate_quantities
from src.translate.types import AlignedSpan, MTResult, TranslationUnit

SRC_NAMES = ("Royal Plaza Hotel", "The Silka Hotel", "Harbour Grand Kowloon", "Ibis Sheung Wan")
RATINGS = {"Royal Plaza Hotel": "9", "The Silka Hotel": "9", "Harbour Grand Kowloon": "8", "Ibis Sheung Wan": "7"}

MAPPING = {
    "domains": {"hotel": "hotels"},
    "intents": {"search": "search"},
    "slots": {s: s for s in ("name", "rating", "stars", "price_level", "available_options")},
    "acts": {"request": "request", "recommend": "offer"},
    "apis": {"hotels_search": "hotels_search"},
}

PHRASES = {
    "I want a hotel with at least": "我 想要 至少",
    "stars": "星 的 酒店",
    "What price level do you want ?": "您 想要 什么 价位 ?",
    "cheap": "便宜",
    "please": "谢谢",
    "I recommend": "我 推荐",
}

TARGET_KB = {
    "hotels": [
        {"name": "帝京酒店", "price_level": "便宜", "rating": "9", "stars": "5", "location": "旺角"},
        {"name": "海景酒店", "price_level": "便宜", "rating": "8", "stars": "5", "location": "红磡"},
        {"name": "城市酒店", "price_level": "便宜", "rating": "7", "stars": "6", "location": "上环"},
        {"name": "山顶酒店", "price_level": "昂贵", "rating": "10", "stars": "5", "location": "山顶"},
        {"name": "小旅馆", "price_level": "便宜", "rating": "6", "stars": "3", "location": "佐敦"},
    ]
}

QUANTITIES = {"rules": [
    {"class": "currency", "pattern": "^(\\d+) HKD$", "template": "{1} 港币"},
    {"class": "number", "pattern": "^\\d+$", "template": "{0}"},
    {"class": "weekday", "table": {"Monday": "星期一"}},
]}


def mock_dialogue(i):
    """2ターンの元言語の対話。ホテル名と星の数を i で変える。"""
    stars = ("3", "4", "5")[i % 3]
    name = SRC_NAMES[i % len(SRC_NAMES)]
    user1 = f"I want a hotel with at least {stars} stars"
    response2 = f"I recommend {name} ."
    state1 = f'( hotel search ) stars at_least " {stars} "'
    return {
        "id": f"mock-{i:02d}",
        "language": "en",
        "turns": [
            {
                "turn": 1,
                "user": user1,
                "delta": state1,
                "state": state1,
                "acts": "( hotel search ) request price_level",
                "api": False,
                "knowledge": None,
                "response": "What price level do you want ?",
                "user_entities": [{"slot": "stars", "value": stars, "start": 29, "end": 30}],
                "response_entities": [],
            },
            {
                "turn": 2,
                "user": "cheap please",
                "delta": '( hotel search ) price_level equal_to " cheap "',
                "state": f'( hotel search ) price_level equal_to " cheap " , stars at_least " {stars} "',
                "acts": f'( hotel search ) recommend name equal_to " {name} "',
                "api": True,
                "api_name": "hotels_search",
                "knowledge": {"domain": "hotel", "intent": "search", "slots": {
                    "name": name, "rating": RATINGS[name], "stars": "5", "available_options": "4"}},
                "response": response2,
                "user_entities": [{"slot": "price_level", "value": "cheap", "start": 0, "end": 5}],
                "response_entities": [{"slot": "name", "value": name, "start": 12, "end": 12 + len(name)}],
            },
        ],
    }


@pytest.fixture
def corpus():
    return dialogues_from_document({"version": 1, "dialogues": [mock_dialogue(i) for i in range(10)]})


@pytest.fixture
def resources(kb):
    return {
        "translator": GlossaryTranslator(PHRASES),
        "mapping": OntologyMapping(MAPPING),
        "qdict": QuantityDictionary.from_dict(QUANTITIES),
        "kb_src": kb,
        "kb_tgt": KBStore.from_dict(TARGET_KB),
    }


class LossyTranslator:
    """何を渡しても同じ文を返し、番兵もアライメントも残さない"""

    def translate(self, text, src_lang, tgt_lang, protected=()):
        return MTResult("无法 翻译", None)


class SentinelSwappingTranslator:
    """番兵トークンの並びを逆にして返す。ほかのトークンはそのまま残す。"""

    def __init__(self):
        self.calls = []

    def translate(self, text, src_lang, tgt_lang, protected=()):
        self.calls.append((text, tuple(protected)))
        tokens = text.split()
        positions = [i for i, token in enumerate(tokens) if token in protected]
        for i, token in zip(positions, [tokens[i] for i in reversed(positions)]):
            tokens[i] = token
        return MTResult(" ".join(tokens), None)


class ConstantScorer:
    label = "constant"

    def __init__(self, value):
        self.value = value

    def score(self, a, b):
        return self.value


def assert_entities_consistent(dialogues):
    for dialogue in dialogues:
        for turn in dialogue.turns:
            for text, mentions in ((turn.user, turn.user_entities), (turn.response, turn.response_entities)):
                for mention in mentions:
                    if mention.has_span:
                        assert text[mention.start:mention.end] == mention.value


# ===============================================================================
# Section 1: 段階の積み上げ
# ===============================================================================

LADDER = [
    (),
    ("canonicalize",),
    ("canonicalize", "translate"),
    ("canonicalize", "translate", "align"),
    ("canonicalize", "translate", "align", "filter"),
]


def test_every_ladder_prefix_runs(corpus, resources):
    """5通りの段階指定がどれも検証を通る対話を出し、互いに異なる結果になるか"""
    print("\n--- Running Test: Stage Ladder ---")
    documents = []
    for stages in LADDER:
        outputs, report = translate_dataset(corpus, stages=stages, **resources)
        assert report.stages == stages
        assert report.dialogues_in == report.dialogues_out == 10
        assert report.turns == 20
        assert not report.dropped
        document = dialogues_to_document(outputs)
        assert dialogues_from_document(document) == outputs
        assert_entities_consistent(outputs)
        documents.append(document)
    for i in range(len(documents)):
        for j in range(i + 1, len(documents)):
            assert documents[i] != documents[j], (LADDER[i], LADDER[j])


def test_empty_ladder_is_identity(corpus, resources):
    print("\n--- Running Test: No Stages ---")
    outputs, _ = translate_dataset(corpus, stages=(), **resources)
    assert outputs == corpus


def test_canonicalize_only_touches_formal_tokens(corpus, resources):
    print("\n--- Running Test: Canonicalize Stage ---")
    outputs, report = translate_dataset(corpus, stages=("canonicalize",), **resources)
    turn = outputs[0].turns[1]
    assert turn.acts.frame == DomainIntent("hotels", "search")
    assert turn.acts.acts[0].act_name == "offer"
    assert turn.user == corpus[0].turns[1].user
    assert turn.acts.acts[0].values == corpus[0].turns[1].acts.acts[0].values
    assert report.counts["canonicalized"] == 10
    assert outputs[0].language == "en"


def test_translate_without_align_drops_annotations(corpus, resources):
    print("\n--- Running Test: Translate Stage ---")
    outputs, report = translate_dataset(corpus, stages=("canonicalize", "translate"), **resources)
    first = outputs[0]
    assert first.language == "zh"
    assert first.turns[0].user == "我 想要 至少 3 星 的 酒店"
    assert first.turns[0].response == "您 想要 什么 价位 ?"
    assert first.turns[0].user_entities == ()
    assert first.turns[1].state.frames[DomainIntent("hotels", "search")]["price_level"].values == ("便宜",)
    assert report.counts["utterances_translated"] == 40


def test_align_localizes_entities_consistently(corpus, resources):
    """名前はどの対話でも目的側KBのレコードに置き換わり、発話・対話行為・知識で同じ値になる"""
    print("\n--- Running Test: Align Stage ---")
    outputs, report = translate_dataset(corpus, stages=("canonicalize", "translate", "align"), **resources)
    target_names = {r["name"] for r in TARGET_KB["hotels"]}
    for source, dialogue in zip(corpus, outputs):
        turn = dialogue.turns[1]
        mention = turn.response_entities[0]
        assert mention.value in target_names
        assert mention.source_value == source.turns[1].response_entities[0].value
        assert turn.acts.acts[0].values == (mention.value,)
        assert turn.knowledge.pairs["name"] == (mention.value,)
        assert turn.response == f"我 推荐 {mention.value} ."
        assert turn.knowledge.pairs["rating"] == (
            next(r["rating"] for r in TARGET_KB["hotels"] if r["name"] == mention.value),)
        assert dialogue.turns[0].user_entities[0].value == source.turns[0].user_entities[0].value
        assert turn.user_entities[0].value == "便宜"
    assert report.counts["localized_records"] == 10
    assert report.counts["entities"] == 30


def test_filter_marks_dissimilar_pairs(corpus, resources):
    print("\n--- Running Test: Filter Stage ---")
    outputs, report = translate_dataset(corpus, **resources)
    flagged = sum(t.rg_filtered for d in outputs for t in d.turns)
    assert flagged == report.counts["rg_filtered"] == len(report.filter.dropped)
    assert report.filter.kept + len(report.filter.dropped) == 20
    assert report.filter.scorer == "trigram"
    assert flagged == 20

    kept_all, kept_report = translate_dataset(corpus, scorer=ConstantScorer(0.9), **resources)
    assert kept_report.filter.scorer == "constant"
    assert not any(t.rg_filtered for d in kept_all for t in d.turns)


def test_filter_leaves_empty_response_pairs_alone(resources):
    """応答が原文・訳文とも空のターンは採点せず、rg_filtered も付けない"""
    print("\n--- Running Test: Filter Empty Responses ---")
    raw = mock_dialogue(0)
    raw["turns"][0]["response"] = ""
    dialogues = dialogues_from_document({"version": 1, "dialogues": [raw]})
    outputs, report = translate_dataset(dialogues, scorer=ConstantScorer(0.0), **resources)
    assert [t.rg_filtered for t in outputs[0].turns] == [False, True]
    assert report.filter.kept == 0
    assert [p.source for p in report.filter.dropped] == ["I recommend Royal Plaza Hotel ."]


def test_pipeline_is_deterministic_across_workers(corpus, resources):
    print("\n--- Running Test: Worker Determinism ---")
    single, _ = translate_dataset(corpus, workers=1, seed=7, **resources)
    parallel, _ = translate_dataset(corpus, workers=4, seed=7, **resources)
    reversed_run, _ = translate_dataset(list(reversed(corpus)), workers=2, seed=7, **resources)
    assert single == parallel
    assert [d.id for d in parallel] == [d.id for d in corpus]
    assert {d.id: d for d in reversed_run} == {d.id: d for d in single}


def test_stage_order_is_checked(corpus, resources):
    print("\n--- Running Test: Stage Order ---")
    assert check_stages(["canonicalize", "translate"]) == ("canonicalize", "translate")
    for stages in (["translate"], ["canonicalize", "align"], ["canonicalize", "normalize"],
                   ["translate", "canonicalize"]):
        with pytest.raises(StageOrderError):
            check_stages(stages)
    with pytest.raises(StageOrderError):
        translate_dataset(corpus, stages=("canonicalize",), translator=resources["translator"])


def test_lost_sentinels_drop_the_dialogue(corpus, resources):
    print("\n--- Running Test: Sentinel Loss ---")
    resources = dict(resources, translator=LossyTranslator(), qdict=None)
    outputs, report = translate_dataset(corpus, stages=("canonicalize", "translate", "align"), **resources)
    assert outputs == []
    assert report.dialogues_out == 0
    assert len(report.dropped) == 10
    assert report.dropped[0]["dialogue"] == "mock-00"
    assert report.dropped[0]["turn"] == 1


def test_stage_errors_carry_coordinates(corpus, resources):
    print("\n--- Running Test: Pipeline Error ---")
    partial = {k: dict(v) for k, v in MAPPING.items()}
    del partial["acts"]["recommend"]
    resources = dict(resources, mapping=OntologyMapping(partial))
    with pytest.raises(PipelineError) as info:
        translate_dataset(corpus, **resources)
    assert info.value.stage == "canonicalize"
    assert info.value.dialogue_id == "mock-00"
    assert isinstance(info.value.cause, UnmappedTokenError)


# ===============================================================================
# Section 2: 正規化と量的辞書
# ===============================================================================

def test_canonicalize_is_idempotent(corpus):
    print("\n--- Running Test: Canonicalize Idempotence ---")
    mapping = OntologyMapping(MAPPING)
    once = canonicalize(corpus[0], mapping)
    assert canonicalize(once, mapping) == once
    assert once.turns[1].api_name == "hotels_search"
    assert once.turns[1].knowledge.frame == DomainIntent("hotels", "search")


def test_unmapped_tokens_are_reported(corpus):
    print("\n--- Running Test: Unmapped Token ---")
    mapping = OntologyMapping({k: v for k, v in MAPPING.items() if k != "slots"})
    with pytest.raises(UnmappedTokenError) as info:
        canonicalize(corpus[0], mapping)
    assert info.value.category == "slots"
    assert info.value.token == "stars"


def test_empty_tables_for_closed_and_open_inventories(corpus):
    """関係とインテントは表が無くてもそのまま通り、対話行為などは表が無ければ未対応になる"""
    print("\n--- Running Test: Empty Mapping Tables ---")
    mapping = OntologyMapping({k: v for k, v in MAPPING.items() if k != "intents"})
    once = canonicalize(corpus[0], mapping)
    assert once.turns[0].state.frames[DomainIntent("hotels", "search")]["stars"].relation.value == "at_least"

    mapping = OntologyMapping({k: v for k, v in MAPPING.items() if k != "acts"})
    with pytest.raises(UnmappedTokenError) as info:
        canonicalize(corpus[0], mapping)
    assert info.value.category == "acts"
    assert info.value.token == "request"


def test_mapping_must_be_one_to_one():
    print("\n--- Running Test: Mapping Schema ---")
    with pytest.raises(SchemaError):
        OntologyMapping({"slots": {"stars": "stars", "star": "stars"}})
    with pytest.raises(SchemaError):
        OntologyMapping({"relations": {"equal_to": "equals"}})
    with pytest.raises(SchemaError):
        OntologyMapping({"colours": {}})


def test_quantity_dictionary():
    print("\n--- Running Test: Quantity Dictionary ---")
    qdict = QuantityDictionary.from_dict(QUANTITIES)
    assert qdict.lookup("793 HKD") == ("currency", "793 港币")
    assert qdict.lookup("4") == ("number", "4")
    assert qdict.lookup("Monday") == ("weekday", "星期一")
    assert qdict.lookup("cheap") is None
    unit = TranslationUnit("4 rooms on Monday", (
        EntityMention("count", "4", 0, 1), EntityMention("day", "Monday", 11, 17), EntityMention("kind", "rooms", 2, 7)))
    assert translate_quantities(unit, qdict) == {0: "4", 1: "星期一"}
    with pytest.raises(SchemaError):
        QuantityDictionary.from_dict({"rules": [{"class": "bad", "pattern": "(", "template": "{0}"}]})
    with pytest.raises(SchemaError):
        QuantityDictionary.from_dict({"rules": [{"class": "number", "pattern": "^\\d+$"}]})


# ===============================================================================
# Section 3: 位置合わせと置き換え
# ===============================================================================

def test_project_hull_spans_aligned_tokens():
    print("\n--- Running Test: Alignment Hull ---")
    source = "I recommend Royal Plaza Hotel ."
    mt = GlossaryTranslator(PHRASES).translate(source, "en", "zh")
    assert mt.translation == "我 推荐 Royal Plaza Hotel ."
    assert project_hull(source, mt.translation, mt.alignment, 12, 29) == (5, 22)
    assert project_hull(source, mt.translation, (), 12, 29) is None


def test_align_entities_prefers_quantities_and_avoids_overlap():
    print("\n--- Running Test: Align Entities ---")
    unit = TranslationUnit("2 adults 2 rooms", (EntityMention("adults", "2", 0, 1), EntityMention("rooms", "2", 9, 10)))
    mt = MTResult("2 成人 2 房间", None)
    spans, unresolved = align_entities(unit, mt, {0: "2", 1: "2"})
    assert [(s.start, s.end, s.method) for s in spans] == [(0, 1, QMAP), (5, 6, QMAP)]
    assert unresolved == []

    spans, unresolved = align_entities(unit, MTResult("成人 房间", ((0, 0), (1, 0), (2, 0), (3, 1))), {})
    assert [(s.start, s.end, s.surface, s.method) for s in spans] == [(0, 2, "成人", ALIGNMENT)]
    assert unresolved == [1]


def test_protected_retranslation_restores_values():
    print("\n--- Running Test: Sentinel Protection ---")
    unit = TranslationUnit("I recommend Royal Plaza Hotel .", (EntityMention("name", "Royal Plaza Hotel", 12, 29),))
    mt = protect_and_retranslate(unit, GlossaryTranslator(PHRASES), "en", "zh")
    assert mt.translation == "我 推荐 Royal Plaza Hotel ."
    assert mt.spans == ((0, (5, 22)),)
    with pytest.raises(SentinelLostError):
        protect_and_retranslate(unit, LossyTranslator(), "en", "zh")


def test_protection_follows_reordered_sentinels():
    """訳文で番兵の順序が入れ替わっても、各エンティティの位置がその並びに従うか"""
    print("\n--- Running Test: Reordered Sentinels ---")
    unit = TranslationUnit("from Mong Kok to Central", (EntityMention("location", "Mong Kok", 5, 13),
                                                         EntityMention("location", "Central", 17, 24)))
    translator = SentinelSwappingTranslator()
    mt = protect_and_retranslate(unit, translator, "en", "zh")
    assert translator.calls == [("from __E0__ to __E1__", ("__E0__", "__E1__"))]
    assert mt.translation == "from Central to Mong Kok"
    assert mt.spans == ((0, (16, 24)), (1, (5, 12)))
    for index, (start, end) in mt.spans:
        assert mt.translation[start:end] == unit.entities[index].value


def test_only_unresolved_entities_are_protected():
    """保護するのは未解決のエンティティだけで、解決済みの位置は訳し直した訳文の中で付け直す"""
    print("\n--- Running Test: Protect Unresolved Only ---")
    unit = TranslationUnit("from Mong Kok to Central", (EntityMention("location", "Mong Kok", 5, 13),
                                                         EntityMention("location", "Central", 17, 24)))
    spans, unresolved = align_entities(unit, MTResult("从 旺角 到 Central", None), {0: "旺角"})
    assert [(s.index, s.start, s.end, s.method) for s in spans] == [(0, 2, 4, QMAP)]
    assert unresolved == [1]

    translator = SentinelSwappingTranslator()
    mt = protect_and_retranslate(unit, translator, "en", "zh", indices=unresolved)
    assert translator.calls == [("from Mong Kok to __E0__", ("__E0__",))]
    assert mt.spans == ((1, (17, 24)),)

    moved, lost = reanchor_spans(spans, "到 Central 从 旺角", taken=[(2, 9)])
    assert [(s.index, s.start, s.end, s.surface, s.method) for s in moved] == [(0, 12, 14, "旺角", QMAP)]
    assert lost == []
    moved, lost = reanchor_spans(spans, "到 Central", taken=[(2, 9)])
    assert moved == [] and lost == [0]


def test_localize_replaces_spans():
    print("\n--- Running Test: Localize ---")
    unit = TranslationUnit("我 推荐 Royal Plaza Hotel .", (EntityMention("name", "Royal Plaza Hotel"),))
    dmap = DialogueMap({("name", "Royal Plaza Hotel"): "帝京酒店"})
    spans = [AlignedSpan(0, 5, 22, "Royal Plaza Hotel", ALIGNMENT)]
    localized = localize_entities(unit, spans, dmap)
    assert localized.utterance == "我 推荐 帝京酒店 ."
    assert localized.entities == (EntityMention("name", "帝京酒店", 5, 9, "Royal Plaza Hotel"),)

    with pytest.raises(InconsistentAnnotationError):
        localize_entities(unit, [AlignedSpan(0, 0, 3, "Royal Plaza Hotel", ALIGNMENT)], dmap)


def test_dialogue_map_is_injective_and_seeded(kb):
    """1つの対話の中で異なる元レコードが同じ目的レコードに割り当てられないか"""
    print("\n--- Running Test: Dialogue Map ---")
    kb_tgt = KBStore.from_dict(TARGET_KB)
    raw = mock_dialogue(2)
    extra = dict(raw["turns"][1], turn=3, delta="null", api=False, knowledge=None,
                 acts='( hotel search ) recommend name equal_to " The Silka Hotel "',
                 response="I recommend The Silka Hotel .", user="another please", user_entities=[],
                 response_entities=[{"slot": "name", "value": "The Silka Hotel", "start": 12, "end": 27}])
    extra.pop("api_name")
    raw["turns"].append(extra)
    dialogue = canonicalize(dialogues_from_document({"version": 1, "dialogues": [raw]})[0], OntologyMapping(MAPPING))

    dmap = build_dialogue_map(dialogue, kb, kb_tgt, seed=0)
    assert set(dmap.records) == {("hotels", "Harbour Grand Kowloon"), ("hotels", "The Silka Hotel")}
    assert len(set(dmap.records.values())) == 2
    assert build_dialogue_map(dialogue, kb, kb_tgt, seed=0).records == dmap.records
    # 星5以上の制約を満たさない 小旅馆 は候補にならない
    for seed in range(20):
        assigned = set(build_dialogue_map(dialogue, kb, kb_tgt, seed=seed).records.values())
        assert len(assigned) == 2
        assert assigned <= {"帝京酒店", "海景酒店", "城市酒店", "山顶酒店"}

    scarce = KBStore.from_dict({"hotels": TARGET_KB["hotels"][:1]})
    short = build_dialogue_map(dialogue, kb, scarce, seed=0)
    assert list(short.records.values()) == ["帝京酒店"]
    assert len(short.unmapped) == 1
