# -*- coding: utf-8 -*-
"""対話ファイルの読み込み・訓練例の生成・few-shot 分割のテスト"""
import copy
import json
from dataclasses import replace

import pytest

from src.agent.config import RepresentationConfig
from src.data.dialogue import Dialogue, dialogues_from_document, dialogues_to_document, load_dialogues
from src.data.examples import make_examples, write_examples
from src.data.splits import few_shot_split, mix, split_from_manifest, split_size
from src.errors import SchemaError, StateChainError
from src.utils.io import read_jsonl
from tests.sample_rows import DISTILLED_ROWS, ORIGINAL_ROWS


def _document(sample_path):
    with open(sample_path, encoding="utf-8") as f:
        return json.load(f)


# ===============================================================================
# Section 1: 読み込みと検証
# ===============================================================================

def test_fixture_dialogue_loads(sample):
    print("\n--- Running Test: Load Dialogues ---")
    assert len(sample) == 1
    dialogue = sample[0]
    assert dialogue.id == "sample-hotels"
    assert len(dialogue.turns) == 3
    assert dialogue.turns[2].api and dialogue.turns[2].api_name == "hotels_search"
    assert dialogue.turns[2].response_entities[1].value == "Royal Plaza Hotel"


def test_empty_file_is_empty_corpus(tmp_path):
    print("\n--- Running Test: Empty File ---")
    path = tmp_path / "empty.json"
    path.write_text("  \n", encoding="utf-8")
    assert load_dialogues(str(path)) == []


def test_state_chain_is_checked(sample_path):
    """正解の状態が前の状態 + デルタと一致しなければ StateChainError"""
    print("\n--- Running Test: State Chain ---")
    document = _document(sample_path)
    document["dialogues"][0]["turns"][1]["state"] = '( hotels search ) stars at_least " 5 "'
    with pytest.raises(StateChainError) as info:
        dialogues_from_document(document)
    assert info.value.dialogue_id == "sample-hotels"
    assert info.value.turn == 2


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(version=2),
    lambda d: d["dialogues"][0]["turns"][0].pop("acts"),
    lambda d: d["dialogues"][0]["turns"][0].update(api="no"),
    lambda d: d["dialogues"][0]["turns"][0].update(api=True),
    lambda d: d["dialogues"][0]["turns"][1].update(delta='( hotels search ) stars bogus " 5 "'),
    lambda d: d["dialogues"][0]["turns"][1]["user_entities"][0].update(start=10, end=11),
    lambda d: d["dialogues"][0]["turns"][2].update(turn=4),
    lambda d: d["dialogues"].append(copy.deepcopy(d["dialogues"][0])),
])
def test_schema_violations(sample_path, mutate):
    print("\n--- Running Test: Schema Violation ---")
    document = _document(sample_path)
    mutate(document)
    with pytest.raises(SchemaError):
        dialogues_from_document(document)


def test_invalid_json_reports_position(tmp_path):
    print("\n--- Running Test: Invalid JSON ---")
    path = tmp_path / "broken.json"
    path.write_text('{"version": 1,\n "dialogues": [}', encoding="utf-8")
    with pytest.raises(SchemaError) as info:
        load_dialogues(str(path))
    assert info.value.coordinates["line"] == 2


def test_document_round_trip(sample):
    print("\n--- Running Test: Document Round Trip ---")
    assert dialogues_from_document(dialogues_to_document(sample)) == sample


# ===============================================================================
# Section 2: 訓練例
# ===============================================================================

def test_distilled_examples_match_dialogue_rows(sample):
    """蒸留表現の12行（3ターン×4タスク）が入力・正解とも完全一致するか"""
    print("\n--- Running Test: Distilled Examples ---")
    examples = make_examples(sample)
    assert [(e.turn, e.task, e.input, e.target) for e in examples] == DISTILLED_ROWS
    assert {e.id for e in examples} == {"sample-hotels"}


def test_original_examples_match_dialogue_rows(sample):
    """元表現の7行（DST と API/応答）が完全一致するか"""
    print("\n--- Running Test: Original Examples ---")
    examples = make_examples(sample, RepresentationConfig().with_ablation("original"))
    assert [(e.turn, e.task, e.input, e.target) for e in examples] == ORIGINAL_ROWS


def test_full_state_targets(sample):
    print("\n--- Running Test: Full State Targets ---")
    examples = make_examples(sample, RepresentationConfig().with_ablation("generate_full_state"))
    dst = [e for e in examples if e.task == "DST"]
    assert dst[2].target == (
        '( hotels search ) price_level equal_to " cheap " , rating equal_to " don\'t care " , stars at_least " 5 "')


def test_filtered_turns_have_no_rg_example(sample):
    print("\n--- Running Test: Filtered RG ---")
    dialogue = sample[0]
    turns = list(dialogue.turns)
    turns[1] = replace(turns[1], rg_filtered=True)
    examples = make_examples([dialogue.with_turns(turns)])
    assert len(examples) == 11
    assert ("RG", 2) not in {(e.task, e.turn) for e in examples}


def test_examples_are_written_as_jsonl(sample, tmp_path):
    print("\n--- Running Test: Write Examples ---")
    path = tmp_path / "out" / "examples.jsonl"
    write_examples(str(path), make_examples(sample))
    rows = read_jsonl(str(path))
    assert len(rows) == 12
    assert set(rows[0]) == {"id", "turn", "task", "input", "target"}
    first = path.read_bytes()
    write_examples(str(path), make_examples(sample))
    assert path.read_bytes() == first


# ===============================================================================
# Section 3: few-shot 分割と混合
# ===============================================================================

def _corpus(n):
    return [Dialogue(f"d{i:04d}", "en") for i in range(n)]


def test_split_size_rounds_half_up():
    print("\n--- Running Test: Split Size ---")
    assert split_size(2900, 0.01) == 29
    assert split_size(2900, 0.1) == 290
    assert split_size(5, 0.5) == 3
    assert split_size(3, 0.5) == 2
    with pytest.raises(ValueError):
        split_size(10, 0.0)
    with pytest.raises(ValueError):
        split_size(10, 1.5)


def test_few_shot_split_is_seeded_and_keeps_order():
    print("\n--- Running Test: Few-shot Split ---")
    corpus = _corpus(2900)
    subset, manifest = few_shot_split(corpus, 0.01, seed=3)
    assert len(subset) == 29
    assert [d.id for d in subset] == sorted(d.id for d in subset)
    again, _ = few_shot_split(corpus, 0.01, seed=3)
    assert again == subset
    other, _ = few_shot_split(corpus, 0.01, seed=4)
    assert other != subset
    assert manifest == {"ids": [d.id for d in subset], "seed": 3, "fraction": 0.01}

    chosen, heldout = split_from_manifest(corpus, manifest)
    assert chosen == subset
    assert len(heldout) == 2900 - 29
    with pytest.raises(SchemaError):
        split_from_manifest(corpus[:10], manifest)


def test_mix_is_deterministic():
    print("\n--- Running Test: Mix ---")
    a, b = list(range(10)), list(range(100, 105))
    mixed = mix(a, b, seed=1)
    assert sorted(mixed) == a + b
    assert mix(a, b, seed=1) == mixed
