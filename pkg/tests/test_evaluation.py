# -*- coding: utf-8 -*-
"""
評価指標（JGA / API / TSR / DSR / BLEU / SER）と予測ダンプの読み込みのテスト。
"""
import json
import random
from dataclasses import replace

import pytest

from src.agent.agent import DialogueAgent, dump_predictions
from src.data.dialogue import Dialogue, TurnRecord
from src.errors import AlignmentError, SchemaError
from src.evaluation.metrics import Prediction, align, api_acc, bleu, evaluate, jga, ser, tsr_dsr
from src.evaluation.report import format_summary, load_predictions, predictions_from_outputs, report_to_dict
from src.formal.grammar import parse_acts, parse_state
from src.formal.types import BeliefDelta, DomainIntent, KnowledgeBlock
from src.model.oracle import oracle_from

HOTELS = DomainIntent("hotels", "search")
RESTAURANTS = DomainIntent("restaurants", "search")


def gold_turn(n, state, acts, response, knowledge=None):
    return TurnRecord(turn=n, user="...", delta=BeliefDelta.empty(), state=parse_state(state), acts=parse_acts(acts),
                      api=knowledge is not None, knowledge=knowledge, response=response)


def perfect(dialogue):
    """正解をそのまま写した予測"""
    return [Prediction(dialogue.id, t.turn, t.state, t.api, t.acts, t.response,
                       t.knowledge.frame if t.api else None) for t in dialogue.turns]


@pytest.fixture
def two_tasks():
    """ホテルを探してから飲食店を勧められる3ターンの対話"""
    return Dialogue("two-tasks", "en", (
        gold_turn(1, "( hotels search )", "( hotels search ) request price_level", "What price range?"),
        gold_turn(2, '( hotels search ) price_level equal_to " cheap "',
                  '( hotels search ) offer name equal_to " Royal Plaza Hotel " , offer rating equal_to " 9 "',
                  "Royal Plaza Hotel has a 9 rating.",
                  KnowledgeBlock(HOTELS, {"name": "Royal Plaza Hotel", "rating": "9"})),
        gold_turn(3, '( hotels search ) price_level equal_to " cheap " ( restaurants search )',
                  '( restaurants search ) offer name equal_to " Dim Dim Sum "', "Try Dim Dim Sum."),
    ))


# ===============================================================================
# Section 1: オラクルでの通し評価
# ===============================================================================

def test_oracle_scores_perfectly(sample, kb, tmp_path):
    """オラクルの予測をダンプして読み戻すと、すべての指標が満点になるか"""
    print("\n--- Running Test: Oracle Metrics ---")
    results = DialogueAgent(oracle_from(sample), kb).evaluate_corpus(sample, progress=False)
    path = tmp_path / "predictions.jsonl"
    dump_predictions(str(path), results)

    for preds in (predictions_from_outputs(results), load_predictions(str(path))):
        report = evaluate(preds, sample)
        assert report.jga == 100.0
        assert report.api == 100.0
        assert report.tsr == 100.0
        assert report.dsr == 100.0
        assert report.bleu == pytest.approx(100.0)
        assert report.ser == 0.0
        assert report.api_false_positives == 0
        assert report.dialogues == [{"dialogue_id": "sample-hotels", "success": True, "jga": 100.0, "turns": 3}]


def test_one_wrong_state_costs_a_third(sample, kb):
    print("\n--- Running Test: JGA ---")
    preds = predictions_from_outputs(DialogueAgent(oracle_from(sample), kb).evaluate_corpus(sample, progress=False))
    rows = preds["sample-hotels"]
    rows[1] = replace(rows[1], state=parse_state('( hotels search ) stars at_least " 4 "'))
    assert jga(preds, sample) == pytest.approx(200.0 / 3.0)
    report = evaluate(preds, sample)
    assert report_to_dict(report)["JGA"] == 66.67
    assert report.api == 100.0
    assert report.tsr == 100.0


# ===============================================================================
# Section 2: 指標ごとの定義
# ===============================================================================

def test_bleu_of_a_known_pair():
    """n-gram 適合率 5/6, 3/5, 2/4, 1/3 で長さ罰則なし"""
    print("\n--- Running Test: BLEU ---")
    gold = [Dialogue("b", "en", (gold_turn(1, "null", "( hotels search ) goodbye", "the cat sat on a mat"),))]
    preds = {"b": [Prediction("b", 1, parse_state("null"), False, None, "The cat sat on the mat")]}
    assert abs(bleu(preds, gold) - (1.0 / 12.0) ** 0.25 * 100.0) < 1e-9


def test_ser_counts_turns_with_missing_values(two_tasks):
    print("\n--- Running Test: SER ---")
    gold = [two_tasks]
    preds = {"two-tasks": perfect(two_tasks)}
    assert ser(preds, gold) == 0.0

    preds["two-tasks"][1] = replace(preds["two-tasks"][1], response="I recommend Royal Plaza Hotel.")
    assert ser(preds, gold) == 50.0
    preds["two-tasks"][2] = replace(preds["two-tasks"][2], response="try dim   dim sum")
    assert ser(preds, gold) == 50.0

    quiet = [Dialogue("q", "en", (gold_turn(1, "null", "( hotels search ) request stars", "How many stars?"),))]
    assert ser({"q": [Prediction("q", 1, parse_state("null"), False, None, "")]}, quiet) == 0.0


def test_task_and_dialogue_success(two_tasks):
    print("\n--- Running Test: TSR / DSR ---")
    gold = [two_tasks]
    preds = {"two-tasks": perfect(two_tasks)}
    assert tsr_dsr(preds, gold) == (100.0, 100.0)

    # 値が対話行為にあれば応答に無くても伝えたことにする
    preds["two-tasks"][2] = replace(preds["two-tasks"][2], response="Try this one.")
    assert tsr_dsr(preds, gold) == (100.0, 100.0)
    assert ser(preds, gold) == 50.0

    preds["two-tasks"][2] = replace(preds["two-tasks"][2], acts=None)
    assert tsr_dsr(preds, gold) == (50.0, 0.0)
    report = evaluate(preds, gold)
    assert report.tasks == [
        {"dialogue_id": "two-tasks", "task": "hotels search", "success": True},
        {"dialogue_id": "two-tasks", "task": "restaurants search", "success": False},
    ]


def test_api_accuracy_needs_decision_and_constraints(two_tasks):
    print("\n--- Running Test: API Accuracy ---")
    gold = [two_tasks]
    preds = {"two-tasks": perfect(two_tasks)}
    assert api_acc(preds, gold) == 100.0

    wrong = parse_state('( hotels search ) price_level equal_to " expensive "')
    preds["two-tasks"][1] = replace(preds["two-tasks"][1], state=wrong)
    assert api_acc(preds, gold) == 0.0
    assert tsr_dsr(preds, gold) == (50.0, 0.0)

    preds = {"two-tasks": perfect(two_tasks)}
    preds["two-tasks"][1] = replace(preds["two-tasks"][1], api_frame=RESTAURANTS)
    assert api_acc(preds, gold) == 0.0

    preds = {"two-tasks": perfect(two_tasks)}
    preds["two-tasks"][1] = replace(preds["two-tasks"][1], api_decision=False)
    assert api_acc(preds, gold) == 0.0


def test_false_positive_calls_are_reported_separately(two_tasks):
    print("\n--- Running Test: API False Positives ---")
    gold = [two_tasks]
    preds = {"two-tasks": perfect(two_tasks)}
    preds["two-tasks"][0] = replace(preds["two-tasks"][0], api_decision=True)
    report = evaluate(preds, gold)
    assert report.api == 100.0
    assert report.api_false_positives == 1


def test_alignment_errors(two_tasks, sample):
    print("\n--- Running Test: Alignment Errors ---")
    gold = [two_tasks]
    rows = perfect(two_tasks)
    assert [pred.turn for _, pairs in align({"two-tasks": rows}, gold) for _, pred in pairs] == [1, 2, 3]
    with pytest.raises(AlignmentError):
        align({}, gold)
    with pytest.raises(AlignmentError):
        align({"two-tasks": rows, "ghost": rows}, gold)
    with pytest.raises(AlignmentError):
        align({"two-tasks": rows[:2]}, gold)
    with pytest.raises(AlignmentError):
        align({"two-tasks": [rows[0], rows[1], replace(rows[2], turn=4)]}, gold)
    with pytest.raises(AlignmentError):
        evaluate({"two-tasks": rows}, gold + sample)


def test_empty_corpus():
    print("\n--- Running Test: Empty Corpus ---")
    report = evaluate({}, [])
    assert report.headline() == {"JGA": 100.0, "TSR": 100.0, "DSR": 100.0, "API": 100.0, "BLEU": 0.0, "SER": 0.0}


def test_metrics_do_not_depend_on_dialogue_order(two_tasks):
    """正解の対話と予測の並びを入れ替えても、同じレポートになるか"""
    print("\n--- Running Test: Dialogue Order Invariance ---")
    gold = [Dialogue(f"d{i}", "en", two_tasks.turns) for i in range(4)]
    preds = {d.id: perfect(d) for d in gold}
    preds["d1"][1] = replace(preds["d1"][1], response="I recommend Royal Plaza Hotel.")
    preds["d2"][2] = replace(preds["d2"][2], acts=None)
    preds["d3"][1] = replace(preds["d3"][1], state=parse_state("null"))
    expected = evaluate(preds, gold)
    assert expected.dsr == 50.0

    rng = random.Random(3)
    for _ in range(10):
        shuffled_gold = rng.sample(gold, len(gold))
        shuffled_preds = {d.id: preds[d.id] for d in rng.sample(gold, len(gold))}
        assert evaluate(shuffled_preds, shuffled_gold) == expected


# ===============================================================================
# Section 3: 予測ダンプとレポート
# ===============================================================================

def _write_rows(path, rows):
    path.write_text("".join(json.dumps(row) + "\n" for row in rows), encoding="utf-8")


def test_load_predictions_groups_and_sorts(tmp_path):
    print("\n--- Running Test: Load Predictions ---")
    row = {"dialogue_id": "d", "state": "( hotels search )", "api_decision": False,
           "acts": "( hotels search ) request stars", "response": "How many stars?"}
    path = tmp_path / "preds.jsonl"
    _write_rows(path, [
        dict(row, turn=2),
        dict(row, turn=1, api_frame="hotels search"),
        dict(row, turn=1, dialogue_id="e", acts=""),
    ])
    preds = load_predictions(str(path))
    assert list(preds) == ["d", "e"]
    assert [p.turn for p in preds["d"]] == [1, 2]
    assert preds["d"][0].api_frame == HOTELS
    assert preds["e"][0].acts is None


@pytest.mark.parametrize("row", [
    {"dialogue_id": "d", "turn": 1, "state": "null", "api_decision": False, "acts": ""},
    {"dialogue_id": "d", "turn": 1, "state": "( hotels search ) stars bogus \" 5 \"", "api_decision": False,
     "acts": "", "response": ""},
    {"dialogue_id": "d", "turn": 1, "state": "null", "api_decision": False, "acts": "( hotels", "response": ""},
    {"dialogue_id": "d", "turn": 1, "state": "null", "api_decision": True, "acts": "", "response": "",
     "api_frame": "hotels"},
])
def test_bad_prediction_rows(tmp_path, row):
    print("\n--- Running Test: Bad Prediction Row ---")
    path = tmp_path / "preds.jsonl"
    _write_rows(path, [row])
    with pytest.raises(SchemaError) as info:
        load_predictions(str(path))
    assert info.value.coordinates["line"] == 1


def test_summary_table(two_tasks):
    print("\n--- Running Test: Summary Table ---")
    report = evaluate({"two-tasks": perfect(two_tasks)}, [two_tasks])
    lines = format_summary(report).splitlines()
    assert [name.strip() for name in lines[0].split("|")] == ["JGA", "TSR", "DSR", "API", "BLEU", "SER"]
    assert set(lines[1]) == {"-"}
    assert lines[2].split(" | ")[0].strip() == "100.00"
    assert lines[2].split(" | ")[-1].strip() == "0.00"
