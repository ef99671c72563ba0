# -*- coding: utf-8 -*-
"""予測ダンプの読み込みと評価レポートの書き出し"""
import logging
from collections import OrderedDict

from src.errors import DuplicateSlotError, FormalSyntaxError, SchemaError
from src.formal.grammar import parse_acts, parse_state
from src.formal.types import DomainIntent
from src.evaluation.metrics import MetricsReport, Prediction
from src.utils.io import read_jsonl, write_json

logger = logging.getLogger(__name__)

_REQUIRED = ("dialogue_id", "turn", "state", "api_decision", "acts", "response")


def prediction_from_row(row, line) -> Prediction:
    where = {"line": line, "dialogue": row.get("dialogue_id") if isinstance(row, dict) else None}
    if not isinstance(row, dict):
        raise SchemaError("prediction row must be an object", where)
    missing = [k for k in _REQUIRED if k not in row]
    if missing:
        raise SchemaError(f"prediction row is missing {', '.join(missing)}", where)
    where["turn"] = row["turn"]
    try:
        frame = None
        if row.get("api_frame"):
            domain, intent = row["api_frame"].split()
            frame = DomainIntent(domain, intent)
        return Prediction(
            dialogue_id=row["dialogue_id"],
            turn=row["turn"],
            state=parse_state(row["state"]),
            api_decision=bool(row["api_decision"]),
            acts=parse_acts(row["acts"]) if row["acts"] else None,
            response=row["response"],
            api_frame=frame,
        )
    except (FormalSyntaxError, DuplicateSlotError, ValueError, TypeError) as e:
        raise SchemaError(f"invalid prediction: {e}", where) from e


def load_predictions(path):
    """
    予測ダンプ(JSONL)を読み込む。

    Returns:
        dict: 対話ID → ターン順の Prediction のリスト（対話はファイルに現れた順）
    """
    grouped = OrderedDict()
    for line, row in enumerate(read_jsonl(path), start=1):
        prediction = prediction_from_row(row, line)
        grouped.setdefault(prediction.dialogue_id, []).append(prediction)
    for rows in grouped.values():
        rows.sort(key=lambda p: p.turn)
    logger.info("Loaded predictions for %d dialogues from %s", len(grouped), path)
    return grouped


def predictions_from_outputs(results):
    """evaluate_corpus の結果を、ファイルを経由せずに Prediction の辞書にする"""
    grouped = OrderedDict()
    for dialogue, outputs in results:
        grouped[dialogue.id] = [
            Prediction(dialogue.id, turn.turn, output.state, output.api_decision, output.acts, output.response,
                       output.api_frame)
            for turn, output in zip(dialogue.turns, outputs)
        ]
    return grouped


def report_to_dict(report: MetricsReport) -> dict:
    data = {key: round(value, 2) for key, value in report.headline().items()}
    data["api_false_positives"] = report.api_false_positives
    data["dialogues"] = [
        {**row, "jga": round(row["jga"], 2)} if "jga" in row else row for row in report.dialogues
    ]
    data["tasks"] = report.tasks
    return data


def write_report(path, report: MetricsReport) -> None:
    write_json(path, report_to_dict(report))


def format_summary(report: MetricsReport) -> str:
    """標準出力に出す要約表"""
    headline = report.headline()
    names = list(headline)
    header = " | ".join(f"{name:>6}" for name in names)
    values = " | ".join(f"{headline[name]:6.2f}" for name in names)
    rule = "-" * len(header)
    return "\n".join([header, rule, values])
