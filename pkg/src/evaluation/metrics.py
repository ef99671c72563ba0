# -*- coding: utf-8 -*-
"""
評価指標: JGA / API / TSR / DSR / BLEU / SER。

予測は対話IDごとにターン順のリストで受け取り、正解の対話とターン単位で突き合わせる。
値はすべて百分率（0〜100）。SER だけは低いほど良い。
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from nltk.tokenize import wordpunct_tokenize
from nltk.translate.bleu_score import corpus_bleu

from src.constants import MULTI_VALUE_SEPARATOR
from src.errors import AlignmentError
from src.formal.types import AgentActSet, BeliefState, DomainIntent, KnowledgeBlock
from src.kb.store import normalize

logger = logging.getLogger(__name__)

# タスク成功の判定で「ユーザに伝えるべき値」を運ぶ対話行為
INFORMING_ACTS = ("offer", "inform")
NOTIFY_PREFIX = "notify"


@dataclass(frozen=True)
class Prediction:
    """予測ダンプの1行"""

    dialogue_id: str
    turn: int
    state: BeliefState
    api_decision: bool
    acts: Optional[AgentActSet]
    response: str
    api_frame: Optional[DomainIntent] = None


@dataclass
class MetricsReport:
    jga: float
    tsr: float
    dsr: float
    api: float
    bleu: float
    ser: float
    api_false_positives: int = 0
    dialogues: List[dict] = field(default_factory=list)
    tasks: List[dict] = field(default_factory=list)

    def headline(self) -> Dict[str, float]:
        return {"JGA": self.jga, "TSR": self.tsr, "DSR": self.dsr, "API": self.api, "BLEU": self.bleu, "SER": self.ser}


def _percent(hits) -> float:
    return float(np.mean(hits) * 100.0)


def align(preds, gold):
    """
    予測と正解をターン単位で組にする。

    Args:
        preds (dict): 対話ID → ターン順の Prediction のリスト
        gold (list[Dialogue]): 正解の対話

    Returns:
        list[tuple[Dialogue, list[tuple[TurnRecord, Prediction]]]]

    Raises:
        AlignmentError: 対話やターンの数・番号が一致しない
    """
    gold_ids = {d.id for d in gold}
    extra = sorted(set(preds) - gold_ids)
    if extra:
        raise AlignmentError(f"predictions for unknown dialogue {extra[0]!r}")
    paired = []
    for dialogue in sorted(gold, key=lambda d: d.id):
        rows = preds.get(dialogue.id)
        if rows is None:
            raise AlignmentError(f"no predictions for dialogue {dialogue.id!r}")
        if len(rows) != len(dialogue.turns):
            raise AlignmentError(f"dialogue {dialogue.id!r} has {len(dialogue.turns)} gold turns "
                                 f"but {len(rows)} predicted turns")
        for turn, row in zip(dialogue.turns, rows):
            if turn.turn != row.turn:
                raise AlignmentError(f"dialogue {dialogue.id!r}: turn {row.turn} predicted where {turn.turn} expected")
        paired.append((dialogue, list(zip(dialogue.turns, rows))))
    return paired


def _gold_api_frame(turn) -> DomainIntent:
    if isinstance(turn.knowledge, KnowledgeBlock):
        return turn.knowledge.frame
    return turn.task_frame


def api_turn_correct(turn, pred: Prediction) -> bool:
    """API呼び出しを予測し、かつ呼び出しの制約が正解と一致したか"""
    if not pred.api_decision:
        return False
    gold_frame = _gold_api_frame(turn)
    pred_frame = pred.api_frame or gold_frame
    if pred_frame != gold_frame:
        return False
    return (pred.state.constraints(pred_frame) or {}) == (turn.state.constraints(gold_frame) or {})


def _split_values(values):
    found = []
    for value in values:
        found.extend(v for v in value.split(MULTI_VALUE_SEPARATOR) if v.strip())
    return [normalize(v) for v in found]


def informed_values(acts: AgentActSet):
    """offer / inform / notify_* が運ぶ値（正規化済み）"""
    values = []
    for act in acts.acts:
        if act.values and (act.act_name in INFORMING_ACTS or act.act_name.startswith(NOTIFY_PREFIX)):
            values.extend(act.values)
    return _split_values(values)


def _contains(text: str, value: str) -> bool:
    return value in normalize(text)


# ==============================================================================
# 指標
# ==============================================================================

def jga(preds, gold) -> float:
    """信念状態が正解と完全一致したターンの割合"""
    hits = [pred.state == turn.state for _, pairs in align(preds, gold) for turn, pred in pairs]
    return _percent(hits) if hits else 100.0


def api_acc(preds, gold) -> float:
    """
    正解でAPIを呼ぶターンについて、呼び出しの判断と制約がともに正しい割合。
    正解が呼ばないターンで呼んだもの（偽陽性）は分母に入れない。該当ターンが無ければ 100。
    """
    return _api(align(preds, gold))[0]


def _api(paired):
    hits = []
    false_positives = 0
    for _, pairs in paired:
        for turn, pred in pairs:
            if turn.api:
                hits.append(api_turn_correct(turn, pred))
            elif pred.api_decision:
                false_positives += 1
    return (_percent(hits) if hits else 100.0), false_positives


def _tasks(pairs):
    """ターンを task_frame ごとにまとめる（最初に現れた順）"""
    tasks = {}
    for turn, pred in pairs:
        tasks.setdefault(turn.task_frame, []).append((turn, pred))
    return tasks


def _task_success(pairs) -> bool:
    for turn, pred in pairs:
        if turn.api and not api_turn_correct(turn, pred):
            return False
        predicted = _split_values(pred.acts.values()) if pred.acts is not None else []
        for value in informed_values(turn.acts):
            if value not in predicted and not _contains(pred.response, value):
                return False
    return True


def _tsr_dsr(paired):
    task_rows = []
    dialogue_rows = []
    for dialogue, pairs in paired:
        outcomes = []
        for frame, task_pairs in _tasks(pairs).items():
            success = _task_success(task_pairs)
            outcomes.append(success)
            task_rows.append({"dialogue_id": dialogue.id, "task": str(frame), "success": success})
        dialogue_rows.append({"dialogue_id": dialogue.id, "success": all(outcomes)})
    tsr = _percent([row["success"] for row in task_rows]) if task_rows else 100.0
    dsr = _percent([row["success"] for row in dialogue_rows]) if dialogue_rows else 100.0
    return tsr, dsr, task_rows, dialogue_rows


def tsr_dsr(preds, gold):
    """
    タスク成功率と対話成功率。

    タスクは (domain, intent)。タスクが成功するのは
      - そのタスクで正解がAPIを呼ぶターンがすべて api_turn_correct を満たし、
      - 各ターンで正解の offer / inform / notify の値が、予測の対話行為の値か予測応答に含まれる
    とき。対話はすべてのタスクが成功したときに成功とする。

    Returns:
        tuple: (TSR, DSR)
    """
    tsr, dsr, _, _ = _tsr_dsr(align(preds, gold))
    return tsr, dsr


def _tokens(text: str):
    return wordpunct_tokenize(text.lower())


def bleu(preds, gold) -> float:
    """コーパス単位のBLEU-4（小文字化して wordpunct で分割、n-gram は全文で合算）"""
    return _bleu(align(preds, gold))


def _bleu(paired) -> float:
    hypotheses = []
    references = []
    for _, pairs in paired:
        for turn, pred in pairs:
            hypotheses.append(_tokens(pred.response))
            references.append([_tokens(turn.response)])
    if not hypotheses:
        return 0.0
    return float(corpus_bleu(references, hypotheses)) * 100.0


def _ser_turns(paired):
    errors = []
    for _, pairs in paired:
        for turn, pred in pairs:
            values = _split_values(turn.acts.values())
            if not values:
                continue
            errors.append(any(not _contains(pred.response, v) for v in values))
    return errors


def ser(preds, gold) -> float:
    """
    スロット誤り率。正解の対話行為に値があるターンのうち、
    どれか1つでも予測応答に含まれない値があったターンの割合。該当ターンが無ければ 0。
    """
    errors = _ser_turns(align(preds, gold))
    return _percent(errors) if errors else 0.0


def evaluate(preds, gold) -> MetricsReport:
    """6つの指標と、対話ごと・タスクごとの内訳をまとめて計算する"""
    paired = align(preds, gold)
    state_hits = [pred.state == turn.state for _, pairs in paired for turn, pred in pairs]
    api, false_positives = _api(paired)
    tsr, dsr, task_rows, dialogue_rows = _tsr_dsr(paired)
    errors = _ser_turns(paired)
    logger.info("API accuracy counts gold API turns only; %d false-positive calls reported separately",
                false_positives)

    per_dialogue = {row["dialogue_id"]: row for row in dialogue_rows}
    for dialogue, pairs in paired:
        per_dialogue[dialogue.id]["jga"] = _percent([p.state == t.state for t, p in pairs]) if pairs else 100.0
        per_dialogue[dialogue.id]["turns"] = len(pairs)

    return MetricsReport(
        jga=_percent(state_hits) if state_hits else 100.0,
        tsr=tsr,
        dsr=dsr,
        api=api,
        bleu=_bleu(paired),
        ser=_percent(errors) if errors else 0.0,
        api_false_positives=false_positives,
        dialogues=[per_dialogue[d.id] for d, _ in paired],
        tasks=task_rows,
    )
