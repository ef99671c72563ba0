# -*- coding: utf-8 -*-
"""
正解の対話からサブタスクごとの訓練例(入力→正解の文字列ペア)を作る。
履歴には常に正解の対話行為・応答・知識を使う。
"""
import logging
from dataclasses import asdict, dataclass
from typing import List

from tqdm import tqdm

from src.agent import original
from src.agent.config import RepresentationConfig
from src.agent.session import Session
from src.agent.templates import build_acd_input, build_dag_input, build_dst_input, build_rg_input
from src.constants import TASK_ACTS, TASK_API, TASK_DST, TASK_ORDER, TASK_RG, Constants
from src.formal.delta import apply_delta
from src.formal.grammar import serialize_acts, serialize_delta, serialize_state
from src.formal.types import KnowledgeBlock
from src.utils.io import write_jsonl

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainingExample:
    id: str
    turn: int
    task: str
    input: str
    target: str

    def to_dict(self):
        return asdict(self)


def _distilled_turn(session: Session, dialogue_id, turn) -> List[TrainingExample]:
    config = session.config
    dst_target = serialize_state(turn.state) if config.generate_full_state else serialize_delta(turn.delta)
    rows = [
        TrainingExample(dialogue_id, turn.turn, TASK_DST, build_dst_input(session, turn.user), dst_target),
        TrainingExample(dialogue_id, turn.turn, TASK_API, build_acd_input(session, turn.user, turn.state),
                        Constants.YES if turn.api else Constants.NO),
        TrainingExample(dialogue_id, turn.turn, TASK_ACTS,
                        build_dag_input(session, turn.user, turn.state, turn.knowledge),
                        serialize_acts(turn.acts)),
    ]
    if not turn.rg_filtered:
        rows.append(TrainingExample(dialogue_id, turn.turn, TASK_RG, build_rg_input(turn.acts, turn.user),
                                    turn.response))
    session.advance(turn.user, turn.state, turn.acts, turn.response, turn.knowledge)
    return rows


def _original_turn(session: Session, dialogue_id, turn) -> List[TrainingExample]:
    # 元表現は状態を挿入順で描くので、正解デルタを積み直した状態を使う
    state = apply_delta(session.belief, turn.delta)
    rows = [TrainingExample(dialogue_id, turn.turn, TASK_DST, original.build_dst_input(session, turn.user),
                            original.render_delta(turn.delta))]
    if turn.api:
        frame = turn.knowledge.frame if isinstance(turn.knowledge, KnowledgeBlock) else turn.task_frame
        rows.append(TrainingExample(dialogue_id, turn.turn, TASK_API,
                                    original.build_response_input(session, turn.user, state),
                                    original.api_call_target(frame)))
        rg_input = original.build_response_input(session, turn.user, state, turn.knowledge, api_frame=frame)
    else:
        rg_input = original.build_response_input(session, turn.user, state)
    if not turn.rg_filtered:
        rows.append(TrainingExample(dialogue_id, turn.turn, TASK_RG, rg_input, turn.response))
    session.advance(turn.user, state, turn.acts, turn.response, turn.knowledge)
    return rows


def make_examples(dialogues, config: RepresentationConfig = None, progress: bool = False) -> List[TrainingExample]:
    """
    対話から訓練例を作る。

    Args:
        dialogues (list[Dialogue]): 検証済みの対話
        config (RepresentationConfig): 表現方式。既定は蒸留表現。
        progress (bool): tqdm の進捗バーを出すかどうか

    Returns:
        list[TrainingExample]: (対話ID, ターン, タスク) 順に並んだ訓練例
    """
    config = config or RepresentationConfig()
    build_turn = _original_turn if config.is_original else _distilled_turn
    examples = []
    skipped = 0
    for dialogue in tqdm(dialogues, desc="Building examples", disable=not progress):
        session = Session(config=config)
        for turn in dialogue.turns:
            skipped += int(turn.rg_filtered)
            examples.extend(build_turn(session, dialogue.id, turn))
    examples.sort(key=lambda e: (e.id, e.turn, TASK_ORDER[e.task]))
    if skipped:
        logger.info("Skipped %d RG examples marked by the response filter", skipped)
    return examples


def write_examples(path, examples) -> None:
    write_jsonl(path, [e.to_dict() for e in examples])
