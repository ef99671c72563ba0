# -*- coding: utf-8 -*-
"""
対話エージェントの推論ループ。
1ターンごとに DST → デルタ適用 → API判定 → (KB検索) → 対話行為生成 → 後処理 → 応答生成 を実行する。
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional

from tqdm import tqdm

from src.agent.config import RepresentationConfig
from src.agent.session import Session
from src.agent.templates import build_acd_input, build_dag_input, build_dst_input, build_rg_input
from src.constants import DEFAULT_APPEND_SLOTS, TASK_ACTS, TASK_API, TASK_DST, TASK_RG, Constants
from src.errors import FormalSyntaxError, DuplicateSlotError, ModelOutputParseError, TypeMismatchError, UnknownSlotError
from src.formal.delta import apply_delta, compute_delta
from src.formal.grammar import parse_acts, parse_delta, parse_state, serialize_acts, serialize_delta, serialize_state
from src.formal.types import (
    NO_RESULT,
    AgentAct,
    AgentActSet,
    BeliefDelta,
    BeliefState,
    DomainIntent,
    KnowledgeBlock,
    Relation,
)
from src.kb.store import to_knowledge_block
from src.utils.io import write_jsonl

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TurnOutput:
    delta: BeliefDelta
    state: BeliefState
    api_decision: bool
    kb_result: object
    knowledge: object
    acts: AgentActSet
    response: str
    api_frame: Optional[DomainIntent] = None

    def to_dump(self, dialogue_id, turn):
        """予測ダンプの1行"""
        row = {
            "dialogue_id": dialogue_id,
            "turn": turn,
            "delta": serialize_delta(self.delta),
            "state": serialize_state(self.state),
            "api_decision": self.api_decision,
            "acts": serialize_acts(self.acts),
            "response": self.response,
        }
        if self.api_frame is not None:
            row["api_frame"] = str(self.api_frame)
        return row


def postprocess_acts(acts: AgentActSet, knowledge, append_slots=DEFAULT_APPEND_SLOTS) -> AgentActSet:
    """
    知識ブロックにあって対話行為に現れないスロットを offer として付け足す。

    Args:
        acts (AgentActSet): モデルが生成した対話行為
        knowledge: このターンの知識ブロック（無ければ None / NO_RESULT）
        append_slots: 付け足す対象のスロット名

    Returns:
        AgentActSet: 付け足し後の対話行為（該当が無ければ acts をそのまま返す）
    """
    if not isinstance(knowledge, KnowledgeBlock):
        return acts
    mentioned = {act.slot for act in acts.acts if act.slot}
    added = []
    for slot in append_slots:
        if slot in knowledge.pairs and slot not in mentioned:
            values = knowledge.pairs[slot]
            relation = Relation.ONE_OF if len(values) > 1 else Relation.EQUAL_TO
            added.append(AgentAct("offer", slot, relation, values))
    if not added:
        return acts
    logger.info("Appended slots from knowledge: %s", ", ".join(a.slot for a in added))
    return AgentActSet(acts.frame, acts.acts + tuple(added))


def active_frame(delta: BeliefDelta, session: Session, state: BeliefState):
    """API呼び出しの対象フレーム。デルタ → 直前の対話行為 → 状態の先頭 の順に決める。"""
    touched = [frame for frame in sorted(delta.frames) if frame in state.frames]
    if touched:
        return touched[-1]
    if session.last_acts and session.last_acts[-1].frame in state.frames:
        return session.last_acts[-1].frame
    if not state.is_empty():
        return sorted(state.frames)[0]
    return None


def _parse_output(task, text, parser):
    try:
        return parser(text)
    except (FormalSyntaxError, DuplicateSlotError) as e:
        raise ModelOutputParseError(task, text, getattr(e, "offset", 0), str(e)) from e


class DialogueAgent:
    """
    モデルと知識ベースを束ねて対話を進めるエージェント。

    Args:
        model (TextModel): 4つのサブタスクに答えるモデル
        store (KBStore): API呼び出しで検索する知識ベース
        config (RepresentationConfig): 入力の表現方式（蒸留表現のみ）
        append_slots: 対話行為の後処理で付け足すスロット
        rg_uses_gold_acts (bool): 評価時、応答生成に正解の対話行為を渡すかどうか
    """

    def __init__(self, model, store, config: RepresentationConfig = None,
                 append_slots=DEFAULT_APPEND_SLOTS, rg_uses_gold_acts=False):
        self.model = model
        self.store = store
        self.config = config or RepresentationConfig()
        if self.config.is_original:
            raise ValueError("the agent loop runs the distilled representation only")
        self.append_slots = tuple(append_slots)
        self.rg_uses_gold_acts = rg_uses_gold_acts

    @classmethod
    def from_config(cls, model, store, config: dict) -> "DialogueAgent":
        """config.json 全体（load_config の戻り値）から作る"""
        agent_section = config.get("agent", {})
        return cls(
            model,
            store,
            RepresentationConfig.from_dict(config.get("representation")),
            append_slots=agent_section.get("append_slots", DEFAULT_APPEND_SLOTS),
            rg_uses_gold_acts=agent_section.get("rg_uses_gold_acts", False),
        )

    def new_session(self) -> Session:
        return Session(config=self.config)

    # ------------------------------------------------------------------ 1ターン

    def _track(self, session: Session, user_utt: str):
        output = self.model.generate(TASK_DST, build_dst_input(session, user_utt))
        if self.config.generate_full_state:
            full = _parse_output(TASK_DST, output, parse_state)
            delta = compute_delta(session.belief, full)
        else:
            delta = _parse_output(TASK_DST, output, parse_delta)
        return delta, apply_delta(session.belief, delta)

    def _detect_api(self, session: Session, user_utt: str, state: BeliefState) -> bool:
        output = self.model.generate(TASK_API, build_acd_input(session, user_utt, state))
        if output not in (Constants.YES, Constants.NO):
            raise ModelOutputParseError(TASK_API, output, 0, "expected yes or no")
        return output == Constants.YES

    def _call_api(self, session: Session, delta: BeliefDelta, state: BeliefState):
        frame = active_frame(delta, session, state)
        if frame is None:
            logger.warning("API call requested with an empty state; using NoResult")
            return None, NO_RESULT, NO_RESULT
        try:
            result = self.store.query(frame, state.frames[frame])
        except (UnknownSlotError, TypeMismatchError) as e:
            logger.warning("KB query for %s failed (%s); using NoResult", frame, e)
            return frame, NO_RESULT, NO_RESULT
        return frame, result, to_knowledge_block(result, frame)

    def run_turn(self, session: Session, user_utt: str, gold=None) -> TurnOutput:
        """
        1ターン分の推論を行い、セッションを次のターンへ進める。

        Args:
            session (Session): 対話の状態（B_{t-1} と直前2ターンの対話行為など）
            user_utt (str): ユーザ発話 U_t
            gold (TurnRecord): 評価時の正解ターン。与えると次ターンの履歴には正解の対話行為と応答を使う。

        Returns:
            TurnOutput

        Raises:
            ModelOutputParseError: モデルの出力が解釈できない
            BackendUnavailableError: 外部バックエンドが応答しない
        """
        delta, state = self._track(session, user_utt)
        api_decision = self._detect_api(session, user_utt, state)
        api_frame, kb_result, knowledge = (None, None, None)
        if api_decision:
            api_frame, kb_result, knowledge = self._call_api(session, delta, state)

        raw_acts = self.model.generate(TASK_ACTS, build_dag_input(session, user_utt, state, knowledge))
        acts = postprocess_acts(_parse_output(TASK_ACTS, raw_acts, parse_acts), knowledge, self.append_slots)

        rg_acts = gold.acts if (gold is not None and self.rg_uses_gold_acts) else acts
        response = self.model.generate(TASK_RG, build_rg_input(rg_acts, user_utt))

        history_acts = gold.acts if gold is not None else acts
        history_response = gold.response if gold is not None else response
        session.advance(user_utt, state, history_acts, history_response, knowledge)
        return TurnOutput(delta, state, api_decision, kb_result, knowledge, acts, response, api_frame)

    # ------------------------------------------------------------------ 評価

    def evaluate_dialogue(self, dialogue) -> List[TurnOutput]:
        """
        正解対話を再生する。信念状態は予測を引き継ぎ、対話行為の履歴には正解を使う。
        """
        session = self.new_session()
        return [self.run_turn(session, turn.user, gold=turn) for turn in dialogue.turns]

    def run_script(self, utterances, session: Optional[Session] = None) -> List[TurnOutput]:
        """台本のユーザ発話を順に流す（履歴には予測をそのまま使う）"""
        session = session or self.new_session()
        return [self.run_turn(session, utterance) for utterance in utterances]

    def evaluate_corpus(self, dialogues, workers: int = 1, progress: bool = True):
        """
        コーパス全体を評価する。対話ごとに並列に処理し、結果は入力順に並べて返す。

        Returns:
            list[tuple[Dialogue, list[TurnOutput]]]
        """
        dialogues = list(dialogues)
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            outputs = list(tqdm(pool.map(self.evaluate_dialogue, dialogues), total=len(dialogues),
                                desc="Evaluating dialogues", disable=not progress))
        return list(zip(dialogues, outputs))


def prediction_rows(results):
    """(対話, 出力列) の列を予測ダンプの行に変換する"""
    rows = []
    for dialogue, outputs in results:
        dialogue_id = dialogue if isinstance(dialogue, str) else dialogue.id
        for index, output in enumerate(outputs, start=1):
            rows.append(output.to_dump(dialogue_id, index))
    return rows


def dump_predictions(path, results) -> None:
    write_jsonl(path, prediction_rows(results))
