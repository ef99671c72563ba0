# -*- coding: utf-8 -*-
"""
4つのサブタスク(DST / API / ACTS / RG)の入力文字列を組み立てる。
出力はモデルへの入力そのものなので、空白1つの違いも許されない。
"""
from src.agent.session import Session
from src.constants import TASK_ACTS, TASK_API, TASK_DST, TASK_RG
from src.formal.grammar import serialize_acts, serialize_knowledge, serialize_state


def history_segment(session: Session, user_utt: str, include_prev_user: bool = False) -> str:
    """
    <history> の中身を作る。

    既定では `AGENT_ACTS_PREV: {C_{t-2}} AGENT_ACTS: {C_{t-1}} USER: {U_t}`。
    存在しない区間は丸ごと省く（プレースホルダは入れない）。
    """
    config = session.config
    parts = []
    if include_prev_user and session.prev_user is not None:
        parts.append(f"USER_PREV: {session.prev_user} ")

    keep = config.agent_turns_in_history
    if config.natural_agent_response:
        items = list(session.last_responses[-keep:]) if keep else []
        labels = ("AGENT_PREV", "AGENT")
    else:
        items = [serialize_acts(acts) for acts in session.last_acts[-keep:]] if keep else []
        labels = ("AGENT_ACTS_PREV", "AGENT_ACTS")
    if items:
        for label, text in zip(labels[-len(items):], items):
            parts.append(f"{label}: {text} ")

    parts.append(f"USER: {user_utt}")
    return "".join(parts)


def build_dst_input(session: Session, user_utt: str) -> str:
    config = session.config
    with_state = config.include_state and not config.prev_user_utt_as_state
    history = history_segment(session, user_utt, include_prev_user=config.prev_user_utt_as_state)
    if not with_state:
        return f"{TASK_DST}: <history> {history} <endofhistory>"
    return (f"{TASK_DST}: <state> {serialize_state(session.belief)} <endofstate> "
            f"<history> {history} <endofhistory>")


def _knowledge_state_input(task, knowledge, session, user_utt, state_t) -> str:
    return (f"{task}: <knowledge> {serialize_knowledge(knowledge)} <endofknowledge> "
            f"<state> {serialize_state(state_t)} <endofstate> "
            f"<history> {history_segment(session, user_utt)} <endofhistory>")


def build_acd_input(session: Session, user_utt: str, state_t) -> str:
    """API呼び出し判定の入力。知識は前ターンの結果 R_{t-1}。"""
    return _knowledge_state_input(TASK_API, session.last_knowledge, session, user_utt, state_t)


def build_dag_input(session: Session, user_utt: str, state_t, knowledge) -> str:
    """対話行為生成の入力。知識はこのターンの結果 R_t。"""
    return _knowledge_state_input(TASK_ACTS, knowledge, session, user_utt, state_t)


def build_rg_input(acts_t, user_utt: str) -> str:
    return f"{TASK_RG}: <actions> {serialize_acts(acts_t)} <endofactions> <history> USER: {user_utt} <endofhistory>"
