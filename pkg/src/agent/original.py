# -*- coding: utf-8 -*-
"""
比較用の元表現（Track Dialogue State / Generate Response 形式）の入力と正解を作る。

状態は挿入順、知識は `[domain]` ブロックにレコードの属性順で並べ、
履歴は直前のユーザ発話とシステム応答の1往復だけを自然文で持つ。
"""
from src.agent.session import Session
from src.constants import Constants
from src.formal.types import NO_RESULT, BeliefDelta, BeliefState, DomainIntent, FrameOp

DST_PREFIX = "Track Dialogue State:"
RESPONSE_PREFIX = "Generate Response:"


def _api_head(frame: DomainIntent) -> str:
    return f"<API> {frame.domain} {frame.intent}"


def _constraint_text(constraint) -> str:
    values = "".join(f"<value> {v}" for v in constraint.values)
    return f"<slot> {constraint.slot}<relation> {constraint.relation.value}{values}"


def render_state(state: BeliefState) -> str:
    return "".join(
        _api_head(frame) + "".join(_constraint_text(c) for c in constraints.values())
        for frame, constraints in state.frames.items()
    )


def render_delta(delta: BeliefDelta) -> str:
    """DST の正解。空のデルタは空文字列。"""
    parts = []
    for frame, update in delta.frames.items():
        if update.op is FrameOp.DROP:
            parts.append(f"{_api_head(frame)} {Constants.NULL}")
        elif update.op is FrameOp.CLEAR:
            parts.append(f"{_api_head(frame)} {Constants.CLEAR}")
        else:
            parts.append(_api_head(frame) + "".join(_constraint_text(c) for c in update.entries.values()))
    return "".join(parts)


def render_knowledge(knowledge) -> str:
    if knowledge is None:
        return ""
    if knowledge is NO_RESULT:
        return f" {Constants.NO_RESULT}"
    body = "".join(
        f"<slot> {slot}" + "".join(f"<value> {v}" for v in values)
        for slot, values in knowledge.pairs.items()
    )
    return f" [{knowledge.frame.domain}]{body}"


def render_history(session: Session, user_utt: str) -> str:
    if session.prev_user is not None and session.last_responses:
        return f"<user> {session.prev_user}<system> {session.last_responses[-1]}<user> {user_utt}"
    return f"<user> {user_utt}"


def build_dst_input(session: Session, user_utt: str) -> str:
    return f"{DST_PREFIX}<knowledge><dialogue_state> {render_state(session.belief)}{render_history(session, user_utt)}"


def build_response_input(session: Session, user_utt: str, state_t: BeliefState,
                         knowledge=None, api_frame=None) -> str:
    """
    応答(またはAPI呼び出し)の入力。

    Args:
        knowledge: API呼び出し後の2回目の入力では知識ブロック、それ以外は None
        api_frame: 2回目の入力で末尾に付ける呼び出し済みAPIのフレーム
    """
    text = (f"{RESPONSE_PREFIX}<knowledge>{render_knowledge(knowledge)}<dialogue_state> "
            f"{render_state(state_t)}{render_history(session, user_utt)}")
    if api_frame is not None:
        text += _api_head(api_frame)
    return text


def api_call_target(frame: DomainIntent) -> str:
    return _api_head(frame)
