# -*- coding: utf-8 -*-
"""
信念状態とデルタの演算。

apply_delta(B_{t-1}, ΔB_t) = B_t、compute_delta(B_{t-1}, B_t) = ΔB_t で、
compute_delta は最小のデルタ（どのエントリを1つ除いても B_t を再現できない）を返す。
"""
from src.formal.types import BeliefDelta, BeliefState, DeltaFrame, FrameOp


def apply_delta(prev: BeliefState, delta: BeliefDelta) -> BeliefState:
    """
    前ターンの状態にデルタを適用して新しい状態を返す。

    Args:
        prev (BeliefState): 前ターンの信念状態
        delta (BeliefDelta): このターンのデルタ

    Returns:
        BeliefState: 更新後の信念状態。削除エントリで空になったフレームは取り除く。
    """
    frames = {frame: dict(constraints) for frame, constraints in prev.frames.items()}
    for frame, update in delta.frames.items():
        if update.op is FrameOp.DROP:
            frames.pop(frame, None)
            continue
        if update.op is FrameOp.CLEAR:
            frames[frame] = {}
            continue
        current = frames.setdefault(frame, {})
        has_deletion = False
        for slot, constraint in update.entries.items():
            if constraint.is_deletion:
                has_deletion = True
                current.pop(slot, None)
            else:
                current[slot] = constraint
        if has_deletion and not current:
            del frames[frame]
    return BeliefState(frames)


def compute_delta(prev: BeliefState, next_state: BeliefState) -> BeliefDelta:
    """2つの状態の最小デルタを求める"""
    frames = {}
    for frame in sorted(set(prev.frames) | set(next_state.frames)):
        before = prev.frames.get(frame)
        after = next_state.frames.get(frame)
        if after is None:
            if before:
                frames[frame] = DeltaFrame.update({s: c.deletion() for s, c in before.items()})
            else:
                frames[frame] = DeltaFrame.drop()
        elif before is None:
            frames[frame] = DeltaFrame.update(after)
        elif before and not after:
            frames[frame] = DeltaFrame.clear()
        else:
            entries = {slot: c for slot, c in after.items() if before.get(slot) != c}
            for slot, c in before.items():
                if slot not in after:
                    entries[slot] = c.deletion()
            if entries:
                frames[frame] = DeltaFrame.update(entries)
    return BeliefDelta(frames)
