# -*- coding: utf-8 -*-
"""対話1本分の推論状態"""
from dataclasses import dataclass, field
from typing import Optional, Tuple

from src.agent.config import RepresentationConfig
from src.formal.types import AgentActSet, BeliefState, Knowledge

# 履歴に残すエージェントターン数の上限（C_{t-2}, C_{t-1}）
MAX_AGENT_TURNS = 2


@dataclass
class Session:
    """
    次のターン t を処理するのに必要な情報を保持する。

    belief は B_{t-1}、last_acts / last_responses は古い順に最大2件、
    last_knowledge は前ターンの知識 R_{t-1}（前ターンでAPIを呼ばなければ None）。
    """

    config: RepresentationConfig = field(default_factory=RepresentationConfig)
    turn_index: int = 1
    belief: BeliefState = field(default_factory=BeliefState.empty)
    last_acts: Tuple[AgentActSet, ...] = ()
    last_responses: Tuple[str, ...] = ()
    prev_user: Optional[str] = None
    last_knowledge: Knowledge = None

    def advance(self, user_utt: str, state: BeliefState, acts: Optional[AgentActSet],
                response: str, knowledge: Knowledge) -> None:
        """ターン t の結果を取り込み、次のターンへ進める"""
        self.belief = state
        if acts is not None:
            self.last_acts = (self.last_acts + (acts,))[-MAX_AGENT_TURNS:]
        self.last_responses = (self.last_responses + (response,))[-MAX_AGENT_TURNS:]
        self.prev_user = user_utt
        self.last_knowledge = knowledge
        self.turn_index += 1
