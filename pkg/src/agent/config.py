# -*- coding: utf-8 -*-
"""表現方式の設定（既定は蒸留表現、各フラグが比較実験の1行に対応する）"""
from dataclasses import dataclass, fields, replace

DISTILLED = "distilled"
ORIGINAL = "original"

# ablation 名 → 既定値から変更するフラグ
ABLATIONS = {
    "generate_full_state": {"generate_full_state": True},
    "natural_agent_response": {"natural_agent_response": True},
    "only_last_agent_turn": {"agent_turns_in_history": 1},
    "prev_user_utt_as_state": {"prev_user_utt_as_state": True},
    "remove_state": {"include_state": False},
    "original": {"representation": ORIGINAL},
}


@dataclass(frozen=True)
class RepresentationConfig:
    generate_full_state: bool = False
    natural_agent_response: bool = False
    agent_turns_in_history: int = 2
    prev_user_utt_as_state: bool = False
    include_state: bool = True
    representation: str = DISTILLED

    def __post_init__(self):
        if self.agent_turns_in_history not in (0, 1, 2):
            raise ValueError(f"agent_turns_in_history must be 0, 1 or 2, got {self.agent_turns_in_history}")
        if self.representation not in (DISTILLED, ORIGINAL):
            raise ValueError(f"unknown representation {self.representation!r}")

    @classmethod
    def from_dict(cls, section) -> "RepresentationConfig":
        """config.json の representation セクションから作る（未知のキーは無視）"""
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in (section or {}).items() if k in names})

    def with_ablation(self, name: str) -> "RepresentationConfig":
        if name not in ABLATIONS:
            raise ValueError(f"unknown ablation {name!r}; choose from {sorted(ABLATIONS)}")
        return replace(self, **ABLATIONS[name])

    @property
    def is_original(self) -> bool:
        return self.representation == ORIGINAL
