# -*- coding: utf-8 -*-
"""
応答生成(RG)の訓練ペアのうち、原文と訳文の類似度がしきい値未満のものを除く。
"""
import logging
from dataclasses import dataclass, field
from typing import List, Tuple

from src.constants import DEFAULT_FILTER_THRESHOLD

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScoredPair:
    source: str
    target: str
    score: float


@dataclass
class FilterReport:
    scorer: str
    threshold: float
    kept: int = 0
    dropped: List[ScoredPair] = field(default_factory=list)

    def to_dict(self):
        return {
            "scorer": self.scorer,
            "threshold": self.threshold,
            "kept": self.kept,
            "dropped": [{"source": p.source, "target": p.target, "score": round(p.score, 6)}
                        for p in self.dropped],
        }


def filter_pairs(pairs, scorer, threshold: float = DEFAULT_FILTER_THRESHOLD) -> Tuple[List[ScoredPair], FilterReport]:
    """
    類似度が threshold 以上のペアだけを残す。

    Args:
        pairs: (原文, 訳文) の列
        scorer: score(a, b) を持つスコアラ
        threshold (float): 0 以上 1 以下

    Returns:
        tuple: (残したペアのリスト, FilterReport)。どちらも入力の順序を保つ。
    """
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    report = FilterReport(getattr(scorer, "label", type(scorer).__name__), threshold)
    kept = []
    for source, target in pairs:
        pair = ScoredPair(source, target, scorer.score(source, target))
        if pair.score >= threshold:
            kept.append(pair)
        else:
            report.dropped.append(pair)
    report.kept = len(kept)
    logger.info("Filtered RG pairs with %s scorer at %.2f: kept %d, dropped %d",
                report.scorer, threshold, report.kept, len(report.dropped))
    return kept, report
