# -*- coding: utf-8 -*-
"""正解データをそのまま返すオラクルモデル"""
import logging
from collections import defaultdict

from src.constants import TASKS
from src.data.examples import TrainingExample, make_examples
from src.errors import CollisionError, UnknownInputError

logger = logging.getLogger(__name__)


class OracleModel:
    """入力文字列の完全一致で正解を引く。知らない入力には答えない。"""

    def __init__(self, examples):
        self._answers = defaultdict(dict)
        duplicates = 0
        for example in examples:
            known = self._answers[example.task].get(example.input)
            if known is not None:
                if known != example.target:
                    raise CollisionError(
                        f"{example.task} input of {example.id} turn {example.turn} has two targets: "
                        f"{known!r} and {example.target!r}")
                duplicates += 1
                continue
            self._answers[example.task][example.input] = example.target
        logger.info("Oracle holds %d answers (%d duplicate inputs merged)",
                    sum(len(a) for a in self._answers.values()), duplicates)

    @property
    def tasks(self):
        return frozenset(TASKS)

    def generate(self, task, text):
        try:
            return self._answers[task][text]
        except KeyError:
            raise UnknownInputError(f"oracle has no {task} answer for input {text!r}") from None


def oracle_from(dataset, config=None) -> OracleModel:
    """
    対話リスト（または訓練例のリスト）からオラクルを作る。

    Args:
        dataset: list[Dialogue] または list[TrainingExample]
        config (RepresentationConfig): 対話から訓練例を作るときの表現方式
    """
    items = list(dataset)
    if items and not isinstance(items[0], TrainingExample):
        items = make_examples(items, config)
    return OracleModel(items)
