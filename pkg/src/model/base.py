# -*- coding: utf-8 -*-
"""テキスト→テキストのサブタスクモデルが満たすべきインターフェース"""
from typing import FrozenSet, Protocol, runtime_checkable


@runtime_checkable
class TextModel(Protocol):
    """
    4つのサブタスク(DST / API / ACTS / RG)に答えるモデル。

    generate は入力文字列をそのまま受け取り、モデルの出力文字列を返す。
    出力の解釈と検証は呼び出し側(エージェントループ)の責任。
    """

    @property
    def tasks(self) -> FrozenSet[str]:
        """答えられるタスクタグの集合"""
        ...

    def generate(self, task: str, text: str) -> str:
        ...
