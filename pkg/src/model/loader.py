# -*- coding: utf-8 -*-
"""--model 指定からモデルを作る"""
import logging

from src.model.external import external_model
from src.model.oracle import oracle_from
from src.model.rule import rule_model

logger = logging.getLogger(__name__)

EXTERNAL_PREFIX = "external:"


def load_model(spec, dialogues=None, store=None, ontology=None, config=None, timeout=30.0, retries=2):
    """
    モデル指定文字列を解決する。

    Args:
        spec (str): "oracle" / "rule" / "external:<URI>"
        dialogues: オラクルの元になる正解対話
        store (KBStore): ルールモデルが使う知識ベース
        ontology: ルールモデルの必須スロット（ファイルパスまたは辞書）
        config (RepresentationConfig): オラクルの入力を作る表現方式

    Returns:
        TextModel
    """
    if spec == "oracle":
        if dialogues is None:
            raise ValueError("the oracle model needs gold dialogues")
        return oracle_from(dialogues, config)
    if spec == "rule":
        if store is None or ontology is None:
            raise ValueError("the rule model needs a KB and an ontology")
        return rule_model(store, ontology)
    if spec.startswith(EXTERNAL_PREFIX):
        uri = spec[len(EXTERNAL_PREFIX):]
        logger.info("Using external model backend %s", uri)
        return external_model(uri, timeout=timeout, retries=retries)
    raise ValueError(f"unknown model {spec!r}; use oracle, rule or external:<URI>")
