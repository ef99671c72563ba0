# -*- coding: utf-8 -*-
"""
応答ペア（原文と訳文）の類似度を測るスコアラ。
"""
import logging
from collections import Counter

import numpy as np

from src.errors import ProtocolError
from src.model.wire import JsonLinesClient

logger = logging.getLogger(__name__)


def char_trigrams(text: str) -> Counter:
    """小文字化した文字3-gramの出現回数。3文字未満の文字列はそれ自体を1つの n-gram とする。"""
    text = text.lower()
    if len(text) < 3:
        return Counter([text]) if text else Counter()
    return Counter(text[i:i + 3] for i in range(len(text) - 2))


class TrigramScorer:
    """
    文字3-gramの出現回数ベクトルのコサイン類似度。
    外部の埋め込みモデルが無いときの代替で、言語をまたぐ類似度の近似にはならない。
    """

    label = "trigram"

    def score(self, a: str, b: str) -> float:
        grams_a = char_trigrams(a)
        grams_b = char_trigrams(b)
        vocab = sorted(set(grams_a) | set(grams_b))
        if not vocab:
            return 0.0
        va = np.array([grams_a[g] for g in vocab], dtype=np.float64)
        vb = np.array([grams_b[g] for g in vocab], dtype=np.float64)
        norm = np.sqrt(np.dot(va, va) * np.dot(vb, vb))
        if norm == 0:
            return 0.0
        return float(np.clip(np.dot(va, vb) / norm, -1.0, 1.0))


class ExternalScorer:
    """
    ワイヤプロトコルの類似度バックエンド。リクエスト {"id","a","b"}、応答 {"id","score"}。
    """

    label = "external"

    def __init__(self, client: JsonLinesClient):
        self.client = client

    def score(self, a: str, b: str) -> float:
        message = self.client.request({"a": a, "b": b})
        try:
            value = float(message["score"])
        except (KeyError, TypeError, ValueError) as e:
            raise ProtocolError(f"response {message.get('id')} has no numeric score") from e
        if not -1.0 <= value <= 1.0:
            raise ProtocolError(f"score {value} is outside [-1, 1]")
        return value

    def close(self):
        self.client.close()


def load_scorer(uri=None, timeout=30.0, retries=2):
    """URIがあれば外部スコアラ、無ければ文字3-gramのスコアラ"""
    if not uri:
        return TrigramScorer()
    logger.info("Using external scorer %s", uri)
    return ExternalScorer(JsonLinesClient(uri, timeout=timeout, retries=retries))
