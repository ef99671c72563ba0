# -*- coding: utf-8 -*-
"""
翻訳バックエンド。

どれも translate(text, src_lang, tgt_lang, protected=()) -> MTResult を持つ。
protected に挙げたトークンは訳さずにそのまま出力すること。
"""
import logging
from typing import Protocol

from src.errors import ProtocolError
from src.model.wire import JsonLinesClient
from src.translate.types import MTResult
from src.utils.io import read_json

logger = logging.getLogger(__name__)


class Translator(Protocol):
    def translate(self, text: str, src_lang: str, tgt_lang: str, protected=()) -> MTResult:
        ...


class IdentityTranslator:
    """原文をそのまま返す（トークンは1対1で対応）"""

    def translate(self, text, src_lang, tgt_lang, protected=()):
        n = len(text.split())
        return MTResult(text, tuple((i, i) for i in range(n)))


class GlossaryTranslator:
    """
    空白区切りトークンに対する句の対訳表で訳す。机上で動かすための翻訳器。
    最長一致で句を置き換え、表に無いトークンはそのまま写す。アライメントも出力する。
    """

    def __init__(self, phrases):
        self.phrases = {tuple(src.split()): tuple(tgt.split()) for src, tgt in phrases.items()}
        self.max_len = max((len(src) for src in self.phrases), default=1)

    @classmethod
    def load(cls, path) -> "GlossaryTranslator":
        raw = read_json(path)
        return cls(raw.get("phrases", raw))

    def translate(self, text, src_lang, tgt_lang, protected=()):
        tokens = text.split()
        protected = set(protected)
        output = []
        alignment = []
        i = 0
        while i < len(tokens):
            matched = None
            if tokens[i] not in protected:
                for n in range(min(self.max_len, len(tokens) - i), 0, -1):
                    target = self.phrases.get(tuple(tokens[i:i + n]))
                    if target is not None:
                        matched = (n, target)
                        break
            if matched is None:
                alignment.append((i, len(output)))
                output.append(tokens[i])
                i += 1
                continue
            n, target = matched
            for j, token in enumerate(target):
                for k in range(n):
                    alignment.append((i + k, len(output) + j))
            output.extend(target)
            i += n
        return MTResult(" ".join(output), tuple(alignment))


class ExternalTranslator:
    """
    ワイヤプロトコルの翻訳バックエンド。
    リクエスト {"id","src_lang","tgt_lang","text","protected"}、応答 {"id","translation","alignment"}。
    """

    def __init__(self, client: JsonLinesClient):
        self.client = client

    def translate(self, text, src_lang, tgt_lang, protected=()):
        message = self.client.request({
            "src_lang": src_lang,
            "tgt_lang": tgt_lang,
            "text": text,
            "protected": list(protected),
        })
        translation = message.get("translation")
        if not isinstance(translation, str):
            raise ProtocolError(f"response {message.get('id')} has no translation string")
        alignment = message.get("alignment")
        if alignment is not None:
            try:
                alignment = tuple((int(i), int(j)) for i, j in alignment)
            except (TypeError, ValueError) as e:
                raise ProtocolError(f"response {message.get('id')} has a malformed alignment") from e
        result = MTResult(translation, alignment)
        if not result.alignment_in_range(text):
            raise ProtocolError(f"response {message.get('id')} aligns tokens out of range")
        return result

    def close(self):
        self.client.close()


def load_translator(spec, timeout=30.0, retries=2):
    """
    --mt 指定を解決する: "identity" / "glossary:<path>" / cmd://… / tcp://…
    """
    if spec in (None, "", "identity"):
        return IdentityTranslator()
    if spec.startswith("glossary:"):
        return GlossaryTranslator.load(spec[len("glossary:"):])
    logger.info("Using external translator %s", spec)
    return ExternalTranslator(JsonLinesClient(spec, timeout=timeout, retries=retries))
