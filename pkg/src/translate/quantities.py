# -*- coding: utf-8 -*-
"""
日付・時刻・数値・通貨などの量的エンティティを規則で訳す辞書。

ファイル形式:
    {"rules": [
        {"class": "currency", "pattern": "^(\\d+) HKD$", "template": "{1} 港币"},
        {"class": "number", "pattern": "^\\d+$", "template": "{0}"},
        {"class": "weekday", "table": {"Monday": "星期一"}}
    ]}
template の {0} は一致全体、{1} 以降はグループ。規則は上から順に試す。
"""
import re
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from src.errors import SchemaError
from src.utils.io import read_json


@dataclass(frozen=True)
class QuantityRule:
    name: str
    pattern: Optional[re.Pattern] = None
    template: Optional[str] = None
    table: Optional[Dict[str, str]] = None

    def apply(self, value: str) -> Optional[str]:
        if self.table is not None:
            return self.table.get(value)
        match = self.pattern.fullmatch(value)
        if match is None:
            return None
        return self.template.format(match.group(0), *match.groups())


class QuantityDictionary:

    def __init__(self, rules):
        self.rules = tuple(rules)

    @classmethod
    def from_dict(cls, raw) -> "QuantityDictionary":
        rules = []
        for index, item in enumerate(raw.get("rules", [])):
            where = {"rule": index}
            if not isinstance(item, dict) or not isinstance(item.get("class"), str):
                raise SchemaError("quantity rule needs a class name", where)
            if "table" in item:
                if not isinstance(item["table"], dict):
                    raise SchemaError("table must map strings to strings", where)
                rules.append(QuantityRule(item["class"], table=dict(item["table"])))
                continue
            try:
                pattern = re.compile(item["pattern"])
            except (KeyError, TypeError, re.error) as e:
                raise SchemaError(f"bad pattern: {e}", where) from e
            if not isinstance(item.get("template"), str):
                raise SchemaError("pattern rules need a template", where)
            rules.append(QuantityRule(item["class"], pattern=pattern, template=item["template"]))
        return cls(rules)

    @classmethod
    def load(cls, path) -> "QuantityDictionary":
        return cls.from_dict(read_json(path))

    @classmethod
    def empty(cls) -> "QuantityDictionary":
        return cls(())

    def lookup(self, value: str) -> Optional[Tuple[str, str]]:
        """(規則クラス名, 訳語) を返す。どの規則にも合わなければ None。"""
        for rule in self.rules:
            surface = rule.apply(value)
            if surface is not None:
                return rule.name, surface
        return None


def translate_quantities(unit, qdict: QuantityDictionary):
    """
    発話中のエンティティのうち、規則に合うものだけ訳語を返す。

    Returns:
        dict: エンティティの位置(unit.entities の添字) → 訳語
    """
    mapped = {}
    for index, entity in enumerate(unit.entities):
        hit = qdict.lookup(entity.value)
        if hit is not None:
            mapped[index] = hit[1]
    return mapped
