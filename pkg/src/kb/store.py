# -*- coding: utf-8 -*-
"""
ドメインごとのエンティティ表を読み込み、信念状態の制約で検索する知識ベース。

検索結果は条件に合うレコードのうち順位1位のものと、その件数(available_options)。
順位は rating の数値の降順、同点なら name のコードポイント順。
"""
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional, Tuple, Union

from src.constants import Constants
from src.errors import DuplicateNameError, SchemaError, TypeMismatchError, UnknownSlotError
from src.formal.types import NO_RESULT, DomainIntent, KnowledgeBlock, Relation, SlotConstraint, _check_value, _NoResult
from src.utils.io import read_json

logger = logging.getLogger(__name__)

_NUMBER = re.compile(r"-?\d+(?:\.\d+)?")
AVAILABLE_OPTIONS = "available_options"


def parse_number(value: str) -> Optional[float]:
    """文字列中の最初の10進数を取り出す（"793 HKD" → 793.0）。無ければ None。"""
    match = _NUMBER.search(value)
    return float(match.group()) if match else None


def normalize(value: str) -> str:
    """大文字小文字を畳み込み、連続する空白を1つにまとめる"""
    return " ".join(value.casefold().split())


@dataclass(frozen=True)
class KBRecord:
    domain: str
    attrs: Mapping[str, Tuple[str, ...]]
    numeric: Mapping[str, Optional[float]] = field(default_factory=dict, compare=False)

    @property
    def name(self) -> str:
        return self.attrs["name"][0]

    def number(self, slot: str) -> Optional[float]:
        return self.numeric.get(slot)


@dataclass(frozen=True)
class KBResult:
    record: KBRecord
    available_options: int


QueryResult = Union[KBResult, _NoResult]


def _rank_key(record: KBRecord):
    rating = record.number("rating")
    if rating is None:
        return (1, 0.0, record.name)
    return (0, -rating, record.name)


def _make_record(domain, index, raw) -> KBRecord:
    where = {"domain": domain, "record": index}
    if not isinstance(raw, dict):
        raise SchemaError("record must be an object", where)
    attrs = {}
    for slot, value in raw.items():
        values = [value] if isinstance(value, str) else value
        if not isinstance(values, list) or not values or not all(isinstance(v, str) and v.strip() for v in values):
            raise SchemaError(f"slot {slot!r} must be a non-empty string or list of strings", where)
        attrs[slot] = tuple(v.strip() for v in values)
        for v in attrs[slot]:
            try:
                _check_value(v)
            except ValueError as e:
                raise SchemaError(f"slot {slot!r}: {e}", where) from e
    if len(attrs.get("name", ())) != 1:
        raise SchemaError("every record needs exactly one name", where)
    numeric = {slot: parse_number(values[0]) for slot, values in attrs.items()}
    return KBRecord(domain, attrs, numeric)


class KBStore:
    """読み込み後は変更しない知識ベース"""

    def __init__(self, records: Mapping[str, Iterable[KBRecord]]):
        self._records: Dict[str, Tuple[KBRecord, ...]] = {}
        self._schema: Dict[str, frozenset] = {}
        for domain, domain_records in records.items():
            domain_records = tuple(domain_records)
            names = Counter(r.name for r in domain_records)
            duplicated = sorted(n for n, count in names.items() if count > 1)
            if duplicated:
                raise DuplicateNameError(f"duplicate record name {duplicated[0]!r}", {"domain": domain})
            self._records[domain] = domain_records
            self._schema[domain] = frozenset(slot for r in domain_records for slot in r.attrs)

    @classmethod
    def from_dict(cls, data) -> "KBStore":
        if not isinstance(data, dict):
            raise SchemaError("KB file must map domain names to record lists")
        records = {}
        for domain, raw_records in data.items():
            if not isinstance(raw_records, list):
                raise SchemaError("domain entry must be a list of records", {"domain": domain})
            records[domain] = [_make_record(domain, i, raw) for i, raw in enumerate(raw_records)]
        return cls(records)

    @property
    def domains(self) -> Tuple[str, ...]:
        return tuple(self._records)

    def records(self, domain: str) -> Tuple[KBRecord, ...]:
        return self._records.get(domain, ())

    def schema(self, domain: str) -> frozenset:
        return self._schema.get(domain, frozenset())

    def __len__(self):
        return sum(len(r) for r in self._records.values())

    def find(self, domain: str, name: str) -> Optional[KBRecord]:
        for record in self.records(domain):
            if record.name == name:
                return record
        return None

    def matching(self, frame: DomainIntent, constraints) -> Tuple[KBRecord, ...]:
        """すべての制約を満たすレコードを順位順に返す"""
        constraints = _as_constraints(constraints)
        schema = self.schema(frame.domain)
        for constraint in constraints:
            if constraint.slot not in schema:
                raise UnknownSlotError(f"slot {constraint.slot!r} is not in the {frame.domain} schema")
        active = [c for c in constraints if not _is_dont_care(c)]
        matched = [r for r in self.records(frame.domain) if all(_satisfies(r, c) for c in active)]
        return tuple(sorted(matched, key=_rank_key))

    def query(self, frame: DomainIntent, constraints) -> QueryResult:
        """
        信念状態の1フレーム分の制約で検索する。

        Args:
            frame (DomainIntent): 検索対象の (domain, intent)
            constraints: SlotConstraint の集まり（またはスロット→制約の辞書）

        Returns:
            KBResult または NO_RESULT
        """
        if frame.domain not in self._records:
            logger.warning("Unknown KB domain %r; returning NoResult", frame.domain)
            return NO_RESULT
        matched = self.matching(frame, constraints)
        if not matched:
            return NO_RESULT
        return KBResult(matched[0], len(matched))


def _as_constraints(constraints) -> Tuple[SlotConstraint, ...]:
    if constraints is None:
        return ()
    if isinstance(constraints, Mapping):
        return tuple(constraints.values())
    return tuple(constraints)


def _is_dont_care(constraint: SlotConstraint) -> bool:
    return any(normalize(v) == Constants.DONT_CARE for v in constraint.values)


def _numeric_target(constraint: SlotConstraint) -> float:
    target = parse_number(constraint.values[0])
    if target is None:
        raise TypeMismatchError(f"{constraint.relation.value} needs a number, got {constraint.values[0]!r}")
    return target


def _satisfies(record: KBRecord, constraint: SlotConstraint) -> bool:
    values = record.attrs.get(constraint.slot)
    if values is None:
        return False
    relation = constraint.relation
    if relation.is_numeric:
        target = _numeric_target(constraint)
        actual = record.number(constraint.slot)
        if actual is None or math.isnan(actual):
            raise TypeMismatchError(
                f"slot {constraint.slot!r} of {record.name!r} is not numeric ({values[0]!r})")
        return actual >= target if relation is Relation.AT_LEAST else actual < target
    have = {normalize(v) for v in values}
    wanted = {normalize(v) for v in constraint.values}
    if relation is Relation.NOT:
        return not (have & wanted)
    return bool(have & wanted)


def load_kb(path) -> KBStore:
    """
    知識ベースのJSONファイルを読み込む。
    形式は {ドメイン名: [レコード, ...]}、レコードは {スロット: 文字列 または 文字列のリスト}。
    """
    store = KBStore.from_dict(read_json(path))
    counts = ", ".join(f"{d}={len(store.records(d))}" for d in store.domains)
    logger.info("Loaded %d KB records from %s (%s)", len(store), path, counts)
    return store


def to_knowledge_block(result, frame: DomainIntent):
    """
    検索結果を知識ブロックにする。レコードの属性順を保ち、available_options を最後に付ける。
    結果なしは NO_RESULT、呼び出しなし(None)は None のまま返す。
    """
    if result is None or result is NO_RESULT:
        return result
    pairs = dict(result.record.attrs)
    pairs[AVAILABLE_OPTIONS] = (str(result.available_options),)
    return KnowledgeBlock(frame, pairs)
