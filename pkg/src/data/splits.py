# -*- coding: utf-8 -*-
"""few-shot 用の対話サンプリングとデータセットの混合"""
import random
from decimal import ROUND_HALF_UP, Decimal

from src.errors import SchemaError


def split_size(total: int, fraction: float) -> int:
    """round(fraction × total) を四捨五入(half-up)で求める"""
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    return int((Decimal(str(fraction)) * total).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def few_shot_split(dialogues, fraction: float, seed: int):
    """
    対話単位で非復元抽出する。

    Returns:
        tuple: (選ばれた対話をコーパス順に並べたリスト, マニフェスト {"ids", "seed", "fraction"})
    """
    ids = [d.id for d in dialogues]
    chosen = set(random.Random(seed).sample(ids, split_size(len(ids), fraction)))
    subset = [d for d in dialogues if d.id in chosen]
    manifest = {"ids": [d.id for d in subset], "seed": seed, "fraction": fraction}
    return subset, manifest


def split_from_manifest(dialogues, manifest):
    """マニフェストの分割を再現し、(選ばれた対話, 残りの対話) を返す"""
    wanted = list(manifest.get("ids", []))
    known = {d.id for d in dialogues}
    missing = [i for i in wanted if i not in known]
    if missing:
        raise SchemaError(f"manifest lists unknown dialogue {missing[0]!r}")
    wanted = set(wanted)
    subset = [d for d in dialogues if d.id in wanted]
    heldout = [d for d in dialogues if d.id not in wanted]
    return subset, heldout


def mix(*datasets, seed: int = 0):
    """データセットを連結し、シード固定でシャッフルする"""
    combined = [item for dataset in datasets for item in dataset]
    random.Random(seed).shuffle(combined)
    return combined
