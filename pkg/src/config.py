# -*- coding: utf-8 -*-
"""
設定ファイル(config.json)の読み込み。
ファイルにあるキーだけを組み込みの既定値に上書きする。
"""
import copy
import json
import logging
import os

from src.constants import DEFAULT_APPEND_SLOTS, DEFAULT_FILTER_THRESHOLD, DEFAULT_SENTINEL_FORMAT

logger = logging.getLogger(__name__)

DEFAULT_CONFIG = {
    "representation": {
        "generate_full_state": False,
        "natural_agent_response": False,
        "agent_turns_in_history": 2,
        "prev_user_utt_as_state": False,
        "include_state": True,
    },
    "agent": {
        "append_slots": list(DEFAULT_APPEND_SLOTS),
        "rg_uses_gold_acts": False,
    },
    "pipeline": {
        "threshold": DEFAULT_FILTER_THRESHOLD,
        "seed": 0,
        "sentinel_format": DEFAULT_SENTINEL_FORMAT,
        "workers": 4,
    },
    "backends": {
        "timeout_seconds": 30.0,
        "retries": 2,
        "model_uri": None,
        "mt_uri": None,
        "scorer_uri": None,
    },
    "logging": {
        "level": "INFO",
        "format": "%(asctime)s %(levelname)s %(name)s: %(message)s",
    },
}

# フラグが無いときに参照する環境変数
ENV_OVERRIDES = {
    "model_uri": "TODKIT_MODEL_URI",
    "mt_uri": "TODKIT_MT_URI",
    "scorer_uri": "TODKIT_SCORER_URI",
}


def _deep_merge(base, override):
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(config_path="config.json"):
    """
    設定ファイルを読み込み、既定値とマージした辞書を返す。

    Args:
        config_path (str): 設定ファイルのパス。存在しなければ既定値だけを使う。

    Returns:
        dict: マージ済みの設定
    """
    if not config_path or not os.path.exists(config_path):
        logger.warning("%s not found. Using default settings.", config_path)
        return copy.deepcopy(DEFAULT_CONFIG)
    with open(config_path, "r", encoding="utf-8") as f:
        loaded = json.load(f)
    logger.info("Configuration loaded from %s", config_path)
    return _deep_merge(DEFAULT_CONFIG, loaded)


def backend_uri(config, key, flag_value=None):
    """フラグ → 環境変数 → 設定ファイルの順でバックエンドURIを決める"""
    if flag_value:
        return flag_value
    env_value = os.environ.get(ENV_OVERRIDES[key])
    if env_value:
        return env_value
    return config.get("backends", {}).get(key)


def configure_logging(config):
    section = config.get("logging", {})
    logging.basicConfig(
        level=getattr(logging, str(section.get("level", "INFO")).upper(), logging.INFO),
        format=section.get("format", DEFAULT_CONFIG["logging"]["format"]),
    )
