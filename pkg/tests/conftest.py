# -*- coding: utf-8 -*-
"""テスト共通のフィクスチャ（付属データの読み込み）"""
import pytest

from src.data.dialogue import load_dialogues
from src.kb.store import load_kb
from src.model.rule import load_ontology
from tests.helpers import fixture_path


@pytest.fixture
def sample_path():
    return fixture_path("sample_dialogue.json")


@pytest.fixture
def sample(sample_path):
    return load_dialogues(sample_path)


@pytest.fixture
def kb_path():
    return fixture_path("kb_en.json")


@pytest.fixture
def kb(kb_path):
    return load_kb(kb_path)


@pytest.fixture
def ontology_path():
    return fixture_path("ontology_en.json")


@pytest.fixture
def required_slots(ontology_path):
    return load_ontology(ontology_path)
