# -*- coding: utf-8 -*-
"""テストから直接使う小さな補助関数"""
import os
import shlex
import sys

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
STUBS = os.path.join(os.path.dirname(__file__), "stubs")


def fixture_path(name):
    return os.path.join(FIXTURES, name)


def stub_uri(name, *args):
    """tests/stubs のスタブを子プロセスとして起動する cmd:// URI"""
    argv = [sys.executable, os.path.join(STUBS, name), *args]
    return "cmd://" + " ".join(shlex.quote(a) for a in argv)
