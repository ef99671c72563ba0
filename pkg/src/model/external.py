# -*- coding: utf-8 -*-
"""外部プロセス・ソケットのモデルバックエンド"""
from src.constants import TASKS
from src.errors import ProtocolError
from src.model.wire import JsonLinesClient


class ExternalModel:
    """
    リクエスト {"id","task","input"} を送り、応答 {"id","output"} の output を返す。
    """

    def __init__(self, client: JsonLinesClient, tasks=TASKS):
        self.client = client
        self._tasks = frozenset(tasks)

    @property
    def tasks(self):
        return self._tasks

    def generate(self, task, text):
        message = self.client.request({"task": task, "input": text})
        output = message.get("output")
        if not isinstance(output, str):
            raise ProtocolError(f"response {message.get('id')} has no output string")
        return output

    def close(self):
        self.client.close()


def external_model(uri, timeout=30.0, retries=2) -> ExternalModel:
    return ExternalModel(JsonLinesClient(uri, timeout=timeout, retries=retries))
