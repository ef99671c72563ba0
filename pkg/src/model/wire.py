# -*- coding: utf-8 -*-
"""
改行区切りJSONのワイヤプロトコルのクライアント。

エンドポイントは URI で指定する:
    cmd://<コマンドライン>   子プロセスを起動し、標準入出力で話す
    tcp://<host>:<port>      ソケットで話す

リクエストには必ず "id" を付け、応答は同じ "id" で対応付ける（順不同で返ってよい）。
タイムアウト時は同じ id で再送するので、バックエンドは id について冪等であること。
"""
import itertools
import json
import logging
import shlex
import socket
import subprocess
import threading
from concurrent.futures import Future
from concurrent.futures import TimeoutError as FutureTimeout
from urllib.parse import urlsplit

from src.errors import BackendUnavailableError, ProtocolError

logger = logging.getLogger(__name__)

CMD_SCHEME = "cmd://"
TCP_SCHEME = "tcp://"


class JsonLinesClient:
    """
    複数スレッドから同時に使えるワイヤプロトコルのクライアント。
    応答は読み取りスレッドが id ごとの Future に振り分ける。
    """

    def __init__(self, uri, timeout=30.0, retries=2):
        if not uri or not (uri.startswith(CMD_SCHEME) or uri.startswith(TCP_SCHEME)):
            raise ValueError(f"backend URI must start with {CMD_SCHEME} or {TCP_SCHEME}: {uri!r}")
        self.uri = uri
        self.timeout = timeout
        self.retries = retries
        self._lock = threading.Lock()
        # _pending は _lock、ストリームへの書き込みは _write_lock で守る。書き込み中は _lock を持たない。
        self._write_lock = threading.Lock()
        self._ids = itertools.count(1)
        self._pending = {}
        self._failure = None
        self._process = None
        self._socket = None
        self._writer = None
        self._reader = None

    # ------------------------------------------------------------------ 接続

    def _connect(self):
        try:
            if self.uri.startswith(CMD_SCHEME):
                argv = shlex.split(self.uri[len(CMD_SCHEME):])
                if not argv:
                    raise ValueError("empty command")
                self._process = subprocess.Popen(argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE)
                self._writer = self._process.stdin
                lines = self._process.stdout
            else:
                parts = urlsplit(self.uri)
                if not parts.hostname or not parts.port:
                    raise ValueError("tcp URI needs host and port")
                self._socket = socket.create_connection((parts.hostname, parts.port), timeout=self.timeout)
                self._socket.settimeout(None)
                stream = self._socket.makefile("rwb")
                self._writer = stream
                lines = stream
        except (OSError, ValueError) as e:
            raise BackendUnavailableError(f"cannot start backend {self.uri}: {e}") from e
        self._reader = threading.Thread(target=self._read_loop, args=(lines,), daemon=True)
        self._reader.start()
        logger.info("Connected to backend %s", self.uri)

    def _read_loop(self, lines):
        try:
            for raw in lines:
                line = raw.decode("utf-8", errors="replace").strip()
                if not line:
                    continue
                try:
                    message = json.loads(line)
                    request_id = str(message["id"])
                except (ValueError, KeyError, TypeError):
                    self._fail_all(ProtocolError(f"malformed response line from {self.uri}: {line!r}"))
                    return
                with self._lock:
                    future = self._pending.pop(request_id, None)
                if future is None:
                    logger.debug("Ignoring response for unknown or settled id %s", request_id)
                    continue
                if not future.done():
                    future.set_result(message)
        except (OSError, ValueError) as e:
            logger.debug("Reader for %s stopped: %s", self.uri, e)
        self._fail_all(BackendUnavailableError(f"backend {self.uri} closed the connection"))

    def _fail_all(self, error):
        with self._lock:
            if self._failure is None:
                self._failure = error
            pending = list(self._pending.values())
            self._pending.clear()
        for future in pending:
            if not future.done():
                future.set_exception(error)

    # ------------------------------------------------------------------ 送受信

    def request(self, payload):
        """
        1件のリクエストを送り、同じ id の応答(dict)を返す。

        Raises:
            BackendUnavailableError: 接続できない、切断された、または再送しても応答が無い
            ProtocolError: 応答行がJSONとして読めない、または "error" を返された
        """
        with self._lock:
            if self._reader is None and self._failure is None:
                self._connect()
            request_id = str(next(self._ids))
        line = (json.dumps(dict(payload, id=request_id), ensure_ascii=False) + "\n").encode("utf-8")

        attempts = self.retries + 1
        for attempt in range(1, attempts + 1):
            future = Future()
            with self._lock:
                if self._failure is not None:
                    raise self._failure
                self._pending[request_id] = future
                writer = self._writer
            try:
                with self._write_lock:
                    writer.write(line)
                    writer.flush()
            except (AttributeError, OSError, ValueError) as e:
                with self._lock:
                    self._pending.pop(request_id, None)
                raise BackendUnavailableError(f"cannot write to backend {self.uri}: {e}") from e
            try:
                message = future.result(timeout=self.timeout)
            except FutureTimeout:
                with self._lock:
                    self._pending.pop(request_id, None)
                logger.warning("Request %s to %s timed out (attempt %d/%d)", request_id, self.uri, attempt, attempts)
                continue
            if "error" in message:
                raise ProtocolError(f"backend {self.uri} returned an error for {request_id}: {message['error']}")
            return message
        raise BackendUnavailableError(f"no response from {self.uri} for request {request_id} after {attempts} attempts")

    def close(self):
        with self._lock:
            writer, process, sock = self._writer, self._process, self._socket
            self._writer = self._process = self._socket = None
        try:
            if writer is not None:
                writer.close()
        except OSError:
            pass
        if process is not None:
            try:
                process.wait(timeout=self.timeout)
            except subprocess.TimeoutExpired:
                process.kill()
                process.wait()
        if sock is not None:
            sock.close()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()
