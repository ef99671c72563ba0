# -*- coding: utf-8 -*-
"""
プロジェクト全体で使う例外クラス。
すべて ToDKitError を継承しているため、CLI ではこれを捕まえて終了コードに変換する。
"""


class ToDKitError(Exception):
    """このツールキットが送出する例外の基底クラス"""


# --- 形式表現 ---

class FormalSyntaxError(ToDKitError, ValueError):
    """形式表現の文字列が文法に合わないときの例外。offset は UTF-8 のバイト位置。"""

    def __init__(self, message, text="", offset=0):
        self.text = text
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")


class UnknownRelationError(FormalSyntaxError):
    """未知の関係演算子トークン"""


class DuplicateSlotError(ToDKitError, ValueError):
    """1つのフレーム内で同じスロットが2回現れた"""


# --- ファイル・スキーマ ---

class SchemaError(ToDKitError, ValueError):
    """入力ファイルがスキーマに合わない。coordinates は問題箇所の位置情報。"""

    def __init__(self, message, coordinates=None):
        self.coordinates = coordinates or {}
        where = ", ".join(f"{k}={v}" for k, v in self.coordinates.items())
        super().__init__(f"{message} [{where}]" if where else message)


class StateChainError(SchemaError):
    """正解の状態列が デルタ の積み上げと一致しない"""

    def __init__(self, message, dialogue_id, turn):
        self.dialogue_id = dialogue_id
        self.turn = turn
        super().__init__(message, {"dialogue": dialogue_id, "turn": turn})


# --- 知識ベース ---

class DuplicateNameError(SchemaError):
    """同じドメインに同名のレコードがある"""


class TypeMismatchError(ToDKitError, ValueError):
    """数値比較の関係が数値でないスロットに使われた"""


class UnknownSlotError(ToDKitError, KeyError):
    """ドメインのスキーマに存在しないスロットで検索しようとした"""


# --- モデルバックエンド ---

class ModelOutputParseError(ToDKitError):
    """モデルの出力が期待する形式で解釈できない"""

    def __init__(self, task, text, offset=0, reason=""):
        self.task = task
        self.text = text
        self.offset = offset
        detail = f": {reason}" if reason else ""
        super().__init__(f"{task} output could not be parsed at byte {offset}{detail}: {text!r}")


class BackendUnavailableError(ToDKitError):
    """バックエンドに接続できない、または応答がタイムアウトした"""


class ProtocolError(ToDKitError):
    """ワイヤプロトコルに違反する応答を受け取った"""


class UnknownInputError(ToDKitError, KeyError):
    """オラクルが知らない入力を問い合わせられた"""


class CollisionError(ToDKitError, ValueError):
    """同じ入力に異なる正解が割り当てられている"""


# --- 言語横断パイプライン ---

class UnmappedTokenError(ToDKitError, KeyError):
    """オントロジー対応表にない形式トークン"""

    def __init__(self, token, category):
        self.token = token
        self.category = category
        super().__init__(f"no mapping for {category} token {token!r}")


class SentinelLostError(ToDKitError):
    """保護用の番兵トークンが翻訳で失われた"""


class InconsistentAnnotationError(ToDKitError, ValueError):
    """発話中のスパンと注釈の値が一致しない"""


class StageOrderError(ToDKitError, ValueError):
    """パイプラインの段階指定が積み上げ順になっていない"""


class PipelineError(ToDKitError):
    """パイプライン段階で発生したエラー。対話IDとターンを添えて送り直す。"""

    def __init__(self, stage, dialogue_id, turn, cause):
        self.stage = stage
        self.dialogue_id = dialogue_id
        self.turn = turn
        self.cause = cause
        super().__init__(f"[{stage}] dialogue={dialogue_id} turn={turn}: {cause}")


# --- 評価 ---

class AlignmentError(ToDKitError, ValueError):
    """予測と正解の対話・ターンが対応しない"""
