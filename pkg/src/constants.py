
class Constants:
    NULL = "null"  # 空の状態・知識ブロック・スロット削除を表す予約語
    NO_RESULT = "NoResult"  # API呼び出しで一件もヒットしなかったことを表す
    YES = "yes"
    NO = "no"
    DONT_CARE = "don't care"  # どの値でも構わない、という制約値
    CLEAR = "clear"  # デルタ内でフレームの制約を全消去する目印


# --- 形式表現の区切り ---

# 複数値（one_of や知識ブロックの location など）を連結する区切り文字
MULTI_VALUE_SEPARATOR = " | "

# --- サブタスク ---

TASK_DST = "DST"
TASK_API = "API"
TASK_ACTS = "ACTS"
TASK_RG = "RG"
TASKS = (TASK_DST, TASK_API, TASK_ACTS, TASK_RG)

# 訓練例の出力順。ファイル上もこの順で並ぶ
TASK_ORDER = {task: index for index, task in enumerate(TASKS)}

# --- 翻訳パイプライン ---

# 段階は必ずこの順に積み上げる（途中を飛ばすことはできない）
STAGE_LADDER = ("canonicalize", "translate", "align", "filter")

DEFAULT_FILTER_THRESHOLD = 0.8
DEFAULT_SENTINEL_FORMAT = "__E{k}__"

# 評価時に知識ブロックから自動で付け足すスロット
DEFAULT_APPEND_SLOTS = ("max_temp", "min_temp", "time", "price_range")

# 対話ファイルのスキーマバージョン
DIALOGUE_SCHEMA_VERSION = 1

# 実行マニフェストに記録するツールのバージョン（pyproject.toml と揃える）
TOOL_VERSION = "0.1.0"
