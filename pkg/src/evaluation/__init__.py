"""evaluation パッケージの初期化ファイル"""
from src.evaluation.metrics import MetricsReport, Prediction, api_acc, bleu, evaluate, jga, ser, tsr_dsr
from src.evaluation.report import format_summary, load_predictions, predictions_from_outputs, write_report
