"""filtering パッケージの初期化ファイル"""
from src.filtering.filter import FilterReport, ScoredPair, filter_pairs
from src.filtering.scorer import ExternalScorer, TrigramScorer, load_scorer
