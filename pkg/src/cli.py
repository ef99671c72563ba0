# -*- coding: utf-8 -*-
"""
コマンドラインの入口。

    todkit convert   対話ファイル → 訓練例(JSONL)
    todkit translate 元言語の対話 → 目的言語の対話 + パイプラインレポート
    todkit evaluate  正解の対話と予測ダンプから指標を計算
    todkit run       モデルで対話を再生して予測ダンプを書く
    todkit kb query  知識ベースを1回検索する

終了コード: 0 正常 / 1 使い方の誤り / 2 入力の誤り / 3 バックエンド・内部エラー
"""
import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from typing import Dict, List

from src.agent.agent import DialogueAgent, dump_predictions, prediction_rows
from src.agent.config import ABLATIONS, RepresentationConfig
from src.config import backend_uri, configure_logging, load_config
from src.constants import DEFAULT_FILTER_THRESHOLD, STAGE_LADDER, TOOL_VERSION
from src.data.dialogue import dialogues_to_document, load_dialogues
from src.data.examples import make_examples, write_examples
from src.data.splits import few_shot_split, mix
from src.errors import (
    AlignmentError,
    DuplicateSlotError,
    FormalSyntaxError,
    PipelineError,
    SchemaError,
    StageOrderError,
    ToDKitError,
    TypeMismatchError,
    UnknownSlotError,
    UnmappedTokenError,
)
from src.evaluation.metrics import evaluate
from src.evaluation.report import format_summary, load_predictions, write_report
from src.filtering.scorer import load_scorer
from src.formal.grammar import parse_state, serialize_knowledge
from src.formal.types import DomainIntent
from src.kb.store import load_kb, to_knowledge_block
from src.model.loader import EXTERNAL_PREFIX, load_model
from src.translate.backends import load_translator
from src.translate.ontology import OntologyMapping
from src.translate.pipeline import translate_dataset
from src.translate.quantities import QuantityDictionary
from src.utils.io import sha256_file, write_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_BACKEND = 3

# 入力の誤りとして 2 を返す例外
INPUT_ERRORS = (SchemaError, AlignmentError, StageOrderError, PipelineError, FormalSyntaxError,
                DuplicateSlotError, UnmappedTokenError, UnknownSlotError, TypeMismatchError,
                OSError, json.JSONDecodeError)


class UsageError(Exception):
    """コマンドラインの指定が不正（終了コード 1）"""


class _ArgumentParser(argparse.ArgumentParser):
    """argparse の既定の終了コード 2 を 1 に置き換える"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunManifest:
    """出力ファイルの隣に <file>.manifest.json として置く実行記録"""

    command: str
    flags: Dict[str, object]
    seeds: Dict[str, int] = field(default_factory=dict)
    inputs: Dict[str, str] = field(default_factory=dict)
    tool_version: str = TOOL_VERSION

    @classmethod
    def for_args(cls, command, args, input_paths, seeds=None) -> "RunManifest":
        flags = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "command", "kb_command")}
        inputs = {path: sha256_file(path) for path in input_paths if path and path != "-"}
        return cls(command, flags, dict(seeds or {}), inputs)

    def write_beside(self, path) -> str:
        manifest_path = f"{path}.manifest.json"
        write_json(manifest_path, asdict(self))
        return manifest_path


# ==============================================================================
# サブコマンド
# ==============================================================================

def cmd_convert(args, config) -> int:
    representation = RepresentationConfig.from_dict(config.get("representation"))
    for name in args.ablation or ():
        representation = representation.with_ablation(name)

    datasets = []
    split_manifests = []
    for path in args.input:
        dialogues = load_dialogues(path)
        if args.fraction is not None:
            dialogues, split = few_shot_split(dialogues, args.fraction, args.seed)
            split_manifests.append(dict(split, input=path))
        datasets.append(make_examples(dialogues, representation, progress=args.progress))
    examples = datasets[0] if len(datasets) == 1 else mix(*datasets, seed=args.seed)

    write_examples(args.out, examples)
    if split_manifests:
        write_json(f"{args.out}.split.json", split_manifests)
    RunManifest.for_args("convert", args, args.input, {"seed": args.seed}).write_beside(args.out)
    print(f"Wrote {len(examples)} examples to {args.out}")
    return EXIT_OK


def cmd_translate(args, config) -> int:
    pipeline_config = config.get("pipeline", {})
    backends = config.get("backends", {})
    stages = _parse_stages(args.stages)
    seed = args.seed if args.seed is not None else pipeline_config.get("seed", 0)
    threshold = args.threshold if args.threshold is not None else pipeline_config.get(
        "threshold", DEFAULT_FILTER_THRESHOLD)

    dialogues = load_dialogues(args.input)
    mapping = OntologyMapping.load(args.ontology) if args.ontology else None
    qdict = QuantityDictionary.load(args.qdict) if args.qdict else None
    kb_src = load_kb(args.src_kb) if args.src_kb else None
    kb_tgt = load_kb(args.kb) if args.kb else None
    timeout = backends.get("timeout_seconds", 30.0)
    retries = backends.get("retries", 2)
    translator = load_translator(backend_uri(config, "mt_uri", args.mt), timeout, retries)
    scorer = load_scorer(backend_uri(config, "scorer_uri", args.scorer), timeout, retries)
    try:
        outputs, report = translate_dataset(
            dialogues, translator, mapping, qdict, kb_src, kb_tgt, stages,
            src_lang=args.src_lang, tgt_lang=args.tgt_lang, scorer=scorer, threshold=threshold, seed=seed,
            sentinel_format=pipeline_config.get("sentinel_format", "__E{k}__"),
            workers=args.workers or pipeline_config.get("workers", 1), progress=args.progress)
    finally:
        for backend in (translator, scorer):
            if hasattr(backend, "close"):
                backend.close()

    write_json(args.out, dialogues_to_document(outputs))
    report_path = args.report or f"{args.out}.report.json"
    write_json(report_path, report.to_dict())
    inputs = [args.input, args.ontology, args.qdict, args.src_kb, args.kb]
    manifest = RunManifest.for_args("translate", args, inputs, {"seed": seed})
    manifest.write_beside(args.out)
    manifest.write_beside(report_path)
    print(f"Wrote {len(outputs)} dialogues to {args.out} (report: {report_path})")
    return EXIT_OK


def cmd_evaluate(args, config) -> int:
    gold = load_dialogues(args.gold)
    report = evaluate(load_predictions(args.pred), gold)
    print(format_summary(report))
    if args.report:
        write_report(args.report, report)
        RunManifest.for_args("evaluate", args, [args.gold, args.pred]).write_beside(args.report)
    return EXIT_OK


def _read_script(path) -> List[str]:
    if path == "-":
        lines = sys.stdin.read().splitlines()
    else:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
    return [line.strip() for line in lines if line.strip() and not line.lstrip().startswith("#")]


def cmd_run(args, config) -> int:
    backends = config.get("backends", {})
    representation = RepresentationConfig.from_dict(config.get("representation"))
    store = load_kb(args.kb)
    dialogues = load_dialogues(args.dialogues) if args.dialogues else None

    spec = args.model
    if spec == "external":
        uri = backend_uri(config, "model_uri")
        if not uri:
            raise UsageError("--model external needs a URI (external:<URI> or TODKIT_MODEL_URI)")
        spec = EXTERNAL_PREFIX + uri
    try:
        model = load_model(spec, dialogues=dialogues, store=store, ontology=args.ontology, config=representation,
                           timeout=backends.get("timeout_seconds", 30.0), retries=backends.get("retries", 2))
    except ValueError as e:
        raise UsageError(str(e)) from e
    agent = DialogueAgent.from_config(model, store, config)

    try:
        if args.script:
            outputs = agent.run_script(_read_script(args.script))
            results = [("script", outputs)]
            for row in prediction_rows(results):
                print(f"[{row['turn']}] STATE: {row['state']}")
                print(f"[{row['turn']}] ACTS: {row['acts']}")
                print(f"[{row['turn']}] AGENT: {row['response']}")
        else:
            results = agent.evaluate_corpus(dialogues, workers=args.workers or 1, progress=args.progress)
    finally:
        if hasattr(model, "close"):
            model.close()

    if args.dump:
        dump_predictions(args.dump, results)
        inputs = [args.kb, args.dialogues, args.ontology, args.script]
        RunManifest.for_args("run", args, inputs).write_beside(args.dump)
        print(f"Wrote predictions for {len(results)} dialogues to {args.dump}")
    return EXIT_OK


def _parse_constraints(domain, intent, constraints):
    text = f"( {domain} {intent} )"
    if constraints:
        text += " " + " , ".join(constraints)
    try:
        state = parse_state(text)
    except (FormalSyntaxError, DuplicateSlotError, ValueError) as e:
        raise UsageError(f"malformed constraint: {e}") from e
    frame = DomainIntent(domain, intent)
    return frame, state.frames[frame]


def cmd_kb_query(args, config) -> int:
    store = load_kb(args.kb)
    frame, constraints = _parse_constraints(args.domain, args.intent, args.constraint)
    block = to_knowledge_block(store.query(frame, constraints), frame)
    print(serialize_knowledge(block))
    return EXIT_OK


def _parse_stages(text):
    if text is None:
        return STAGE_LADDER
    if text.strip() in ("", "none"):
        return ()
    return tuple(s.strip() for s in text.split(",") if s.strip())


# ==============================================================================
# 引数
# ==============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="todkit", description="Task-oriented dialogue agent toolkit")
    parser.add_argument("--config", default="config.json", help="path to config.json")
    parser.add_argument("--log-level", default=None, help="override the logging level")
    parser.add_argument("--progress", action="store_true", help="show tqdm progress bars")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="emit training examples from dialogue files")
    p.add_argument("--input", required=True, action="append", help="dialogue file (repeat to mix corpora)")
    p.add_argument("--out", required=True)
    p.add_argument("--ablation", action="append", choices=sorted(ABLATIONS))
    p.add_argument("--fraction", type=float, default=None, help="sample this share of dialogues per input")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("translate", help="build a target-language dataset")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--src-lang", default="en")
    p.add_argument("--tgt-lang", required=True)
    p.add_argument("--stages", default=None, help=f"comma list, a prefix of {','.join(STAGE_LADDER)}")
    p.add_argument("--mt", default=None, help="identity | glossary:<path> | cmd://... | tcp://...")
    p.add_argument("--scorer", default=None, help="cmd://... | tcp://... (default: trigram)")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--ontology", default=None, help="ontology mapping JSON")
    p.add_argument("--qdict", default=None, help="quantity dictionary JSON")
    p.add_argument("--kb", default=None, help="target-language KB")
    p.add_argument("--src-kb", default=None, help="source-language KB")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("evaluate", help="score a prediction dump against gold dialogues")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", help="replay dialogues or a user script through a model")
    p.add_argument("--model", required=True, help="oracle | rule | external:<URI>")
    p.add_argument("--kb", required=True)
    p.add_argument("--ontology", default=None, help="required slots for the rule model")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--dialogues")
    source.add_argument("--script", help="one user utterance per line ('-' for stdin)")
    p.add_argument("--dump", default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("kb", help="knowledge base tools")
    kb_sub = p.add_subparsers(dest="kb_command", required=True)
    q = kb_sub.add_parser("query", help="run one query")
    q.add_argument("--kb", required=True)
    q.add_argument("--domain", required=True)
    q.add_argument("--intent", default="search")
    q.add_argument("--constraint", action="append", default=[],
                   help='e.g. \'stars at_least " 5 "\' (repeatable)')
    q.set_defaults(func=cmd_kb_query)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = load_config(args.config)
    if args.log_level:
        config["logging"]["level"] = args.log_level
    configure_logging(config)
    try:
        return args.func(args, config)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"todkit: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except INPUT_ERRORS as e:
        logger.error("%s", e)
        return EXIT_INPUT
    except ToDKitError as e:
        logger.error("%s", e)
        return EXIT_BACKEND
    except Exception:
        logger.exception("Unexpected error")
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(main())
