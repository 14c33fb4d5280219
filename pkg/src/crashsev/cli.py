"""``crashsev`` command line.

Exit codes: 0 success, 1 usage error, 2 data error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import stages
from .analytics import write_table
from .errors import CrashsevError, UsageError
from .features import FeatureConfig
from .ingest import SplitSpec
from .ingest.clean import DEFAULT_CHUNK_ROWS
from .models import MODEL_KINDS
from .report import ChartSpec, RunConfig, resolve_workers, run_pipeline, write_chart


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _read_json(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read JSON config {path}: {exc}") from exc


def cmd_ingest(a) -> None:
    report = stages.ingest_csv(a.input, a.out, overwrite=a.overwrite, chunk_rows=a.chunk_rows,
                               workers=resolve_workers(a.workers), report_path=a.report)
    print(json.dumps({"rows_read": report.rows_read, "rows_kept": report.rows_kept,
                      "rows_dropped": report.rows_dropped}))


def cmd_split(a) -> None:
    doc = stages.make_split(a.store, SplitSpec(a.test_fraction, a.seed), a.out)
    print(json.dumps({"train": len(doc["train"]), "test": len(doc["test"])}))


def cmd_encode(a) -> None:
    state = stages.encode_matrices(a.store, a.split, FeatureConfig.from_dict(_read_json(a.config)), a.out)
    print(json.dumps({"features": state.width}))


def cmd_train(a) -> None:
    cfg = _read_json(a.config)
    if a.model in cfg and isinstance(cfg[a.model], dict):
        cfg = cfg[a.model]
    stages.train_model(a.model, a.matrix, a.out, cfg, seed=a.seed, binarize=a.binarize_severe,
                       workers=resolve_workers(a.workers))


def cmd_predict(a) -> None:
    stages.predict_file(a.model_file, a.matrix, a.out, workers=resolve_workers(a.workers))


def cmd_evaluate(a) -> None:
    report = stages.evaluate_file(a.model_file, a.matrix, a.mode, workers=resolve_workers(a.workers))
    Path(a.out).write_text(report.to_json(), encoding="utf-8")
    print(json.dumps({"accuracy": report.metrics.accuracy, "weighted": report.metrics.weighted}))


def cmd_analyze(a) -> None:
    table = stages.analyze(a.store, a.report, top_k=a.top, workers=resolve_workers(a.workers))
    write_table(table, a.out)


def cmd_render(a) -> None:
    write_chart(ChartSpec.load(a.spec), a.out)


def cmd_run(a) -> None:
    data = _read_json(a.config)
    for key, value in (("input_csv", a.input), ("output_dir", a.out), ("seed", a.seed),
                       ("test_fraction", a.test_fraction), ("workers", a.workers)):
        if value is not None:
            data[key] = value
    if a.binarize_severe:
        data["binarize_severe"] = True
    if "input_csv" not in data or "output_dir" not in data:
        raise UsageError("run needs an input CSV and an output directory (config or --input/--out)")
    result = run_pipeline(RunConfig.from_dict(data))
    print(json.dumps({"report_dir": str(result.report_dir), "executed": result.executed,
                      "skipped": result.skipped}))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="crashsev", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def workers(sp):
        sp.add_argument("--workers", type=int, default=None,
                        help="worker pool size (default: $CRASHSEV_WORKERS or 1)")

    sp = sub.add_parser("ingest", help="clean a CSV into a column store")
    sp.add_argument("--input", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--overwrite", action="store_true")
    sp.add_argument("--chunk-rows", type=int, default=DEFAULT_CHUNK_ROWS)
    sp.add_argument("--report", default=None, help="cleaning report path (default: <out>/cleaning_report.json)")
    workers(sp)
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("split", help="stratified train/test split of a store")
    sp.add_argument("--store", required=True)
    sp.add_argument("--test-fraction", type=float, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_split)

    sp = sub.add_parser("encode", help="fit the encoder and write feature matrices")
    sp.add_argument("--store", required=True)
    sp.add_argument("--split", required=True)
    sp.add_argument("--config", default=None)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_encode)

    sp = sub.add_parser("train", help="train a model on a matrix directory")
    sp.add_argument("--model", choices=MODEL_KINDS, required=True)
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--config", default=None)
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--binarize-severe", action="store_true")
    sp.add_argument("--out", required=True)
    workers(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("predict", help="write per-row class probabilities")
    sp.add_argument("--model-file", required=True)
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--out", required=True)
    workers(sp)
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("evaluate", help="evaluation report as JSON")
    sp.add_argument("--model-file", required=True)
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--mode", choices=("multiclass", "binarized"), default="multiclass")
    sp.add_argument("--out", required=True)
    workers(sp)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("analyze", help="exploratory aggregation over a store")
    sp.add_argument("--store", required=True)
    sp.add_argument("--report", choices=stages.ANALYSIS_REPORTS, required=True)
    sp.add_argument("--top", type=int, default=None)
    sp.add_argument("--out", required=True, help="*.csv for CSV, anything else for JSON")
    workers(sp)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("render", help="render a chart spec JSON to SVG")
    sp.add_argument("--spec", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_render)

    sp = sub.add_parser("run", help="full resumable pipeline")
    sp.add_argument("--config", default=None)
    sp.add_argument("--input", default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--test-fraction", type=float, default=None)
    sp.add_argument("--binarize-severe", action="store_true")
    workers(sp)
    sp.set_defaults(func=cmd_run)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except CrashsevError as exc:
        print(f"crashsev: {exc}", file=sys.stderr)
        return exc.exit_code
    except (TypeError, ValueError) as exc:
        print(f"crashsev: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"crashsev: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
