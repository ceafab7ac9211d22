"""Command-line entry point.

stdout carries only machine-readable JSON summaries; human diagnostics and
progress telemetry (line-delimited JSON) go to stderr. Exit codes:
0 success, 1 usage, 2 data error, 3 I/O. Outputs are deterministic for a
fixed configuration; the only timestamp lives in the run_meta.json sidecar.
"""
from __future__ import annotations

import argparse
import datetime
import json
import sys
from pathlib import Path

from . import __version__
from .corpus import CorpusReader
from .dictionary import compile_matcher, load_dictionary
from .errors import AuditError, IoError
from .logits import load_logits, mean_logits, rank_from_logits
from .prevalence import load_prevalence, rank_from_prevalence
from .reports import (
    load_counts_csv,
    load_rank_csv,
    write_compare_json,
    write_counts_csv,
    write_counts_json,
    write_drift_csv,
    write_drift_detail_csv,
    write_drift_json,
    write_quartiles_csv,
    write_rank_csv,
    write_robustness_csv,
    write_robustness_detail_csv,
    write_tally_csv,
    write_tau_csv,
)
from .scanner import WindowConfig, count_corpus, rank_from_counts
from .stats import (
    POSITIONS,
    compare_tables,
    drift,
    mean_tau,
    position_tally,
    quartile_tau,
    template_pairwise_tau,
    template_top_agreement,
)
from .templates import load_templates, render_matrix, write_prompts_jsonl

CONFIG_KEYS = ("out", "parallelism", "lenient", "windows", "dedup_mode", "language", "with_suffix")


class _Parser(argparse.ArgumentParser):
    # argparse defaults to exit code 2 on usage errors; the contract says 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_windows(text):
    try:
        return tuple(int(w) for w in str(text).split(","))
    except ValueError:
        raise AuditError(f"invalid windows value {text!r} (expected e.g. 50,100,250)") from None


def _load_config(path):
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise AuditError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise AuditError(f"config {path} must be a JSON object")
    unknown = set(data) - set(CONFIG_KEYS)
    if unknown:
        raise AuditError(f"config {path}: unknown keys {sorted(unknown)!r}")
    return data


def _effective(args, config, key, default):
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in config:
        return config[key]
    return default


def _require_paths(*paths):
    for p in paths:
        if p is not None and not Path(p).exists():
            raise IoError(f"path does not exist: {p}")


def _out_dir(args, config) -> Path:
    out = Path(_effective(args, config, "out", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_meta(out: Path, command: str, settings: dict) -> None:
    meta = {
        "tool": "epibias",
        "version": __version__,
        "command": command,
        "settings": settings,
        "started_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    (out / "run_meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


def _emit(payload) -> None:
    sys.stdout.write(json.dumps(payload, ensure_ascii=False) + "\n")


def _progress_to_stderr(stats: dict) -> None:
    sys.stderr.write(json.dumps(stats) + "\n")
    sys.stderr.flush()


def cmd_count(args, config) -> int:
    out = _out_dir(args, config)
    windows = _effective(args, config, "windows", None)
    windows = _parse_windows(windows) if windows is not None else WindowConfig().windows
    cfg = WindowConfig(
        windows=windows, dedup_mode=_effective(args, config, "dedup_mode", "mention_pairs")
    )
    language = _effective(args, config, "language", "en")
    parallelism = int(_effective(args, config, "parallelism", 1))
    lenient = bool(_effective(args, config, "lenient", False))
    _require_paths(args.dict, *args.corpus)

    bundle = load_dictionary(args.dict)
    matcher = compile_matcher(bundle, language)
    reader = CorpusReader(args.corpus, lenient=lenient)
    matrix = count_corpus(
        reader, matcher, cfg, parallelism=parallelism, progress=_progress_to_stderr
    )
    write_counts_csv(matrix, out / "counts.csv")
    write_counts_json(matrix, out / "counts.json")
    _write_meta(out, "count", {"windows": list(cfg.windows), "dedup_mode": cfg.dedup_mode,
                               "language": language, "parallelism": parallelism, "lenient": lenient})
    _emit(
        {
            "docs_scanned": matrix.docs_scanned,
            "tokens_scanned": matrix.tokens_scanned,
            "skipped": len(reader.skipped),
            "counts_csv": str(out / "counts.csv"),
            "counts_json": str(out / "counts.json"),
        }
    )
    if reader.skipped:
        sys.stderr.write(f"skipped {len(reader.skipped)} undecodable documents:\n")
        for source, ordinal, reason in reader.skipped[:20]:
            sys.stderr.write(f"  {source}:{ordinal}: {reason}\n")
        return 2
    return 0


def cmd_render(args, config) -> int:
    out = _out_dir(args, config)
    _require_paths(args.dict, args.templates)
    with_suffix = bool(_effective(args, config, "with_suffix", False))
    bundle = load_dictionary(args.dict)
    tset = load_templates(args.templates)
    prompts = render_matrix(tset, bundle, args.category, with_suffix=with_suffix)
    path = out / "prompts.jsonl"
    write_prompts_jsonl(prompts, path)
    _write_meta(out, "render", {"category": args.category, "language": tset.language,
                                "with_suffix": with_suffix})
    _emit({"prompts": len(prompts), "language": tset.language, "path": str(path)})
    return 0


def cmd_rank(args, config) -> int:
    out = _out_dir(args, config)
    _require_paths(args.input)
    if args.source == "counts":
        if args.window is None:
            raise AuditError("--window is required for --source counts")
        matrix = load_counts_csv(args.input)
        table = rank_from_counts(matrix, args.category, args.window, source=args.label or "counts")
    elif args.source == "prevalence":
        table = rank_from_prevalence(
            load_prevalence(args.input), args.category, source=args.label or "real"
        )
    else:
        if not args.model or not args.language:
            raise AuditError("--model and --language are required for --source logits")
        means = mean_logits(load_logits(args.input))
        table = rank_from_logits(means, args.model, args.language, args.category)
        if args.label:
            table.source = args.label
    path = out / "ranks.csv"
    write_rank_csv(table, path)
    _write_meta(out, "rank", {"source": args.source, "category": args.category,
                              "window": args.window, "model": args.model,
                              "language": args.language})
    _emit(
        {
            "source": table.source,
            "category": table.category,
            "diseases": len(table.diseases),
            "subgroups": len(table.subgroups),
            "path": str(path),
        }
    )
    return 0


def cmd_compare(args, config) -> int:
    out = _out_dir(args, config)
    _require_paths(args.left, args.right)
    left = load_rank_csv(args.left)
    right = load_rank_csv(args.right)
    results = compare_tables(left, right)
    aggregate = mean_tau(results)
    tallies = [position_tally(left, right, position) for position in POSITIONS]
    write_tau_csv(results, aggregate, out / "compare_tau.csv")
    write_tally_csv(tallies, out / "compare_positions.csv")
    write_compare_json(results, aggregate, tallies, out / "compare.json")
    _write_meta(out, "compare", {"left": str(args.left), "right": str(args.right)})
    _emit(
        {
            "left": left.source,
            "right": right.source,
            "diseases": len(results),
            "mean_tau": aggregate,
            "match_counts": {t.position: t.match_count for t in tallies},
            "out": str(out),
        }
    )
    return 0


def cmd_drift(args, config) -> int:
    out = _out_dir(args, config)
    _require_paths(args.base, *args.aligned)
    base = load_rank_csv(args.base)
    reports = [drift(base, load_rank_csv(path)) for path in args.aligned]
    write_drift_csv(reports, out / "drift.csv")
    write_drift_detail_csv(reports, out / "drift_per_disease.csv")
    write_drift_json(reports, out / "drift.json")
    _write_meta(out, "drift", {"base": str(args.base), "aligned": [str(a) for a in args.aligned]})
    _emit(
        {
            "base": base.source,
            "deltas": {r.aligned_model: r.delta for r in reports},
            "out": str(out),
        }
    )
    return 0


def cmd_robustness(args, config) -> int:
    out = _out_dir(args, config)
    _require_paths(args.logits)
    table = load_logits(args.logits)
    metrics = [
        template_top_agreement(table, args.model, args.language, args.category),
        template_pairwise_tau(table, args.model, args.language, args.category),
    ]
    write_robustness_csv(metrics, out / "robustness.csv")
    write_robustness_detail_csv(metrics, out / "robustness_per_disease.csv")
    _write_meta(out, "robustness", {"model": args.model, "language": args.language,
                                    "category": args.category})
    _emit({m.metric: {"mean": m.mean, "std_error": m.std_error} for m in metrics})
    return 0


def cmd_quartiles(args, config) -> int:
    out = _out_dir(args, config)
    _require_paths(args.taus, args.counts)
    taus = _load_tau_column(args.taus)
    matrix = load_counts_csv(args.counts)
    subgroups = matrix.subgroups(args.category)
    totals = {
        disease: float(sum(matrix.count(disease, s, args.window) for s in subgroups))
        for disease in taus
    }
    bins = quartile_tau(taus, totals)
    write_quartiles_csv(bins, out / "quartiles.csv")
    _write_meta(out, "quartiles", {"category": args.category, "window": args.window})
    _emit({f"q{b.index}": b.mean_tau for b in bins})
    return 0


def _load_tau_column(path) -> dict[str, float]:
    import csv as _csv

    taus: dict[str, float] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = _csv.DictReader(fh)
        if not reader.fieldnames or "disease" not in reader.fieldnames or "tau" not in reader.fieldnames:
            raise AuditError(f"{path}: expected a CSV with disease and tau columns")
        for row in reader:
            if row["disease"] == "ALL":
                continue
            taus[row["disease"]] = float(row["tau"])
    if not taus:
        raise AuditError(f"{path}: no per-disease tau rows")
    return taus


def build_parser() -> _Parser:
    parser = _Parser(prog="epibias", description="Disease-demographic corpus and model rank auditing")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--out", help="output directory (default: out)")
        p.add_argument("--parallelism", type=int, help="worker count for corpus scans")
        p.add_argument("--lenient", action="store_const", const=True, default=None,
                       help="skip undecodable corpus documents, report them, exit 2")

    p_count = sub.add_parser("count", help="count disease-demographic co-occurrences in a corpus")
    add_common(p_count)
    p_count.add_argument("--corpus", nargs="+", required=True, help="JSONL shard(s); .gz/.zst ok")
    p_count.add_argument("--dict", required=True, help="dictionary JSON path")
    p_count.add_argument("--windows", help="comma-separated token windows (default 50,100,250)")
    p_count.add_argument("--dedup-mode", dest="dedup_mode", choices=["mention_pairs", "per_document"])
    p_count.add_argument("--language", help="dictionary language to match (default en)")
    p_count.set_defaults(func=cmd_count)

    p_render = sub.add_parser("render", help="render scoring prompts for every pair")
    add_common(p_render)
    p_render.add_argument("--dict", required=True)
    p_render.add_argument("--templates", required=True, help="template set JSON path")
    p_render.add_argument("--category", required=True, choices=["race_ethnicity", "gender"])
    p_render.add_argument("--with-suffix", dest="with_suffix", action="store_const", const=True,
                          default=None, help="append the template set's suffix stem")
    p_render.set_defaults(func=cmd_render)

    p_rank = sub.add_parser("rank", help="build a rank table from counts, logits, or prevalence")
    add_common(p_rank)
    p_rank.add_argument("--source", required=True, choices=["counts", "logits", "prevalence"])
    p_rank.add_argument("--in", dest="input", required=True, help="counts CSV, logits JSONL, or prevalence CSV")
    p_rank.add_argument("--category", required=True, choices=["race_ethnicity", "gender"])
    p_rank.add_argument("--window", type=int, help="token window (counts source)")
    p_rank.add_argument("--model", help="model id (logits source)")
    p_rank.add_argument("--language", help="language (logits source)")
    p_rank.add_argument("--label", help="override the source label in the output")
    p_rank.set_defaults(func=cmd_rank)

    p_compare = sub.add_parser("compare", help="tau and position tallies between two rank tables")
    add_common(p_compare)
    p_compare.add_argument("--left", required=True, help="rank CSV")
    p_compare.add_argument("--right", required=True, help="rank CSV (reference side)")
    p_compare.set_defaults(func=cmd_compare)

    p_drift = sub.add_parser("drift", help="ranking drift of aligned models from a base model")
    add_common(p_drift)
    p_drift.add_argument("--base", required=True, help="base model rank CSV")
    p_drift.add_argument("--aligned", nargs="+", required=True, help="aligned model rank CSV(s)")
    p_drift.set_defaults(func=cmd_drift)

    p_rob = sub.add_parser("robustness", help="template agreement metrics over raw logits")
    add_common(p_rob)
    p_rob.add_argument("--logits", required=True)
    p_rob.add_argument("--model", required=True)
    p_rob.add_argument("--language", required=True)
    p_rob.add_argument("--category", required=True, choices=["race_ethnicity", "gender"])
    p_rob.set_defaults(func=cmd_robustness)

    p_q = sub.add_parser("quartiles", help="mean tau per disease-count quartile")
    add_common(p_q)
    p_q.add_argument("--taus", required=True, help="per-disease tau CSV (from compare)")
    p_q.add_argument("--counts", required=True, help="counts CSV")
    p_q.add_argument("--category", required=True, choices=["race_ethnicity", "gender"])
    p_q.add_argument("--window", type=int, required=True)
    p_q.set_defaults(func=cmd_quartiles)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = _load_config(args.config)
        return args.func(args, config)
    except IoError as exc:
        sys.stderr.write(f"epibias: I/O error: {exc}\n")
        return exc.exit_code
    except AuditError as exc:
        sys.stderr.write(f"epibias: {exc}\n")
        return exc.exit_code
    except OSError as exc:
        sys.stderr.write(f"epibias: I/O error: {exc}\n")
        return 3


def run() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    run()
