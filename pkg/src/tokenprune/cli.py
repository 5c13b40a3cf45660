"""Command-line interface: metrics, prune, corpus-stats, sweep, chair."""

from __future__ import annotations

import argparse
import csv
import json
import sys

from .chair import chair_metrics
from .core import PruneConfig
from .dataio import (
    read_caption_records,
    read_corpus,
    read_dump,
    read_lexicon,
    read_stats,
    reference_stats,
)
from .errors import InvalidValue, TokenPruneError
from .metrics import attention_entropy, corpus_stats, erank_fast, erank_svd
from .selectors import (
    select_adaptive_threshold,
    select_fps,
    select_hybrid_adaptive,
    select_hybrid_fixed,
    select_topk_attention,
)

_SIGNALS = {"erank": "erank", "entropy": "attention_entropy"}


def _print_json(payload) -> None:
    print(json.dumps(payload, indent=2))


def _load_stats(arg: str | None) -> dict:
    if arg is None:
        return {}
    if arg == "builtin":
        return reference_stats()
    return read_stats(arg)


def _config_from_args(args, stats: dict) -> PruneConfig:
    erank_avg = args.erank_avg
    if erank_avg is None and stats.get("erank_mean") is not None:
        erank_avg = float(stats["erank_mean"])
    entropy_avg = args.entropy_avg
    if entropy_avg is None and stats.get("entropy_mean") is not None:
        entropy_avg = float(stats["entropy_mean"])
    return PruneConfig(
        budget=args.budget,
        method=getattr(args, "method", "adaptive_threshold"),
        tau_max=args.tau_max,
        tau_scale=args.tau_scale,
        erank_avg=erank_avg,
        entropy_avg=entropy_avg,
        complexity_signal=_SIGNALS[args.signal],
        mix_lo=args.mix_lo,
        mix_hi=args.mix_hi,
        fixed_ratio=args.ratio,
        budget_adapt_fraction=args.adaptive_budget,
    )


def _cmd_metrics(args) -> int:
    matrix, attn = read_dump(args.dump)
    _print_json(
        {
            "n_tokens": matrix.rows,
            "dim": matrix.cols,
            "erank_fast": erank_fast(matrix),
            "erank_svd": erank_svd(matrix),
            "attention_entropy": None if attn is None else attention_entropy(attn),
        }
    )
    return 0


def _cmd_prune(args) -> int:
    matrix, attn = read_dump(args.dump)
    config = _config_from_args(args, _load_stats(args.stats))
    if attn is None and args.method != "fps":
        raise InvalidValue(
            f"dump has no attention scores; method {args.method} requires them"
        )
    trace = None
    if args.method == "attention_topk":
        result = select_topk_attention(attn, config.budget)
    elif args.method == "fps":
        result = select_fps(matrix, config.budget, attn=attn)
    elif args.method == "hybrid_fixed":
        result = select_hybrid_fixed(matrix, attn, config.budget, config.fixed_ratio)
    elif args.method == "hybrid_adaptive":
        result = select_hybrid_adaptive(matrix, attn, config.budget, config)
    else:
        result, trace = select_adaptive_threshold(matrix, attn, config.budget, config)
    payload = {"method": args.method}
    payload.update(result.to_dict())
    payload["trace"] = None if trace is None else trace.to_dict()
    _print_json(payload)
    return 0


def _cmd_corpus_stats(args) -> int:
    pairs = read_corpus(args.corpus)
    for i, (_, attn) in enumerate(pairs):
        if attn is None:
            raise InvalidValue(f"corpus dump #{i} lacks attention scores")
    _print_json(corpus_stats(pairs, label=args.label).to_dict())
    return 0


def _cmd_sweep(args) -> int:
    from .harness import run_tau_sweep

    pairs = read_corpus(args.corpus)
    for i, (_, attn) in enumerate(pairs):
        if attn is None:
            raise InvalidValue(f"corpus dump #{i} lacks attention scores")
    stats = _load_stats(args.stats)
    base_config = None
    erank_avg = args.erank_avg or stats.get("erank_mean")
    entropy_avg = args.entropy_avg or stats.get("entropy_mean")
    if erank_avg is not None or entropy_avg is not None:
        base_config = PruneConfig(
            budget=args.budget,
            method="adaptive_threshold",
            tau_max=args.tau_max,
            erank_avg=None if erank_avg is None else float(erank_avg),
            entropy_avg=None if entropy_avg is None else float(entropy_avg),
            complexity_signal=_SIGNALS[args.signal],
        )
    points = run_tau_sweep(pairs, args.budget, args.grid, base_config=base_config)
    writer = csv.writer(sys.stdout)
    writer.writerow(["tau_scale", "mean_erank_retained", "mean_refilled"])
    for p in points:
        writer.writerow([p.tau_scale, p.mean_erank_retained, p.mean_refilled])
    return 0


def _cmd_chair(args) -> int:
    lexicon = read_lexicon(args.lexicon)
    records = [r.with_mentions(lexicon) for r in read_caption_records(args.captions)]
    _print_json(chair_metrics(records).to_dict())
    return 0


def _grid(text: str) -> list[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid value in {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("grid must list at least one value")
    return values


def _add_config_flags(sub, with_method: bool) -> None:
    if with_method:
        sub.add_argument(
            "--method",
            required=True,
            choices=["attention_topk", "fps", "hybrid_fixed", "hybrid_adaptive", "adaptive_threshold"],
            help="selection strategy",
        )
    sub.add_argument("--budget", type=int, required=True, help="token budget K")
    sub.add_argument("--tau-max", type=float, default=0.25, help="threshold cap (default 0.25)")
    sub.add_argument("--erank-avg", type=float, default=None, help="corpus mean effective rank")
    sub.add_argument("--entropy-avg", type=float, default=None, help="corpus mean attention entropy")
    sub.add_argument(
        "--signal",
        choices=sorted(_SIGNALS),
        default="erank",
        help="complexity signal for adaptive methods (default erank)",
    )
    sub.add_argument(
        "--stats",
        default=None,
        help="stats JSON supplying missing averages; 'builtin' uses the packaged reference",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tokenprune",
        description="Visual-token pruning: complexity metrics, selectors, hallucination scoring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metrics", help="print complexity metrics of one dump as JSON")
    p.add_argument("dump", help="token dump file")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("prune", help="select tokens from one dump, print result as JSON")
    p.add_argument("dump", help="token dump file")
    _add_config_flags(p, with_method=True)
    p.add_argument("--tau-scale", type=float, default=0.01, help="threshold slope (default 0.01)")
    p.add_argument("--ratio", type=float, default=0.5, help="hybrid_fixed attention share")
    p.add_argument("--mix-lo", type=float, default=PruneConfig.__dataclass_fields__["mix_lo"].default)
    p.add_argument("--mix-hi", type=float, default=PruneConfig.__dataclass_fields__["mix_hi"].default)
    p.add_argument(
        "--adaptive-budget",
        type=float,
        default=0.0,
        metavar="FRACTION",
        help="rescale the budget by complexity, banded to +/-FRACTION (0 disables)",
    )
    p.set_defaults(func=_cmd_prune)

    p = sub.add_parser("corpus-stats", help="print complexity statistics of a dump corpus as JSON")
    p.add_argument("corpus", help="directory of .tpk1 files or manifest of paths")
    p.add_argument("--label", default="", help="free-form provenance label")
    p.set_defaults(func=_cmd_corpus_stats)

    p = sub.add_parser("sweep", help="threshold sweep over a corpus, print CSV")
    p.add_argument("corpus", help="directory of .tpk1 files or manifest of paths")
    _add_config_flags(p, with_method=False)
    p.add_argument(
        "--tau-scale-grid",
        dest="grid",
        type=_grid,
        required=True,
        help="comma-separated tau_scale values",
    )
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("chair", help="hallucination metrics over a caption corpus, print JSON")
    p.add_argument("--captions", required=True, help="JSON-lines captions file")
    p.add_argument("--lexicon", required=True, help="JSON surface-to-canonical object map")
    p.set_defaults(func=_cmd_chair)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TokenPruneError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
