"""Command-line entry point: single runs and hyperparameter sweeps."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ACTIVATIONS, MATCHING_VARIANTS, RunConfig
from .experiment import SWEEP_AXES, run_experiment, sweep

logger = logging.getLogger(__name__)

# argparse dest -> RunConfig field, for value-carrying flags
_FLAG_FIELDS = {
    "reviews": "reviews",
    "meta": "meta",
    "glove": "glove",
    "embeddings": "embeddings",
    "layers": "layers",
    "input_dim": "input_dim",
    "output_dim": "output_dim",
    "hidden": "hidden",
    "rl_depth": "rl_depth",
    "ml_depth": "ml_depth",
    "matching": "matching",
    "activation": "activation",
    "lambda_": "l2",
    "lr": "lr",
    "batch": "batch",
    "epochs": "epochs",
    "seed": "seed",
    "out": "out_dir",
    "dropout_net": "net_dropout",
    "dropout_node": "node_dropout",
    "eval_every": "eval_every",
    "num_eval_negatives": "num_negatives",
}

# store_true dest -> (RunConfig field, value when the flag is present)
_SWITCH_FIELDS = {
    "no_layer_comb": ("use_layer_combination", False),
    "no_init_residual": ("use_initial_residual", False),
    "self_connection": ("self_connection", True),
    "homogeneous_gcn": ("homogeneous", True),
    "no_pretrain": ("pretrain", False),
    "drop_comments": ("include_comments", False),
    "drop_descriptions": ("include_descriptions", False),
    "share_towers": ("share_towers", True),
    "deterministic": ("deterministic", True),
}


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat JSON config file; flags override it")
    p.add_argument("--reviews", help="review file, one JSON object per line")
    p.add_argument("--meta", help="item metadata file, one JSON object per line")
    p.add_argument("--glove", help="word-vector text file for text-node init")
    p.add_argument("--embeddings", help="precomputed embedding interchange file")
    p.add_argument("--layers", type=int)
    p.add_argument("--input-dim", type=int)
    p.add_argument("--output-dim", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--rl-depth", type=int)
    p.add_argument("--ml-depth", type=int)
    p.add_argument("--matching", choices=MATCHING_VARIANTS)
    p.add_argument("--activation", choices=ACTIVATIONS)
    p.add_argument("--no-layer-comb", action="store_true")
    p.add_argument("--self-connection", action="store_true")
    p.add_argument("--no-init-residual", action="store_true")
    p.add_argument("--homogeneous-gcn", action="store_true")
    p.add_argument("--no-pretrain", action="store_true")
    p.add_argument("--drop-comments", action="store_true")
    p.add_argument("--drop-descriptions", action="store_true")
    p.add_argument("--share-towers", action="store_true")
    p.add_argument("--lambda", dest="lambda_", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--k", help="comma-separated metric cutoffs, e.g. 10,20")
    p.add_argument("--deterministic", action="store_true")
    p.add_argument("--out", help="output directory for manifest and artifacts")
    p.add_argument("--dropout-net", type=float)
    p.add_argument("--dropout-node", type=float)
    p.add_argument("--eval-every", type=int)
    p.add_argument("--num-eval-negatives", type=int)


def config_from_args(args: argparse.Namespace) -> RunConfig:
    data: dict = {}
    if args.config:
        data.update(json.loads(Path(args.config).read_text()))
    for dest, field_name in _FLAG_FIELDS.items():
        value = getattr(args, dest)
        if value is not None:
            data[field_name] = value
    for dest, (field_name, value) in _SWITCH_FIELDS.items():
        if getattr(args, dest):
            data[field_name] = value
    if args.k:
        data["eval_k"] = [int(part) for part in args.k.split(",") if part]
    return RunConfig.from_dict(data)


def _print_rows(rows: list) -> None:
    if not rows:
        return
    cols = list(rows[0].keys())
    cells = [[str(row.get(c, "")) for c in cols] for row in rows]
    widths = [max(len(c), *(len(r[i]) for r in cells)) for i, c in enumerate(cols)]
    print("  ".join(c.ljust(w) for c, w in zip(cols, widths)))
    for r in cells:
        print("  ".join(val.ljust(w) for val, w in zip(r, widths)))


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = config_from_args(args)
    manifest = run_experiment(
        cfg,
        dry_run=args.dry_run,
        export_texts_path=args.export_texts,
        dump_embeddings_path=args.dump_embeddings,
    )
    if args.dry_run:
        print("dry run ok")
        return 0
    report = manifest.get("report")
    if report:
        rows = [
            {"k": k, "hr": vals["hr"], "ndcg": vals["ndcg"]}
            for k, vals in sorted(report["k"].items(), key=lambda kv: int(kv[0]))
        ]
        _print_rows(rows)
    print(f"status: {manifest['status']}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    cfg = config_from_args(args)
    _, value_type = SWEEP_AXES[args.axis]
    values = [value_type(part) for part in args.values.split(",") if part]
    if not values:
        raise ValueError("no sweep values given")
    rows = sweep(cfg, args.axis, values)
    _print_rows(rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetcf",
        description="Text-enriched heterogeneous-graph collaborative filtering",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment")
    _add_common_flags(p_run)
    p_run.add_argument("--dry-run", action="store_true", help="validate and stop")
    p_run.add_argument("--export-texts", help="write the node-text manifest here")
    p_run.add_argument("--dump-embeddings", help="write combined embeddings here")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run one experiment per axis value")
    _add_common_flags(p_sweep)
    p_sweep.add_argument("--axis", required=True, choices=sorted(SWEEP_AXES))
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # surface a clean one-liner, not a stack trace
        logger.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
