"""End-to-end experiment orchestration and hyperparameter sweeps.

A run executes parse -> corpus -> graph -> text embedding -> train (with
periodic evaluation) -> final report, recording a manifest with the resolved
configuration, input digests, stage timings, and artifact paths.  A failing
stage still writes the manifest, naming the stage, before the error
propagates.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import time
from pathlib import Path

import numpy as np

from .config import RunConfig
from .corpus import build_corpus, parse_descriptions, parse_reviews, strip_test_comments, write_split_manifest
from .evaluator import evaluate_model
from .graph import build_graph, collect_node_texts
from .kernels import BACKEND
from .prednet import save_checkpoint
from .propagate import dump_embeddings, init_embeddings
from .stopwords import LONG_STOPWORDS
from .textembed import (
    TextEmbeddingSet,
    embed_texts_glove,
    load_glove_text,
    random_embedding_set,
    read_embedding_file,
)
from .trainer import TrainingDiverged, train

logger = logging.getLogger(__name__)

DEFAULT_RANDOM_DIM = 256

SWEEP_AXES = {
    "layers": ("layers", int),
    "output-size": ("output_dim", int),
    "dropout-net": ("net_dropout", float),
    "dropout-node": ("node_dropout", float),
    "lambda": ("l2", float),
    "rl-depth": ("rl_depth", int),
    "ml-depth": ("ml_depth", int),
}


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(manifest: dict, out_dir) -> None:
    if out_dir is not None:
        Path(out_dir, "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n"
        )


def write_trace(trace: list, target) -> None:
    """One JSON object per epoch; key order fixed for byte-stable replays."""
    with open(target, "w", encoding="utf-8") as fh:
        for row in trace:
            fh.write(json.dumps(row, separators=(",", ":")) + "\n")


def write_text_manifest(desc_texts, comment_texts, target) -> None:
    """JSON-lines manifest of node texts consumed by the embedding exporter."""
    with open(target, "w", encoding="utf-8") as fh:
        for kind, texts in ((0, desc_texts), (1, comment_texts)):
            for ordinal, text in enumerate(texts):
                fh.write(
                    json.dumps(
                        {"kind": kind, "ordinal": ordinal, "text": text},
                        separators=(",", ":"),
                    )
                    + "\n"
                )


def run_experiment(
    cfg: RunConfig,
    dry_run: bool = False,
    export_texts_path=None,
    dump_embeddings_path=None,
) -> dict:
    cfg.validate()
    if not cfg.reviews:
        raise ValueError("a reviews file is required")
    out_dir = Path(cfg.out_dir) if cfg.out_dir else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    manifest: dict = {
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "backend": BACKEND,
        "inputs": {},
        "artifacts": {},
        "timings_ms": {},
        "status": "running",
    }
    for key in ("reviews", "meta", "glove", "embeddings"):
        path = getattr(cfg, key)
        if path:
            manifest["inputs"][key] = {"path": str(path), "sha256": _sha256(path)}

    stage = "parse"
    t_stage = time.perf_counter()

    def finish_stage(next_stage: str | None) -> None:
        nonlocal stage, t_stage
        manifest["timings_ms"][stage] = int(round((time.perf_counter() - t_stage) * 1000.0))
        t_stage = time.perf_counter()
        if next_stage is not None:
            stage = next_stage

    try:
        reviews = parse_reviews(cfg.reviews)
        descriptions = (
            parse_descriptions(cfg.meta) if cfg.meta and cfg.include_descriptions else []
        )
        finish_stage("corpus")

        corpus = build_corpus(reviews, cfg.seed, num_negatives=cfg.num_negatives)
        stripped = strip_test_comments(reviews, corpus)
        if out_dir is not None:
            split_path = out_dir / "split.json"
            write_split_manifest(corpus, split_path)
            manifest["artifacts"]["split"] = str(split_path)
        finish_stage("graph")

        graph = build_graph(
            corpus,
            stripped,
            descriptions,
            include_comments=cfg.include_comments,
            include_descriptions=cfg.include_descriptions,
            homogeneous=cfg.homogeneous,
            self_connection=cfg.self_connection,
        )
        if out_dir is not None:
            summary_path = out_dir / "graph_summary.json"
            graph.write_summary(summary_path)
            manifest["artifacts"]["graph_summary"] = str(summary_path)
        finish_stage("texts")

        desc_texts, comment_texts = collect_node_texts(
            corpus,
            stripped,
            descriptions,
            include_comments=cfg.include_comments,
            include_descriptions=cfg.include_descriptions,
        )
        if export_texts_path:
            write_text_manifest(desc_texts, comment_texts, export_texts_path)
            manifest["artifacts"]["texts"] = str(export_texts_path)

        tset, input_dim = _resolve_text_source(cfg, graph, desc_texts, comment_texts)
        cfg = dataclasses.replace(cfg, input_dim=input_dim)
        manifest["config"] = cfg.to_dict()
        finish_stage(None)

        if dry_run:
            manifest["status"] = "ok"
            manifest["dry_run"] = True
            _write_manifest(manifest, out_dir)
            return manifest

        stage = "train"
        e0 = init_embeddings(graph, tset)
        try:
            result = train(corpus, graph, e0, cfg)
        except TrainingDiverged as exc:
            if out_dir is not None:
                rescue = out_dir / "checkpoint.last-finite.bin"
                save_checkpoint(exc.params, rescue)
                manifest["artifacts"]["checkpoint"] = str(rescue)
            raise
        if out_dir is not None:
            trace_path = out_dir / "trace.jsonl"
            write_trace(result.trace, trace_path)
            manifest["artifacts"]["trace"] = str(trace_path)
            ckpt_path = out_dir / "checkpoint.bin"
            save_checkpoint(result.params, ckpt_path)
            manifest["artifacts"]["checkpoint"] = str(ckpt_path)
        manifest["trace"] = result.trace
        finish_stage("evaluate")

        if corpus.candidates:
            report = evaluate_model(result.combined_eval, corpus, result.params, cfg)
            manifest["report"] = report.as_dict(seed=cfg.seed)
            if out_dir is not None:
                report_path = out_dir / "report.json"
                report_path.write_text(
                    json.dumps(manifest["report"], indent=2, sort_keys=True) + "\n"
                )
                manifest["artifacts"]["report"] = str(report_path)
        else:
            logger.warning("no evaluable users; skipping final evaluation")
        if dump_embeddings_path:
            dump_embeddings(result.combined_eval, graph, dump_embeddings_path)
            manifest["artifacts"]["embeddings"] = str(dump_embeddings_path)
        finish_stage(None)

        manifest["status"] = "ok"
        _write_manifest(manifest, out_dir)
        return manifest
    except Exception as exc:
        manifest["status"] = "failed"
        manifest["failed_stage"] = stage
        manifest["error"] = str(exc)
        _write_manifest(manifest, out_dir)
        raise


def _resolve_text_source(cfg: RunConfig, graph, desc_texts, comment_texts):
    """Pick the layer-0 text vectors and settle the input dimension."""
    ni = graph.node_index
    if cfg.embeddings:
        tset = read_embedding_file(cfg.embeddings)
        if cfg.input_dim is not None and cfg.input_dim != tset.dimension:
            raise ValueError(
                f"input_dim {cfg.input_dim} != embedding file dimension {tset.dimension}"
            )
        return tset, tset.dimension
    if not cfg.pretrain:
        dim = cfg.input_dim or DEFAULT_RANDOM_DIM
        return random_embedding_set(ni.num_descriptions, ni.num_comments, dim, cfg.seed), dim
    if cfg.glove:
        table = load_glove_text(cfg.glove)
        if cfg.input_dim is not None and cfg.input_dim != table.dimension:
            raise ValueError(
                f"input_dim {cfg.input_dim} != word-vector dimension {table.dimension}"
            )
        tset = embed_texts_glove(desc_texts, comment_texts, table, LONG_STOPWORDS)
        return tset, table.dimension
    raise ValueError(
        "no text source: pass a word-vector file, a precomputed embedding file, "
        "or disable pretraining"
    )


def sweep(cfg: RunConfig, axis: str, values) -> list:
    """One run per value of the axis; returns collated rows."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; choose from {sorted(SWEEP_AXES)}")
    field_name, _ = SWEEP_AXES[axis]
    base_out = cfg.out_dir
    rows = []
    for value in values:
        sub_out = str(Path(base_out) / f"{axis}-{value}") if base_out else None
        sub_cfg = dataclasses.replace(cfg, **{field_name: value}, out_dir=sub_out)
        manifest = run_experiment(sub_cfg)
        row = {"axis": axis, "value": value}
        report = manifest.get("report")
        if report:
            for k, vals in report["k"].items():
                row[f"hr@{k}"] = vals["hr"]
                row[f"ndcg@{k}"] = vals["ndcg"]
        rows.append(row)
    if base_out:
        Path(base_out).mkdir(parents=True, exist_ok=True)
        Path(base_out, "sweep.json").write_text(json.dumps(rows, indent=2) + "\n")
    return rows
