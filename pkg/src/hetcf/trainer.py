"""Pairwise ranking training: BPR loss, negative sampling, mini-batch Adam.

Each epoch pairs every train interaction with one freshly sampled negative
item (rejection-sampled against the user's full interaction set), walks the
triples in shuffled mini-batches, and applies a bias-corrected Adam update
after each batch.  The loss per batch is

    sum over triples of softplus(score_neg - score_pos)  +  l2 * ||params||^2

evaluated in the overflow-safe ``logaddexp`` form.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .corpus import InteractionCorpus
from .graph import HeteroGraph
from .prednet import (
    _acc,
    backward,
    forward,
    init_params,
    l2_penalty,
    project,
    project_backward,
    zeros_like_params,
)
from .propagate import PropagationConfig, run_embedding_network

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    m: dict
    v: dict
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: dict) -> "AdamState":
        return cls(m=zeros_like_params(params), v=zeros_like_params(params))


def adam_step(params: dict, grads: dict, state: AdamState, lr: float):
    """One bias-corrected Adam update; mutates params/state and returns them."""
    state.step += 1
    bc1 = 1.0 - state.beta1**state.step
    bc2 = 1.0 - state.beta2**state.step
    for name, p in params.items():
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params, state


class TrainingDiverged(RuntimeError):
    """Raised when the loss goes non-finite; carries the last finite params."""

    def __init__(self, epoch: int, params: dict):
        super().__init__(f"training loss became non-finite in epoch {epoch}")
        self.epoch = epoch
        self.params = params


def sample_training_triples(
    corpus: InteractionCorpus, rng: np.random.Generator
) -> np.ndarray:
    """(T, 3) array of (user, positive item, negative item), one pass per epoch.

    Positives are visited in shuffled order; each negative is drawn uniformly
    and re-drawn until it misses the user's full interaction set.  Users who
    interacted with every item cannot yield a negative and are skipped.
    """
    num_items = corpus.num_items
    order = rng.permutation(corpus.train.shape[0])
    out = np.empty((corpus.train.shape[0], 3), dtype=np.int64)
    kept = 0
    skipped_users = set()
    for idx in order:
        m = int(corpus.train[idx, 0])
        n = int(corpus.train[idx, 1])
        interacted = corpus.interacted[m]
        if len(interacted) >= num_items:
            skipped_users.add(m)
            continue
        j = int(rng.integers(0, num_items))
        while j in interacted:
            j = int(rng.integers(0, num_items))
        out[kept] = (m, n, j)
        kept += 1
    if skipped_users:
        logger.warning(
            "%d user(s) interact with every item; their positives were skipped",
            len(skipped_users),
        )
    return out[:kept]


def bpr_step_loss(y_pos: np.ndarray, y_neg: np.ndarray, params: dict, l2: float) -> float:
    """Batch BPR loss with one regularization term per call."""
    y_pos = np.asarray(y_pos, dtype=np.float64)
    y_neg = np.asarray(y_neg, dtype=np.float64)
    if not (np.isfinite(y_pos).all() and np.isfinite(y_neg).all()):
        raise FloatingPointError("non-finite score passed to the loss")
    x = y_pos - y_neg
    loss = float(np.logaddexp(0.0, -x).sum())
    if l2:
        loss += l2 * l2_penalty(params)
    return loss


def bpr_batch(
    combined: np.ndarray,
    num_users: int,
    triples: np.ndarray,
    params: dict,
    cfg,
    rng: np.random.Generator | None = None,
):
    """Loss and full parameter gradients for one batch of (m, i, j) triples."""
    users = triples[:, 0]
    e_u = combined[users]
    e_pos = combined[num_users + triples[:, 1]]
    e_neg = combined[num_users + triples[:, 2]]

    u, cache_u = project(e_u, params, cfg, rng)
    v_pos, cache_vp = project(e_pos, params, cfg, rng)
    v_neg, cache_vn = project(e_neg, params, cfg, rng)
    y_pos, fwd_pos = forward(u, v_pos, params, cfg, rng)
    y_neg, fwd_neg = forward(u, v_neg, params, cfg, rng)

    loss = bpr_step_loss(y_pos, y_neg, params, cfg.l2)

    x = y_pos - y_neg
    sig = np.exp(-np.logaddexp(0.0, x))  # sigmoid(-x), overflow-safe
    grads, du_pos, dv_pos = backward(-sig, params, cfg, fwd_pos)
    grads_neg, du_neg, dv_neg = backward(sig, params, cfg, fwd_neg)
    for name, g in grads_neg.items():
        _acc(grads, name, g)

    project_backward(du_pos + du_neg, params, cfg, cache_u, grads)
    project_backward(dv_pos, params, cfg, cache_vp, grads)
    project_backward(dv_neg, params, cfg, cache_vn, grads)

    if cfg.l2:
        for name, p in params.items():
            _acc(grads, name, 2.0 * cfg.l2 * p)
    return loss, grads


def propagation_config(cfg) -> PropagationConfig:
    return PropagationConfig(
        layers=cfg.layers,
        use_initial_residual=cfg.use_initial_residual,
        use_layer_combination=cfg.use_layer_combination,
        activation=cfg.activation,
        node_dropout=cfg.node_dropout,
    )


@dataclass
class TrainResult:
    params: dict
    trace: list = field(default_factory=list)
    combined_eval: np.ndarray | None = None


def train(
    corpus: InteractionCorpus,
    graph: HeteroGraph,
    e0: np.ndarray,
    cfg,
    params: dict | None = None,
) -> TrainResult:
    """Full training loop; returns trained params and the per-epoch trace.

    Node dropout makes propagation stochastic, so the embeddings are
    re-propagated every epoch in that case; evaluation always uses the
    dropout-free embeddings computed once up front.
    """
    pcfg = propagation_config(cfg)
    if params is None:
        params = init_params(cfg, cfg.seed)
    state = AdamState.for_params(params)
    rng = np.random.default_rng([cfg.seed, 1])

    combined_eval = run_embedding_network(graph, e0, pcfg)
    combined_train = combined_eval

    can_eval = bool(corpus.candidates) and cfg.eval_every > 0
    train_rng = rng if (cfg.net_dropout > 0.0) else None
    trace: list = []
    last_finite = {name: p.copy() for name, p in params.items()}

    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        if cfg.node_dropout > 0.0:
            combined_train = run_embedding_network(graph, e0, pcfg, rng=rng)
        triples = sample_training_triples(corpus, rng)
        epoch_loss = 0.0
        for start in range(0, triples.shape[0], cfg.batch):
            batch = triples[start : start + cfg.batch]
            try:
                loss, grads = bpr_batch(
                    combined_train, corpus.num_users, batch, params, cfg, train_rng
                )
            except FloatingPointError as exc:
                logger.error("aborting: %s", exc)
                raise TrainingDiverged(epoch, last_finite) from exc
            adam_step(params, grads, state, cfg.lr)
            epoch_loss += loss
            last_finite = {name: p.copy() for name, p in params.items()}
        row = {"epoch": epoch, "loss": epoch_loss}
        if can_eval and (epoch % cfg.eval_every == 0 or epoch == cfg.epochs):
            from .evaluator import evaluate_model

            report = evaluate_model(combined_eval, corpus, params, cfg)
            for k in cfg.eval_k:
                row[f"hr@{k}"] = report.hr[k]
                row[f"ndcg@{k}"] = report.ndcg[k]
        wall_ms = int(round((time.perf_counter() - t0) * 1000.0))
        row["wall_ms"] = 0 if cfg.deterministic else wall_ms
        trace.append(row)
    return TrainResult(params=params, trace=trace, combined_eval=combined_eval)
