"""Shared builders for randomized corpora, graphs, and dense oracles."""

from __future__ import annotations

import numpy as np

from hetcf.corpus import DescriptionRecord, ReviewRecord, build_corpus, strip_test_comments
from hetcf.graph import build_graph
from hetcf.propagate import LEAKY_SLOPE

WORDS = ["good", "great", "music", "song", "bright", "slow", "loud", "calm"]


def random_reviews(rng, num_users=5, num_items=5, num_reviews=14, text_prob=0.7):
    reviews = []
    for _ in range(num_reviews):
        m = int(rng.integers(0, num_users))
        n = int(rng.integers(0, num_items))
        text = ""
        if rng.random() < text_prob:
            k = int(rng.integers(1, 4))
            text = " ".join(WORDS[int(i)] for i in rng.integers(0, len(WORDS), k))
        reviews.append(
            ReviewRecord(
                user_key=f"u{m}",
                item_key=f"i{n}",
                rating=float(rng.integers(1, 6)),
                comment_text=text,
                timestamp=int(rng.integers(0, 1000)),
            )
        )
    return reviews


def random_descriptions(rng, num_items=5, desc_prob=0.7):
    out = []
    for n in range(num_items):
        if rng.random() < desc_prob:
            k = int(rng.integers(1, 4))
            text = " ".join(WORDS[int(i)] for i in rng.integers(0, len(WORDS), k))
            out.append(DescriptionRecord(item_key=f"i{n}", description_text=text))
    return out


def random_graph(rng, **build_kwargs):
    """A small random heterograph plus its corpus (<= ~40 nodes)."""
    num_users = int(rng.integers(2, 7))
    num_items = int(rng.integers(2, 7))
    reviews = random_reviews(rng, num_users, num_items, num_reviews=int(rng.integers(6, 16)))
    descriptions = random_descriptions(rng, num_items)
    corpus = build_corpus(reviews, seed=int(rng.integers(0, 2**31)), num_negatives=1)
    stripped = strip_test_comments(reviews, corpus)
    graph = build_graph(corpus, stripped, descriptions, **build_kwargs)
    return graph, corpus


def relation_degree_counts(rel):
    """Independent per-relation degree recount straight from the edge lists."""
    deg_src: dict = {}
    deg_dst: dict = {}
    for s, d in zip(rel.src, rel.dst):
        deg_src[int(s)] = deg_src.get(int(s), 0) + 1
        deg_dst[int(d)] = deg_dst.get(int(d), 0) + 1
    return deg_src, deg_dst


def dense_relation_matrices(graph, recompute_coefs=True):
    """Per-relation dense normalized adjacencies A[dst, src].

    With recompute_coefs the coefficients come from an independent degree
    recount, not from the values stored on the graph.
    """
    size = graph.num_nodes
    mats = []
    for rel in graph.relations.values():
        a = np.zeros((size, size))
        if recompute_coefs and rel.name != "self":
            deg_src, deg_dst = relation_degree_counts(rel)
            for s, d in zip(rel.src, rel.dst):
                a[int(d), int(s)] = 1.0 / np.sqrt(deg_src[int(s)] * deg_dst[int(d)])
        else:
            for s, d, c in zip(rel.src, rel.dst, rel.coef):
                a[int(d), int(s)] = c
        mats.append(a)
    return mats


def dense_propagation_oracle(graph, e0, cfg):
    """Reference propagation by dense matrix products, layer by layer."""
    mats = dense_relation_matrices(graph, recompute_coefs=not graph.homogeneous)
    weights = cfg.resolved_weights()
    layers = [e0]
    e_prev = e0
    for layer in range(1, cfg.layers + 1):
        agg = np.zeros_like(e0)
        for a in mats:
            agg = agg + a @ e_prev
        if cfg.activation == "leaky-relu":
            agg = np.where(agg >= 0, agg, LEAKY_SLOPE * agg)
        if cfg.use_initial_residual and layer >= 2:
            agg = agg + layers[1]
        layers.append(agg)
        e_prev = agg
    if not cfg.use_layer_combination:
        return layers[-1]
    out = np.zeros_like(e0)
    for w, mat in zip(weights, layers):
        out += w * mat
    return out
