"""Top-k ranking evaluation: hit ratio and NDCG over sampled candidates.

Each test user's held-out item is ranked against their sampled negatives.
Ties are broken pessimistically — the held-out item is placed last among
equal scores — so a constant scorer earns no credit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import InteractionCorpus
from .prednet import score_pairs


def rank_from_scores(scores: np.ndarray, test_index: int = -1) -> int:
    """1-indexed pessimistic rank of the candidate at ``test_index``."""
    scores = np.asarray(scores, dtype=np.float64)
    if not np.isfinite(scores).all():
        raise FloatingPointError("non-finite candidate score")
    s = scores[test_index]
    greater = int(np.sum(scores > s))
    equal = int(np.sum(scores == s)) - 1  # other candidates tied with the test item
    return 1 + greater + equal


def rank_candidates(score_fn, user: int, candidates, test_index: int = -1) -> int:
    """Rank via a callable score_fn(user, item) -> real; test item at test_index."""
    scores = np.array([score_fn(user, n) for n in candidates], dtype=np.float64)
    return rank_from_scores(scores, test_index)


def metrics_at_k(ranks, k: int):
    """(HR@k, NDCG@k) over 1-indexed ranks."""
    ranks = np.asarray(ranks, dtype=np.int64)
    if ranks.size == 0:
        raise ValueError("no users to evaluate")
    hits = ranks <= k
    hr = float(np.mean(hits))
    ndcg = float(np.mean(np.where(hits, 1.0 / np.log2(ranks + 1.0), 0.0)))
    return hr, ndcg


@dataclass
class MetricReport:
    ks: list
    hr: dict  # k -> value
    ndcg: dict
    ranks: np.ndarray  # per evaluated user, 1-indexed
    users_evaluated: int

    def as_dict(self, seed: int | None = None) -> dict:
        out = {
            "k": {str(k): {"hr": self.hr[k], "ndcg": self.ndcg[k]} for k in self.ks},
            "users_evaluated": self.users_evaluated,
        }
        if seed is not None:
            out["seed"] = seed
        return out


def evaluate_model(
    combined: np.ndarray,
    corpus: InteractionCorpus,
    params: dict,
    cfg,
    chunk_pairs: int = 8192,
) -> MetricReport:
    """Score every test user's candidate list in batches and aggregate metrics.

    Candidate lists store the held-out item last, matching the pessimistic
    tie-break convention of :func:`rank_from_scores`.
    """
    users = sorted(corpus.candidates)
    if not users:
        raise ValueError("corpus has no evaluable users")
    num_users = corpus.num_users
    list_len = corpus.num_negatives + 1
    per_chunk = max(1, chunk_pairs // list_len)

    ranks = np.empty(len(users), dtype=np.int64)
    for start in range(0, len(users), per_chunk):
        group = users[start : start + per_chunk]
        cand = np.stack([corpus.candidates[m] for m in group])  # (G, C)
        user_rows = combined[np.repeat(group, list_len)]
        item_rows = combined[num_users + cand.ravel()]
        scores = score_pairs(user_rows, item_rows, params, cfg).reshape(len(group), list_len)
        for gi in range(len(group)):
            ranks[start + gi] = rank_from_scores(scores[gi], test_index=-1)

    ks = list(cfg.eval_k)
    hr = {}
    ndcg = {}
    for k in ks:
        hr[k], ndcg[k] = metrics_at_k(ranks, k)
    return MetricReport(ks=ks, hr=hr, ndcg=ndcg, ranks=ranks, users_evaluated=len(users))
