"""Planted-preference synthetic fixture for end-to-end checks.

Two latent blocks of users and items; every user interacts only inside
their block, with a geometric popularity skew over the block's items.
Descriptions and comments carry a block-indicative token, so propagated
embeddings separate the blocks, and the popularity skew gives ranking
signal within a block.  Scale: 200 users, 100 items, 9 interactions per
user (8 train + 1 held out).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import DescriptionRecord, InteractionCorpus, ReviewRecord, build_corpus
from .textembed import WordVectorTable

NUM_USERS = 200
NUM_ITEMS = 100
NUM_BLOCKS = 2
INTERACTIONS_PER_USER = 9
POPULARITY_DECAY = 0.85
GLOVE_DIM = 16
# 100 items minus 9 interactions leaves a 91-item pool, so 90 negatives is
# the densest list the fixture supports (random HR@10 is then about 0.11).
NUM_NEGATIVES = 90

BLOCK_TOKENS = ("alpha", "beta")
FILLER_TOKENS = (
    "crisp", "warm", "mellow", "bright", "steady", "gentle",
    "bold", "quiet", "vivid", "plain",
)


@dataclass
class PlantedData:
    reviews: list
    descriptions: list
    corpus: InteractionCorpus
    table: WordVectorTable


def _item_block(n: int) -> int:
    return 0 if n < NUM_ITEMS // NUM_BLOCKS else 1


def _user_block(m: int) -> int:
    return 0 if m < NUM_USERS // NUM_BLOCKS else 1


def planted_table(seed: int) -> WordVectorTable:
    """Word vectors: opposite block markers plus small random filler vectors."""
    rng = np.random.default_rng([seed, 7])
    entries = {}
    marker = np.zeros(GLOVE_DIM)
    marker[0] = 1.0
    entries["alpha"] = marker.copy()
    entries["beta"] = -marker
    for tok in FILLER_TOKENS + ("record",):
        entries[tok] = rng.uniform(-0.3, 0.3, size=GLOVE_DIM)
    return WordVectorTable(dimension=GLOVE_DIM, entries=entries)


def make_planted(seed: int = 0, num_negatives: int = NUM_NEGATIVES) -> PlantedData:
    rng = np.random.default_rng([seed, 11])
    half_items = NUM_ITEMS // NUM_BLOCKS

    weights = POPULARITY_DECAY ** np.arange(half_items, dtype=np.float64)

    reviews = []
    for m in range(NUM_USERS):
        block = _user_block(m)
        block_items = np.arange(half_items) + block * half_items
        # First interaction is assigned round-robin so every item occurs in the
        # corpus (otherwise the popularity tail would never be drawn and the
        # evaluation negative pools would fall short); the rest are
        # popularity-weighted.
        forced_local = (m % (NUM_USERS // NUM_BLOCKS)) % half_items
        rest_pool = np.delete(block_items, forced_local)
        rest_weights = np.delete(weights, forced_local)
        rest_weights = rest_weights / rest_weights.sum()
        extras = rng.choice(
            rest_pool, size=INTERACTIONS_PER_USER - 1, replace=False, p=rest_weights
        )
        chosen = np.concatenate([[block_items[forced_local]], extras])
        for t, n in enumerate(chosen):
            filler = FILLER_TOKENS[int(rng.integers(0, len(FILLER_TOKENS)))]
            reviews.append(
                ReviewRecord(
                    user_key=f"u{m}",
                    item_key=f"i{int(n)}",
                    rating=5.0,
                    comment_text=f"{BLOCK_TOKENS[block]} {filler} listen",
                    timestamp=t,
                )
            )

    descriptions = []
    for n in range(NUM_ITEMS):
        filler = FILLER_TOKENS[n % len(FILLER_TOKENS)]
        descriptions.append(
            DescriptionRecord(
                item_key=f"i{n}",
                description_text=f"{BLOCK_TOKENS[_item_block(n)]} {filler} record",
            )
        )

    corpus = build_corpus(reviews, seed=seed, num_negatives=num_negatives)
    return PlantedData(
        reviews=reviews,
        descriptions=descriptions,
        corpus=corpus,
        table=planted_table(seed),
    )


def write_planted_dataset(target_dir, seed: int = 0) -> dict:
    """Write the fixture as on-disk files in the formats the CLI consumes."""
    target = Path(target_dir)
    target.mkdir(parents=True, exist_ok=True)
    data = make_planted(seed)

    reviews_path = target / "reviews.jsonl"
    with open(reviews_path, "w", encoding="utf-8") as fh:
        for rec in data.reviews:
            fh.write(
                json.dumps(
                    {
                        "reviewerID": rec.user_key,
                        "asin": rec.item_key,
                        "overall": rec.rating,
                        "reviewText": rec.comment_text,
                        "unixReviewTime": rec.timestamp,
                    }
                )
                + "\n"
            )

    meta_path = target / "meta.jsonl"
    with open(meta_path, "w", encoding="utf-8") as fh:
        for rec in data.descriptions:
            fh.write(
                json.dumps({"asin": rec.item_key, "description": rec.description_text})
                + "\n"
            )

    glove_path = target / "glove.txt"
    with open(glove_path, "w", encoding="utf-8") as fh:
        for token, vec in data.table.entries.items():
            fh.write(token + " " + " ".join(repr(float(x)) for x in vec) + "\n")

    return {"reviews": str(reviews_path), "meta": str(meta_path), "glove": str(glove_path)}
