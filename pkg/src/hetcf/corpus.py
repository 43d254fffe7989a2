"""Implicit-feedback corpus: review parsing, leave-one-out split, eval candidates.

Input reviews are the Amazon per-line JSON format (one object per line with
``reviewerID``, ``asin``, ``overall``, ``reviewText``, ``unixReviewTime``);
item metadata is one JSON object per line with ``asin`` and ``description``.
"""

from __future__ import annotations

import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Union

import numpy as np

logger = logging.getLogger(__name__)

# Parsing aborts only when more than this fraction of lines is malformed.
MALFORMED_LINE_BUDGET = 0.01

Source = Union[str, Path, IO[bytes], IO[str], Iterable[str]]


class MalformedInputError(ValueError):
    """Raised when an input file exceeds the malformed-line budget."""

    def __init__(self, message: str, report: "ParseReport"):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class ReviewRecord:
    user_key: str
    item_key: str
    rating: float  # kept for provenance, ranking is presence-based
    comment_text: str
    timestamp: int


@dataclass(frozen=True)
class DescriptionRecord:
    item_key: str
    description_text: str


@dataclass
class ParseReport:
    """Per-file account of lines that could not be parsed."""

    total_lines: int = 0
    malformed: list = field(default_factory=list)  # (line_number, reason)

    def record(self, line_number: int, reason: str) -> None:
        self.malformed.append((line_number, reason))

    @property
    def malformed_fraction(self) -> float:
        if self.total_lines == 0:
            return 0.0
        return len(self.malformed) / self.total_lines

    def check(self, what: str) -> None:
        if self.malformed_fraction > MALFORMED_LINE_BUDGET:
            raise MalformedInputError(
                f"{what}: {len(self.malformed)} of {self.total_lines} lines malformed "
                f"(> {MALFORMED_LINE_BUDGET:.0%}); first offender at line "
                f"{self.malformed[0][0]}: {self.malformed[0][1]}",
                self,
            )


def _iter_lines(source: Source):
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            yield from fh
    else:
        yield from source


def _decode(line) -> str:
    if isinstance(line, bytes):
        return line.decode("utf-8")
    return line


def parse_reviews_with_report(source: Source) -> tuple[list[ReviewRecord], ParseReport]:
    """Parse a JSON-lines review file, collecting malformed lines instead of failing."""
    records: list[ReviewRecord] = []
    report = ParseReport()
    for lineno, raw in enumerate(_iter_lines(source), start=1):
        line = _decode(raw).strip()
        if not line:
            continue
        report.total_lines += 1
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            report.record(lineno, f"invalid JSON: {exc.msg}")
            continue
        try:
            user_key = str(obj["reviewerID"])
            item_key = str(obj["asin"])
            rating = float(obj["overall"])
            timestamp = int(obj["unixReviewTime"])
        except (KeyError, TypeError, ValueError) as exc:
            report.record(lineno, f"missing or invalid field: {exc}")
            continue
        if not user_key or not item_key:
            report.record(lineno, "empty reviewerID or asin")
            continue
        if timestamp < 0:
            report.record(lineno, "negative unixReviewTime")
            continue
        comment = obj.get("reviewText", "")
        records.append(
            ReviewRecord(user_key, item_key, rating, str(comment) if comment else "", timestamp)
        )
    if report.malformed:
        logger.warning(
            "review parse: %d malformed line(s), e.g. line %d (%s)",
            len(report.malformed),
            report.malformed[0][0],
            report.malformed[0][1],
        )
    return records, report


def parse_reviews(source: Source) -> list[ReviewRecord]:
    """Parse reviews, failing if more than 1% of lines are malformed."""
    records, report = parse_reviews_with_report(source)
    report.check("review file")
    return records


def parse_descriptions_with_report(
    source: Source,
) -> tuple[list[DescriptionRecord], ParseReport]:
    """Parse a JSON-lines metadata file into per-item description records.

    The ``description`` field may be a string or a list of strings (joined
    with spaces); items without a usable description are skipped silently.
    """
    records: list[DescriptionRecord] = []
    report = ParseReport()
    for lineno, raw in enumerate(_iter_lines(source), start=1):
        line = _decode(raw).strip()
        if not line:
            continue
        report.total_lines += 1
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            report.record(lineno, f"invalid JSON: {exc.msg}")
            continue
        item_key = obj.get("asin")
        if not item_key:
            report.record(lineno, "missing asin")
            continue
        desc = obj.get("description", "")
        if isinstance(desc, list):
            desc = " ".join(str(part) for part in desc)
        records.append(DescriptionRecord(str(item_key), str(desc) if desc else ""))
    return records, report


def parse_descriptions(source: Source) -> list[DescriptionRecord]:
    records, report = parse_descriptions_with_report(source)
    report.check("metadata file")
    return records


@dataclass
class InteractionCorpus:
    """Indexed train/test split with per-user evaluation candidate lists.

    ``train`` and ``test`` are ``(m, n, timestamp)`` int64 arrays over unique
    user-item pairs.  ``candidates[m]`` holds ``num_negatives`` never-interacted
    items followed by the held-out test item (always last).
    """

    user_keys: list[str]
    item_keys: list[str]
    user_index: dict[str, int]
    item_index: dict[str, int]
    train: np.ndarray
    test: np.ndarray
    candidates: dict[int, np.ndarray]
    interacted: list[set]  # full interaction set (train + test) per user
    skipped_eval_users: list[int]
    num_negatives: int
    seed: int

    @property
    def num_users(self) -> int:
        return len(self.user_keys)

    @property
    def num_items(self) -> int:
        return len(self.item_keys)

    def test_pairs(self) -> set:
        return {(int(m), int(n)) for m, n, _ in self.test}


def build_corpus(
    reviews: list[ReviewRecord],
    seed: int,
    num_negatives: int = 99,
) -> InteractionCorpus:
    """Index reviews, split leave-one-out, and sample evaluation candidates.

    Interactions are presence-based: repeat reviews of the same pair collapse
    to one interaction carrying the latest (timestamp, input order).  Per user
    the interaction with the strictly greatest timestamp is held out for test
    (ties broken by later input order); users with a single interaction train
    only.  Candidate negatives are drawn uniformly without replacement from
    items the user never interacted with; users with fewer than
    ``num_negatives`` such items are excluded from evaluation and logged.
    """
    if not reviews:
        raise ValueError("cannot build a corpus from zero reviews")

    user_index: dict[str, int] = {}
    item_index: dict[str, int] = {}
    user_keys: list[str] = []
    item_keys: list[str] = []
    # (m, n) -> (timestamp, input order); later (t, order) wins
    pair_latest: dict[tuple[int, int], tuple[int, int]] = {}

    for order, rec in enumerate(reviews):
        m = user_index.get(rec.user_key)
        if m is None:
            m = len(user_keys)
            user_index[rec.user_key] = m
            user_keys.append(rec.user_key)
        n = item_index.get(rec.item_key)
        if n is None:
            n = len(item_keys)
            item_index[rec.item_key] = n
            item_keys.append(rec.item_key)
        key = (m, n)
        stamp = (rec.timestamp, order)
        if key not in pair_latest or stamp > pair_latest[key]:
            pair_latest[key] = stamp

    by_user: dict[int, list[tuple[int, int, int]]] = {}
    for (m, n), (t, order) in pair_latest.items():
        by_user.setdefault(m, []).append((n, t, order))

    train_rows: list[tuple[int, int, int]] = []
    test_rows: list[tuple[int, int, int]] = []
    interacted: list[set] = [set() for _ in user_keys]
    for m in range(len(user_keys)):
        pairs = by_user[m]
        for n, _, _ in pairs:
            interacted[m].add(n)
        if len(pairs) < 2:
            for n, t, _ in pairs:
                train_rows.append((m, n, t))
            continue
        held = max(pairs, key=lambda p: (p[1], p[2]))
        test_rows.append((m, held[0], held[1]))
        for n, t, _ in pairs:
            if n != held[0]:
                train_rows.append((m, n, t))

    num_items = len(item_keys)
    rng = np.random.default_rng(seed)
    candidates: dict[int, np.ndarray] = {}
    skipped: list[int] = []
    for m, n_test, _ in test_rows:
        pool = np.array(sorted(set(range(num_items)) - interacted[m]), dtype=np.int64)
        if pool.size < num_negatives:
            skipped.append(m)
            continue
        negs = rng.choice(pool, size=num_negatives, replace=False)
        candidates[m] = np.concatenate([negs, [n_test]]).astype(np.int64)
    if skipped:
        logger.info(
            "corpus: %d user(s) excluded from evaluation "
            "(fewer than %d never-interacted items)",
            len(skipped),
            num_negatives,
        )

    return InteractionCorpus(
        user_keys=user_keys,
        item_keys=item_keys,
        user_index=user_index,
        item_index=item_index,
        train=np.array(train_rows, dtype=np.int64).reshape(-1, 3),
        test=np.array(test_rows, dtype=np.int64).reshape(-1, 3),
        candidates=candidates,
        interacted=interacted,
        skipped_eval_users=skipped,
        num_negatives=num_negatives,
        seed=seed,
    )


def strip_test_comments(
    reviews: list[ReviewRecord], corpus: InteractionCorpus
) -> list[ReviewRecord]:
    """Blank the comment text of every review matching a held-out test pair."""
    test_keys = {
        (corpus.user_keys[int(m)], corpus.item_keys[int(n)]) for m, n, _ in corpus.test
    }
    out = []
    for rec in reviews:
        if rec.comment_text and (rec.user_key, rec.item_key) in test_keys:
            out.append(
                ReviewRecord(rec.user_key, rec.item_key, rec.rating, "", rec.timestamp)
            )
        else:
            out.append(rec)
    return out


def write_split_manifest(corpus: InteractionCorpus, target) -> None:
    """Dump the split as JSON {train, test, candidates} for reproducibility audits."""
    doc = {
        "train": corpus.train.tolist(),
        "test": corpus.test.tolist(),
        "candidates": {str(m): c.tolist() for m, c in sorted(corpus.candidates.items())},
    }
    if isinstance(target, (str, Path)):
        with open(target, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
    elif isinstance(target, io.TextIOBase):
        json.dump(doc, target)
    else:
        target.write(json.dumps(doc).encode("utf-8"))
