"""Initial embeddings for text nodes: GloVe averaging and the interchange file.

Description and comment nodes enter the graph with a vector computed either by
averaging pretrained word vectors over their stop-stripped tokens, by loading
externally precomputed sentence embeddings from the binary interchange format
defined here, or by seeded random initialization for the no-pretraining
ablation.  User and item nodes are always zero-initialized elsewhere.
"""

from __future__ import annotations

import io
import logging
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[a-z0-9]+")

# Interchange format (little-endian):
#   magic "LTHE" | version u32 | dimension u32 | count u64
#   then count records of [kind u8, ordinal u64, dimension x f64]
INTERCHANGE_MAGIC = b"LTHE"
INTERCHANGE_VERSION = 1
KIND_DESCRIPTION = 0
KIND_COMMENT = 1
_HEADER = struct.Struct("<4sIIQ")
_RECORD_HEAD = struct.Struct("<BQ")


class InterchangeError(ValueError):
    """Malformed interchange payload; ``offset`` is the failing byte position."""

    def __init__(self, offset: int, message: str):
        super().__init__(f"byte {offset}: {message}")
        self.offset = offset


class GloveFormatError(ValueError):
    pass


def tokenize_and_strip(text: str, stoplist) -> list[str]:
    """Lowercase, split on non-alphanumeric boundaries, drop stoplist tokens."""
    return [t for t in _TOKEN_RE.findall(text.lower()) if t not in stoplist]


@dataclass
class WordVectorTable:
    dimension: int
    entries: dict  # lowercase token -> (dimension,) float64 vector

    def __contains__(self, token: str) -> bool:
        return token in self.entries

    def __len__(self) -> int:
        return len(self.entries)


def load_glove_text(source) -> WordVectorTable:
    """Load a GloVe text file ("token v1 ... vd" per line, space-separated).

    The dimension is inferred from the first line; lines of any other
    dimension are skipped and counted, and more than 1% skipped is a failure.
    """
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            return load_glove_text(fh)

    entries: dict = {}
    dimension = None
    total = 0
    skipped = 0
    for raw in source:
        line = raw.decode("utf-8") if isinstance(raw, bytes) else raw
        parts = line.rstrip("\n").split(" ")
        if len(parts) < 2 or not parts[0]:
            if line.strip():
                total += 1
                skipped += 1
            continue
        total += 1
        token = parts[0]
        try:
            vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
        except ValueError:
            skipped += 1
            continue
        if dimension is None:
            dimension = vec.size
        if vec.size != dimension:
            skipped += 1
            continue
        entries[token] = vec
    if dimension is None:
        raise GloveFormatError("empty word-vector file: no dimension inferable")
    if skipped > 0.01 * total:
        raise GloveFormatError(
            f"word-vector file rejected: {skipped} of {total} lines skipped (> 1%)"
        )
    if skipped:
        logger.warning("word-vector load: skipped %d of %d lines", skipped, total)
    return WordVectorTable(dimension=dimension, entries=entries)


def glove_embed(tokens, table: WordVectorTable) -> np.ndarray:
    """Arithmetic mean of the in-vocabulary token vectors.

    Out-of-vocabulary tokens are excluded from both the sum and the divisor;
    with no in-vocabulary token at all the zero vector is returned.
    """
    acc = np.zeros(table.dimension, dtype=np.float64)
    hits = 0
    for tok in tokens:
        vec = table.entries.get(tok)
        if vec is not None:
            acc += vec
            hits += 1
    if hits:
        acc /= hits
    return acc


@dataclass
class TextEmbeddingSet:
    """Vectors for description and comment nodes, keyed by node ordinal."""

    dimension: int
    descriptions: dict = field(default_factory=dict)  # ordinal -> vector
    comments: dict = field(default_factory=dict)

    def _bucket(self, kind: int) -> dict:
        if kind == KIND_DESCRIPTION:
            return self.descriptions
        if kind == KIND_COMMENT:
            return self.comments
        raise ValueError(f"unknown node kind {kind}")

    def __len__(self) -> int:
        return len(self.descriptions) + len(self.comments)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TextEmbeddingSet):
            return NotImplemented
        if self.dimension != other.dimension:
            return False
        for mine, theirs in ((self.descriptions, other.descriptions), (self.comments, other.comments)):
            if mine.keys() != theirs.keys():
                return False
            if any(not np.array_equal(mine[k], theirs[k]) for k in mine):
                return False
        return True


def write_embedding_file(tset: TextEmbeddingSet, target) -> None:
    """Serialize a TextEmbeddingSet to the interchange format (bit-exact)."""
    if isinstance(target, (str, Path)):
        with open(target, "wb") as fh:
            write_embedding_file(tset, fh)
            return
    count = len(tset)
    target.write(_HEADER.pack(INTERCHANGE_MAGIC, INTERCHANGE_VERSION, tset.dimension, count))
    for kind, bucket in ((KIND_DESCRIPTION, tset.descriptions), (KIND_COMMENT, tset.comments)):
        for ordinal in sorted(bucket):
            vec = np.ascontiguousarray(bucket[ordinal], dtype=np.float64)
            if vec.shape != (tset.dimension,):
                raise ValueError(
                    f"vector for kind={kind} ordinal={ordinal} has shape {vec.shape}, "
                    f"expected ({tset.dimension},)"
                )
            if not np.isfinite(vec).all():
                raise ValueError(f"non-finite vector for kind={kind} ordinal={ordinal}")
            target.write(_RECORD_HEAD.pack(kind, ordinal))
            target.write(vec.tobytes())


def read_embedding_file(source) -> TextEmbeddingSet:
    """Parse the interchange format, averaging duplicate (kind, ordinal) records.

    Duplicates occur when an exporter emits one vector per sentence of a
    document; the per-document embedding is their mean.  Files written by
    :func:`write_embedding_file` have unique records, so the round trip is
    exact.
    """
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            return read_embedding_file(fh)

    data = source.read()
    if len(data) < _HEADER.size:
        raise InterchangeError(len(data), "truncated header")
    magic, version, dimension, count = _HEADER.unpack_from(data, 0)
    if magic != INTERCHANGE_MAGIC:
        raise InterchangeError(0, f"bad magic {magic!r}")
    if version != INTERCHANGE_VERSION:
        raise InterchangeError(4, f"unsupported version {version}")
    if dimension == 0:
        raise InterchangeError(8, "zero dimension")

    record_size = _RECORD_HEAD.size + 8 * dimension
    offset = _HEADER.size
    sums: dict = {}
    counts: dict = {}
    for _ in range(count):
        if offset + record_size > len(data):
            raise InterchangeError(offset, "truncated record")
        kind, ordinal = _RECORD_HEAD.unpack_from(data, offset)
        if kind not in (KIND_DESCRIPTION, KIND_COMMENT):
            raise InterchangeError(offset, f"unknown node kind {kind}")
        vec_off = offset + _RECORD_HEAD.size
        vec = np.frombuffer(data, dtype="<f8", count=dimension, offset=vec_off).copy()
        if not np.isfinite(vec).all():
            bad = int(np.flatnonzero(~np.isfinite(vec))[0])
            raise InterchangeError(vec_off + 8 * bad, "non-finite value")
        key = (kind, ordinal)
        if key in sums:
            sums[key] = sums[key] + vec
            counts[key] += 1
        else:
            sums[key] = vec
            counts[key] = 1
        offset += record_size
    if offset != len(data):
        raise InterchangeError(offset, f"{len(data) - offset} trailing byte(s)")

    tset = TextEmbeddingSet(dimension=dimension)
    for (kind, ordinal), total in sums.items():
        tset._bucket(kind)[ordinal] = total / counts[(kind, ordinal)]
    return tset


def embed_texts_glove(
    description_texts,
    comment_texts,
    table: WordVectorTable,
    stoplist,
) -> TextEmbeddingSet:
    """Embed per-node texts by stop-stripped word-vector averaging."""
    tset = TextEmbeddingSet(dimension=table.dimension)
    for p, text in enumerate(description_texts):
        tset.descriptions[p] = glove_embed(tokenize_and_strip(text, stoplist), table)
    for q, text in enumerate(comment_texts):
        tset.comments[q] = glove_embed(tokenize_and_strip(text, stoplist), table)
    return tset


def random_embedding_set(
    num_descriptions: int, num_comments: int, dimension: int, seed: int
) -> TextEmbeddingSet:
    """Seeded uniform init on [-0.5/dim, +0.5/dim] for the no-pretraining ablation.

    The scale matches the typical magnitude of averaged word vectors.
    """
    rng = np.random.default_rng(seed)
    half = 0.5 / dimension
    tset = TextEmbeddingSet(dimension=dimension)
    for p in range(num_descriptions):
        tset.descriptions[p] = rng.uniform(-half, half, size=dimension)
    for q in range(num_comments):
        tset.comments[q] = rng.uniform(-half, half, size=dimension)
    return tset


def roundtrip_bytes(tset: TextEmbeddingSet) -> bytes:
    buf = io.BytesIO()
    write_embedding_file(tset, buf)
    return buf.getvalue()
