"""Parameter-free relational propagation with residual and layer combination.

Each layer replaces every node's embedding by the coefficient-weighted sum of
its neighbors' previous embeddings across all relations; from layer 2 on, the
layer-1 embedding is added back as a residual.  The final embedding is a
weighted sum of all layer outputs (including layer 0).  There is nothing to
train here, so the result is computed once per graph and reused.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .graph import HeteroGraph
from .kernels import csr_spmm
from .textembed import TextEmbeddingSet

logger = logging.getLogger(__name__)

LEAKY_SLOPE = 0.01


@dataclass
class PropagationConfig:
    layers: int = 4
    layer_weights: list | None = None  # None -> 1/layers for every layer 0..L
    use_initial_residual: bool = True
    use_layer_combination: bool = True
    activation: str = "none"  # "none" | "leaky-relu"
    node_dropout: float = 0.0

    def resolved_weights(self) -> np.ndarray:
        if self.layer_weights is not None:
            w = np.asarray(self.layer_weights, dtype=np.float64)
            if w.size != self.layers + 1:
                raise ValueError(
                    f"need {self.layers + 1} layer weights, got {w.size}"
                )
            return w
        return np.full(self.layers + 1, 1.0 / self.layers)


def leaky_relu(x: np.ndarray, slope: float = LEAKY_SLOPE) -> np.ndarray:
    return np.where(x >= 0, x, slope * x)


def init_embeddings(graph: HeteroGraph, text_set: TextEmbeddingSet) -> np.ndarray:
    """Layer-0 matrix: text-node rows copied from text_set, all others zero."""
    ni = graph.node_index
    out = np.zeros((ni.total, text_set.dimension), dtype=np.float64)
    missing = 0
    for p in range(ni.num_descriptions):
        vec = text_set.descriptions.get(p)
        if vec is None:
            missing += 1
            continue
        if vec.shape != (text_set.dimension,):
            raise ValueError(
                f"description {p}: vector shape {vec.shape} != ({text_set.dimension},)"
            )
        out[ni.description(p)] = vec
    for q in range(ni.num_comments):
        vec = text_set.comments.get(q)
        if vec is None:
            missing += 1
            continue
        if vec.shape != (text_set.dimension,):
            raise ValueError(
                f"comment {q}: vector shape {vec.shape} != ({text_set.dimension},)"
            )
        out[ni.comment(q)] = vec
    if missing:
        logger.warning("%d text node(s) had no vector; left at zero", missing)
    return out


def _check_finite(mat: np.ndarray, layer: int) -> None:
    if not np.isfinite(mat).all():
        bad = int(np.flatnonzero(~np.isfinite(mat).all(axis=1))[0])
        raise FloatingPointError(
            f"non-finite embedding for node {bad} after layer {layer}"
        )


def propagate_layer(
    graph: HeteroGraph,
    e_prev: np.ndarray,
    e_layer1: np.ndarray | None,
    layer: int,
    cfg: PropagationConfig,
    rng: np.random.Generator | None = None,
    csr=None,
) -> np.ndarray:
    """One propagation step producing E^(layer) from E^(layer-1).

    ``e_layer1`` must be provided exactly when layer >= 2 and the initial
    residual is enabled.  ``csr`` may carry a precomputed merged adjacency to
    avoid rebuilding it per layer.
    """
    if layer < 1:
        raise ValueError("layer numbering starts at 1")
    residual = cfg.use_initial_residual and layer >= 2
    if residual and e_layer1 is None:
        raise ValueError(f"layer {layer} needs the layer-1 matrix for the residual")

    indptr, indices, data = graph.merged_csr() if csr is None else csr
    if cfg.node_dropout > 0.0 and rng is not None:
        keep = 1.0 - cfg.node_dropout
        mask = rng.random(data.size) < keep
        data = np.where(mask, data / keep, 0.0)

    out = csr_spmm(indptr, indices, data, e_prev)
    if cfg.activation == "leaky-relu":
        out = leaky_relu(out)
    if residual:
        out = out + e_layer1
    _check_finite(out, layer)
    return out


def combine_layers(layers: list, weights: np.ndarray) -> np.ndarray:
    if len(layers) != weights.size:
        raise ValueError(f"{len(layers)} layer matrices vs {weights.size} weights")
    shape = layers[0].shape
    for mat in layers[1:]:
        if mat.shape != shape:
            raise ValueError("layer matrices disagree in shape")
    out = np.zeros(shape, dtype=np.float64)
    for w, mat in zip(weights, layers):
        out += w * mat
    return out


def run_embedding_network(
    graph: HeteroGraph,
    e0: np.ndarray,
    cfg: PropagationConfig,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """All layers plus combination; returns the final embedding matrix."""
    weights = cfg.resolved_weights()
    csr = graph.merged_csr()
    combined = np.zeros_like(e0)
    if cfg.use_layer_combination:
        combined += weights[0] * e0
    e_prev = e0
    e_layer1 = None
    for layer in range(1, cfg.layers + 1):
        e_prev = propagate_layer(graph, e_prev, e_layer1, layer, cfg, rng=rng, csr=csr)
        if layer == 1:
            e_layer1 = e_prev
        if cfg.use_layer_combination:
            combined += weights[layer] * e_prev
    return combined if cfg.use_layer_combination else e_prev


def dump_embeddings(matrix: np.ndarray, graph: HeteroGraph, target) -> None:
    """Binary dump of the combined matrix in the interchange record layout.

    Node kinds extend the text-node scheme: 2 = user, 3 = item, keeping 0 =
    description and 1 = comment, so text records stay readable by the
    standard reader.
    """
    import struct

    from .textembed import INTERCHANGE_MAGIC, INTERCHANGE_VERSION

    ni = graph.node_index
    dim = matrix.shape[1]
    groups = (
        (0, ni.num_descriptions, ni.description),
        (1, ni.num_comments, ni.comment),
        (2, ni.num_users, ni.user),
        (3, ni.num_items, ni.item),
    )
    with open(target, "wb") as fh:
        fh.write(
            struct.pack("<4sIIQ", INTERCHANGE_MAGIC, INTERCHANGE_VERSION, dim, ni.total)
        )
        for kind, count, to_gid in groups:
            for ordinal in range(count):
                fh.write(struct.pack("<BQ", kind, ordinal))
                fh.write(
                    np.ascontiguousarray(matrix[to_gid(ordinal)], dtype=np.float64).tobytes()
                )
