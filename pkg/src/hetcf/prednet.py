"""Trainable scoring network with exact analytic forward/backward passes.

Architecture, all layers linear by default:

* projection head: two linear layers taking a propagated node embedding from
  input size to hidden to output size — the only place the embedding
  dimension changes, trained jointly with the rest;
* representation branch: per-side towers over the projected user and item
  vectors, fused by element-wise product;
* matching branch: layers over the concatenation of the projected vectors;
* fusion: a single linear readout over the concatenated branch outputs.

Variants: ``inner`` scores by plain dot product (only the head is
allocated); ``mlp`` drops the representation branch; ``combined`` uses both.
The optional activation inserts leaky-relu (slope 0.01) after every
non-final linear layer; inverted dropout, when enabled, follows it.

Gradients are hand-derived; they flow through both branches, the
element-wise product, the concatenations, and the head, stopping at the
propagated embeddings, which are constants during training.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

LEAKY_SLOPE = 0.01
CHECKPOINT_MAGIC = b"LTHP"
CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    """Malformed checkpoint; ``offset`` is the failing byte position."""

    def __init__(self, offset: int, message: str):
        super().__init__(f"byte {offset}: {message}")
        self.offset = offset


def _leaky(x: np.ndarray) -> np.ndarray:
    return np.where(x >= 0, x, LEAKY_SLOPE * x)


def _leaky_grad(h: np.ndarray) -> np.ndarray:
    return np.where(h >= 0, 1.0, LEAKY_SLOPE)


def tower_dims(cfg) -> list:
    return [cfg.output_dim] + [cfg.hidden] * cfg.rl_depth


def matching_dims(cfg) -> list:
    return [2 * cfg.output_dim] + [cfg.hidden] * cfg.ml_depth


def fusion_input_dim(cfg) -> int:
    if cfg.matching == "combined":
        return tower_dims(cfg)[-1] + matching_dims(cfg)[-1]
    if cfg.matching == "mlp":
        return matching_dims(cfg)[-1]
    raise ValueError(f"no fusion layer for matching variant {cfg.matching!r}")


def init_params(cfg, seed: int) -> dict:
    """Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases.

    Only the tensors the configured variant actually uses are allocated.
    """
    if cfg.input_dim is None:
        raise ValueError("input_dim must be resolved before parameter init")
    rng = np.random.default_rng(seed)
    params: dict = {}

    def add_linear(prefix: str, din: int, dout: int) -> None:
        bound = 1.0 / np.sqrt(din)
        params[f"{prefix}.w"] = rng.uniform(-bound, bound, size=(din, dout))
        params[f"{prefix}.b"] = np.zeros(dout, dtype=np.float64)

    add_linear("proj.0", cfg.input_dim, cfg.hidden)
    add_linear("proj.1", cfg.hidden, cfg.output_dim)
    if cfg.matching == "inner":
        return params

    if cfg.matching == "combined":
        dims = tower_dims(cfg)
        for i in range(cfg.rl_depth):
            add_linear(f"rl_user.{i}", dims[i], dims[i + 1])
            if not cfg.share_towers:
                add_linear(f"rl_item.{i}", dims[i], dims[i + 1])
    mdims = matching_dims(cfg)
    for i in range(cfg.ml_depth):
        add_linear(f"ml.{i}", mdims[i], mdims[i + 1])
    fdim = fusion_input_dim(cfg)
    bound = 1.0 / np.sqrt(fdim)
    params["fuse.w"] = rng.uniform(-bound, bound, size=fdim)
    params["fuse.b"] = np.zeros(1, dtype=np.float64)
    return params


def _acc(grads: dict, name: str, value: np.ndarray) -> None:
    if name in grads:
        grads[name] += value
    else:
        grads[name] = value


def _run_chain(x, params, prefix, depth, cfg, rng, caches):
    """Apply `depth` linear layers (all non-final: activation/dropout apply)."""
    for i in range(depth):
        w = params[f"{prefix}.{i}.w"]
        b = params[f"{prefix}.{i}.b"]
        h = x @ w + b
        rec = {"x": x, "h": h, "mask": None}
        a = _leaky(h) if cfg.activation == "leaky-relu" else h
        if rng is not None and cfg.net_dropout > 0.0:
            keep = 1.0 - cfg.net_dropout
            rec["mask"] = (rng.random(a.shape) < keep) / keep
            a = a * rec["mask"]
        caches.append(rec)
        x = a
    return x


def _chain_backward(dout, params, prefix, depth, cfg, caches, grads):
    dx = dout
    for i in reversed(range(depth)):
        rec = caches[i]
        da = dx if rec["mask"] is None else dx * rec["mask"]
        dh = da * _leaky_grad(rec["h"]) if cfg.activation == "leaky-relu" else da
        _acc(grads, f"{prefix}.{i}.w", rec["x"].T @ dh)
        _acc(grads, f"{prefix}.{i}.b", dh.sum(axis=0))
        dx = dh @ params[f"{prefix}.{i}.w"].T
    return dx


def project(x: np.ndarray, params: dict, cfg, rng=None):
    """Head pass: (B, input_dim) -> (B, output_dim) with cached activations.

    The head's first layer is non-final (activation/dropout apply under the
    ablations); its second is a plain linear output.
    """
    h0 = x @ params["proj.0.w"] + params["proj.0.b"]
    a0 = _leaky(h0) if cfg.activation == "leaky-relu" else h0
    mask = None
    if rng is not None and cfg.net_dropout > 0.0:
        keep = 1.0 - cfg.net_dropout
        mask = (rng.random(a0.shape) < keep) / keep
        a0 = a0 * mask
    out = a0 @ params["proj.1.w"] + params["proj.1.b"]
    return out, {"x": x, "h0": h0, "a0": a0, "mask": mask}


def project_backward(dout: np.ndarray, params: dict, cfg, cache: dict, grads: dict):
    """Accumulate head gradients; returns the gradient w.r.t. the input rows."""
    _acc(grads, "proj.1.w", cache["a0"].T @ dout)
    _acc(grads, "proj.1.b", dout.sum(axis=0))
    da0 = dout @ params["proj.1.w"].T
    if cache["mask"] is not None:
        da0 = da0 * cache["mask"]
    dh0 = da0 * _leaky_grad(cache["h0"]) if cfg.activation == "leaky-relu" else da0
    _acc(grads, "proj.0.w", cache["x"].T @ dh0)
    _acc(grads, "proj.0.b", dh0.sum(axis=0))
    return dh0 @ params["proj.0.w"].T


def forward(u: np.ndarray, v: np.ndarray, params: dict, cfg, rng=None):
    """Score a batch of projected (user, item) pairs; returns (scores, cache)."""
    cache: dict = {"u": u, "v": v}
    if cfg.matching == "inner":
        y = np.einsum("bd,bd->b", u, v)
    else:
        parts = []
        if cfg.matching == "combined":
            tu: list = []
            tv: list = []
            h_u = _run_chain(u, params, "rl_user", cfg.rl_depth, cfg, rng, tu)
            item_prefix = "rl_user" if cfg.share_towers else "rl_item"
            h_v = _run_chain(v, params, item_prefix, cfg.rl_depth, cfg, rng, tv)
            cache.update(tu=tu, tv=tv, h_u=h_u, h_v=h_v)
            parts.append(h_u * h_v)
        ml: list = []
        z0 = np.concatenate([u, v], axis=1)
        h_ml = _run_chain(z0, params, "ml", cfg.ml_depth, cfg, rng, ml)
        cache["ml"] = ml
        parts.append(h_ml)
        f = np.concatenate(parts, axis=1) if len(parts) > 1 else parts[0]
        cache["f"] = f
        y = f @ params["fuse.w"] + params["fuse.b"][0]
    if not np.isfinite(y).all():
        raise FloatingPointError("non-finite score in forward pass")
    return y, cache


def backward(dy: np.ndarray, params: dict, cfg, cache: dict):
    """Exact gradients for a batch given upstream dL/dscore.

    Returns (parameter grads, dL/du, dL/dv) where u, v are the projected
    vectors passed to forward.
    """
    grads: dict = {}
    u, v = cache["u"], cache["v"]
    if cfg.matching == "inner":
        return grads, dy[:, None] * v, dy[:, None] * u

    f = cache["f"]
    _acc(grads, "fuse.w", f.T @ dy)
    _acc(grads, "fuse.b", np.array([dy.sum()]))
    df = np.outer(dy, params["fuse.w"])

    du_rl = dv_rl = 0.0
    if cfg.matching == "combined":
        rl_dim = cache["h_u"].shape[1]
        d_hrl, d_hml = df[:, :rl_dim], df[:, rl_dim:]
        d_hu = d_hrl * cache["h_v"]  # product rule through h_u * h_v
        d_hv = d_hrl * cache["h_u"]
        du_rl = _chain_backward(d_hu, params, "rl_user", cfg.rl_depth, cfg, cache["tu"], grads)
        item_prefix = "rl_user" if cfg.share_towers else "rl_item"
        dv_rl = _chain_backward(d_hv, params, item_prefix, cfg.rl_depth, cfg, cache["tv"], grads)
    else:
        d_hml = df
    dz0 = _chain_backward(d_hml, params, "ml", cfg.ml_depth, cfg, cache["ml"], grads)
    d = u.shape[1]
    return grads, dz0[:, :d] + du_rl, dz0[:, d:] + dv_rl


def score_pairs(e_user_rows, e_item_rows, params, cfg) -> np.ndarray:
    """Evaluation-mode scoring straight from propagated embedding rows."""
    u, _ = project(e_user_rows, params, cfg)
    v, _ = project(e_item_rows, params, cfg)
    y, _ = forward(u, v, params, cfg)
    return y


def l2_penalty(params: dict) -> float:
    return float(sum(np.sum(p * p) for p in params.values()))


def zeros_like_params(params: dict) -> dict:
    return {name: np.zeros_like(p) for name, p in params.items()}


def save_checkpoint(params: dict, target) -> None:
    """Versioned binary dump of named tensors; round-trips bit-exactly."""
    with open(target, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", CHECKPOINT_VERSION))
        for name in sorted(params):
            arr = np.ascontiguousarray(params[name], dtype=np.float64)
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", arr.ndim))
            for dim in arr.shape:
                fh.write(struct.pack("<Q", dim))
            fh.write(arr.tobytes())


def load_checkpoint(source) -> dict:
    data = Path(source).read_bytes() if isinstance(source, (str, Path)) else source.read()
    if len(data) < 8:
        raise CheckpointError(len(data), "truncated header")
    if data[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError(0, f"bad magic {data[:4]!r}")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(4, f"unsupported version {version}")
    offset = 8
    params: dict = {}
    while offset < len(data):
        if offset + 4 > len(data):
            raise CheckpointError(offset, "truncated tensor name length")
        (name_len,) = struct.unpack_from("<I", data, offset)
        offset += 4
        if offset + name_len > len(data):
            raise CheckpointError(offset, "truncated tensor name")
        name = data[offset : offset + name_len].decode("utf-8")
        offset += name_len
        if offset + 4 > len(data):
            raise CheckpointError(offset, "truncated tensor rank")
        (rank,) = struct.unpack_from("<I", data, offset)
        offset += 4
        if offset + 8 * rank > len(data):
            raise CheckpointError(offset, "truncated tensor dims")
        shape = struct.unpack_from(f"<{rank}Q", data, offset) if rank else ()
        offset += 8 * rank
        count = int(np.prod(shape, dtype=np.int64)) if rank else 1
        nbytes = 8 * count
        if offset + nbytes > len(data):
            raise CheckpointError(offset, f"truncated data for tensor {name!r}")
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=offset).copy()
        params[name] = arr.reshape(shape)
        offset += nbytes
    return params
