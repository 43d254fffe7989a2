"""Run configuration: every hyperparameter and ablation switch in one place.

A RunConfig plus a seed fully determines a run.  The dataclass round-trips
through a flat dict (JSON-friendly) so manifests can echo the resolved
configuration and sweeps can patch single fields.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

MATCHING_VARIANTS = ("inner", "mlp", "combined")
ACTIVATIONS = ("none", "leaky-relu")


@dataclass
class RunConfig:
    # inputs
    reviews: str | None = None
    meta: str | None = None
    glove: str | None = None
    embeddings: str | None = None  # precomputed interchange file
    out_dir: str | None = None

    # embedding network
    input_dim: int | None = None  # inferred from the text source when None
    hidden: int = 128
    output_dim: int = 64
    layers: int = 4
    use_layer_combination: bool = True
    use_initial_residual: bool = True
    self_connection: bool = False
    homogeneous: bool = False
    node_dropout: float = 0.0

    # scoring network
    rl_depth: int = 1
    ml_depth: int = 2
    matching: str = "combined"
    activation: str = "none"
    share_towers: bool = False
    net_dropout: float = 0.0

    # text sources
    pretrain: bool = True  # False: seeded random init of text nodes
    include_comments: bool = True
    include_descriptions: bool = True

    # optimization
    l2: float = 1e-4
    lr: float = 1e-3
    batch: int = 1024
    epochs: int = 20
    seed: int = 0

    # evaluation
    eval_k: list = field(default_factory=lambda: [10, 20])
    num_negatives: int = 99
    eval_every: int = 1
    deterministic: bool = False

    def validate(self) -> "RunConfig":
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.l2 < 0:
            raise ValueError("l2 strength must be non-negative")
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        if self.matching not in MATCHING_VARIANTS:
            raise ValueError(f"matching must be one of {MATCHING_VARIANTS}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        for name in ("hidden", "output_dim", "batch"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.input_dim is not None and self.input_dim <= 0:
            raise ValueError("input_dim must be positive")
        if self.rl_depth < 0 or self.ml_depth < 0:
            raise ValueError("branch depths must be >= 0")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        for name in ("node_dropout", "net_dropout"):
            p = getattr(self, name)
            if not 0.0 <= p < 1.0:
                raise ValueError(f"{name} must be in [0, 1)")
        if not self.eval_k or any(k <= 0 for k in self.eval_k):
            raise ValueError("eval_k must be positive integers")
        if self.num_negatives < 1:
            raise ValueError("num_negatives must be >= 1")
        return self

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["eval_k"] = list(self.eval_k)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data).validate()
