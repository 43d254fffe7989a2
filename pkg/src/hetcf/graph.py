"""Heterogeneous graph construction over user/item/description/comment nodes.

Nodes of the four kinds share one contiguous global id space.  Every
undirected association is stored as two directed relations, each edge carrying
a precomputed symmetric normalization coefficient
``1 / sqrt(deg(src) * deg(dst))`` where the degrees are relation-specific by
default (total degrees under the homogeneous ablation).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import DescriptionRecord, InteractionCorpus, ReviewRecord

logger = logging.getLogger(__name__)

KIND_USER, KIND_ITEM, KIND_DESCRIPTION, KIND_COMMENT = range(4)
KIND_NAMES = ("user", "item", "description", "comment")

# forward name -> (inverse name, source kind, destination kind)
RELATION_SCHEMA = {
    "interacts": ("interacted_by", KIND_USER, KIND_ITEM),
    "interacted_by": ("interacts", KIND_ITEM, KIND_USER),
    "writes": ("written_by", KIND_USER, KIND_COMMENT),
    "written_by": ("writes", KIND_COMMENT, KIND_USER),
    "about": ("has_comment", KIND_COMMENT, KIND_ITEM),
    "has_comment": ("about", KIND_ITEM, KIND_COMMENT),
    "has_description": ("describes", KIND_ITEM, KIND_DESCRIPTION),
    "describes": ("has_description", KIND_DESCRIPTION, KIND_ITEM),
}
SELF_RELATION = "self"


@dataclass(frozen=True)
class NodeIndex:
    """Counts per node kind plus the global-id layout [users|items|descs|comments]."""

    num_users: int
    num_items: int
    num_descriptions: int
    num_comments: int

    @property
    def total(self) -> int:
        return self.num_users + self.num_items + self.num_descriptions + self.num_comments

    def user(self, m):
        return m

    def item(self, n):
        return self.num_users + n

    def description(self, p):
        return self.num_users + self.num_items + p

    def comment(self, q):
        return self.num_users + self.num_items + self.num_descriptions + q

    def kind_of(self, gid: int) -> int:
        if gid < 0 or gid >= self.total:
            raise IndexError(f"global node id {gid} out of range")
        if gid < self.num_users:
            return KIND_USER
        gid -= self.num_users
        if gid < self.num_items:
            return KIND_ITEM
        gid -= self.num_items
        return KIND_DESCRIPTION if gid < self.num_descriptions else KIND_COMMENT

    def offset(self, kind: int) -> int:
        return (
            0,
            self.num_users,
            self.num_users + self.num_items,
            self.num_users + self.num_items + self.num_descriptions,
        )[kind]


@dataclass
class Relation:
    """One directed typed edge list; messages flow src -> dst during propagation."""

    name: str
    inverse: str
    src: np.ndarray  # global ids, int64
    dst: np.ndarray
    coef: np.ndarray  # float64, one per edge

    def __len__(self) -> int:
        return self.src.size


@dataclass
class HeteroGraph:
    node_index: NodeIndex
    relations: dict  # name -> Relation
    total_degree: np.ndarray  # per global node, edges incident across all associations
    desc_items: np.ndarray  # description ordinal p -> item n
    comment_users: np.ndarray  # comment ordinal q -> user m
    comment_items: np.ndarray  # comment ordinal q -> item n
    homogeneous: bool = False
    _edge_lookup: dict = field(default_factory=dict, repr=False)

    @property
    def num_nodes(self) -> int:
        return self.node_index.total

    @property
    def num_edges(self) -> int:
        return sum(len(r) for r in self.relations.values())

    def norm_coefficient(self, relation: str, e_i: int, e_j: int) -> float:
        """Coefficient on the existing edge (e_i -> e_j) under the named relation."""
        rel = self.relations[relation]
        lookup = self._edge_lookup.get(relation)
        if lookup is None:
            lookup = {
                (int(s), int(d)): float(c)
                for s, d, c in zip(rel.src, rel.dst, rel.coef)
            }
            self._edge_lookup[relation] = lookup
        key = (int(e_i), int(e_j))
        assert key in lookup, f"no edge {e_i}->{e_j} under relation {relation!r}"
        return lookup[key]

    def merged_edges(self):
        """All directed edges concatenated in canonical (dst, src) order.

        The fixed ordering makes every downstream aggregation reproducible to
        the bit regardless of construction order.
        """
        if not self.relations:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty, np.zeros(0, dtype=np.float64)
        src = np.concatenate([r.src for r in self.relations.values()])
        dst = np.concatenate([r.dst for r in self.relations.values()])
        coef = np.concatenate([r.coef for r in self.relations.values()])
        order = np.lexsort((src, dst))
        return src[order], dst[order], coef[order]

    def merged_csr(self):
        """(indptr, indices, data) with one row per destination node."""
        src, dst, coef = self.merged_edges()
        counts = np.bincount(dst, minlength=self.num_nodes)
        indptr = np.zeros(self.num_nodes + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return indptr, src.astype(np.int64), coef

    def summary(self) -> dict:
        ni = self.node_index
        return {
            "nodes": {
                "user": ni.num_users,
                "item": ni.num_items,
                "description": ni.num_descriptions,
                "comment": ni.num_comments,
                "total": ni.total,
            },
            "relations": {name: len(rel) for name, rel in self.relations.items()},
            "homogeneous": self.homogeneous,
        }

    def write_summary(self, target) -> None:
        Path(target).write_text(json.dumps(self.summary(), indent=2, sort_keys=True))


def _select_text_nodes(
    corpus: InteractionCorpus,
    reviews,
    descriptions,
    include_comments: bool,
    include_descriptions: bool,
):
    """Pick the description and comment nodes for the graph.

    Returns (desc_entries, comment_entries) where desc_entries is a list of
    (item n, text) ordered by ascending item index (first record per item key
    wins) and comment_entries is a list of (user m, item n, text) in review
    input order.  Shared by graph construction and by the text-manifest
    export so the two can never disagree on node ordinals.
    """
    desc_entries: list = []
    if include_descriptions:
        by_item: dict = {}
        dangling = 0
        for rec in descriptions:
            n = corpus.item_index.get(rec.item_key)
            if n is None:
                dangling += 1
                continue
            if rec.description_text and n not in by_item:
                by_item[n] = rec.description_text
        if dangling:
            logger.warning(
                "dropped %d description record(s) for unknown items", dangling
            )
        desc_entries = [(n, by_item[n]) for n in sorted(by_item)]

    comment_entries: list = []
    if include_comments:
        train_pairs = {(int(m), int(n)) for m, n, _ in corpus.train}
        dangling = 0
        for rec in reviews:
            m = corpus.user_index.get(rec.user_key)
            n = corpus.item_index.get(rec.item_key)
            if m is None or n is None:
                dangling += 1
                continue
            if (m, n) not in train_pairs:
                continue  # held-out pairs contribute no comment node
            if rec.comment_text:
                comment_entries.append((m, n, rec.comment_text))
        if dangling:
            logger.warning("dropped %d review record(s) for unknown keys", dangling)

    return desc_entries, comment_entries


def collect_node_texts(
    corpus: InteractionCorpus,
    reviews,
    descriptions,
    include_comments: bool = True,
    include_descriptions: bool = True,
):
    """Texts per description ordinal and per comment ordinal, in graph order."""
    desc_entries, comment_entries = _select_text_nodes(
        corpus, reviews, descriptions, include_comments, include_descriptions
    )
    return (
        [text for _, text in desc_entries],
        [text for _, _, text in comment_entries],
    )


def _coef(deg_src: np.ndarray, deg_dst: np.ndarray) -> np.ndarray:
    assert (deg_src > 0).all() and (deg_dst > 0).all(), "edge endpoint with zero degree"
    return 1.0 / np.sqrt(deg_src.astype(np.float64) * deg_dst.astype(np.float64))


def build_graph(
    corpus: InteractionCorpus,
    reviews,
    descriptions,
    include_comments: bool = True,
    include_descriptions: bool = True,
    homogeneous: bool = False,
    self_connection: bool = False,
) -> HeteroGraph:
    """Assemble the heterograph from the train split and the selected texts.

    Only train interactions contribute edges.  Each review with non-empty
    text on a train pair becomes one comment node (a user reviewing the same
    item twice yields two comment nodes but a single interaction edge); each
    item's first non-empty description becomes one description node.
    """
    desc_entries, comment_entries = _select_text_nodes(
        corpus, reviews, descriptions, include_comments, include_descriptions
    )
    ni = NodeIndex(
        num_users=corpus.num_users,
        num_items=corpus.num_items,
        num_descriptions=len(desc_entries),
        num_comments=len(comment_entries),
    )

    ui_user = corpus.train[:, 0].astype(np.int64)
    ui_item = corpus.train[:, 1].astype(np.int64)
    desc_items = np.array([n for n, _ in desc_entries], dtype=np.int64)
    comment_users = np.array([m for m, _, _ in comment_entries], dtype=np.int64)
    comment_items = np.array([n for _, n, _ in comment_entries], dtype=np.int64)

    # Association endpoints as global ids.
    g_ui_u = ui_user
    g_ui_v = ni.item(ui_item)
    g_vd_v = ni.item(desc_items)
    g_vd_d = ni.description(np.arange(len(desc_entries), dtype=np.int64))
    g_uc_u = comment_users
    g_uc_c = ni.comment(np.arange(len(comment_entries), dtype=np.int64))
    g_cv_c = g_uc_c
    g_cv_v = ni.item(comment_items)

    total_degree = np.zeros(ni.total, dtype=np.int64)
    for a, b in ((g_ui_u, g_ui_v), (g_uc_u, g_uc_c), (g_cv_c, g_cv_v), (g_vd_v, g_vd_d)):
        total_degree += np.bincount(a, minlength=ni.total)
        total_degree += np.bincount(b, minlength=ni.total)

    def association_coef(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if homogeneous:
            return _coef(total_degree[a], total_degree[b])
        deg_a = np.bincount(a, minlength=ni.total)
        deg_b = np.bincount(b, minlength=ni.total)
        return _coef(deg_a[a], deg_b[b])

    relations: dict = {}

    def add_pair(forward: str, a: np.ndarray, b: np.ndarray) -> None:
        inverse = RELATION_SCHEMA[forward][0]
        coef = association_coef(a, b)
        relations[forward] = Relation(forward, inverse, a.copy(), b.copy(), coef)
        relations[inverse] = Relation(inverse, forward, b.copy(), a.copy(), coef.copy())

    add_pair("interacts", g_ui_u, g_ui_v)
    if include_comments:
        add_pair("writes", g_uc_u, g_uc_c)
        add_pair("about", g_cv_c, g_cv_v)
    if include_descriptions:
        add_pair("has_description", g_vd_v, g_vd_d)

    if self_connection:
        ids = np.arange(ni.total, dtype=np.int64)
        # One loop per node, normalized as if the loop raised the node degree.
        coef = 1.0 / (total_degree.astype(np.float64) + 1.0)
        relations[SELF_RELATION] = Relation(
            SELF_RELATION, SELF_RELATION, ids, ids.copy(), coef
        )

    return HeteroGraph(
        node_index=ni,
        relations=relations,
        total_degree=total_degree,
        desc_items=desc_items,
        comment_users=comment_users,
        comment_items=comment_items,
        homogeneous=homogeneous,
    )
