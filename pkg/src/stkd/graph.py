"""Spatial-temporal knowledge graph: build, store, sample.

Entities are users, takeaways, and attribute values packed into one id space:
users occupy [0, |U|), takeaways [|U|, |U|+|V|) (so the takeaway block doubles
as the teacher's item-embedding table), attribute values follow. Relations are
time buckets (weekday x hour, 168), distance buckets (16), and one relation
per attribute field. Triples are stored undirected (both directions carry the
relation id) in CSR form.

User-takeaway triples come only from purchases visible to training: for users
with at least three purchases the last two (the validation and test targets)
are excluded. Attribute triples come from every cleaned event.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .config import STREAM_SUBGRAPH, rng_for
from .errors import ConsistencyError
from .events import PurchaseEvent, Vocab
from .geo import (N_DISTANCE_BUCKETS, bucketize_distance, geohash6_centroid,
                  spherical_distance)

GRAPH_FORMAT_VERSION = 1

N_TIME_BUCKETS = 7 * 24  # weekday x hour-of-day, UTC


def time_bucket(timestamp: int) -> int:
    """Weekday(0=Monday)*24 + hour, computed in UTC."""
    tm = time.gmtime(timestamp)
    return tm.tm_wday * 24 + tm.tm_hour


class Stkg:
    """Immutable typed graph over users, takeaways, and attribute values."""

    def __init__(self, n_users: int, n_takeaways: int,
                 attr_entities: list[tuple[str, str]],
                 relations: list[str],
                 indptr: np.ndarray, neighbors: np.ndarray, rels: np.ndarray,
                 family_counts: dict[str, int], vocab_hash: str = ""):
        self.n_users = n_users
        self.n_takeaways = n_takeaways
        self.attr_entities = attr_entities
        self.attr_entity_index = {key: n_users + n_takeaways + i
                                  for i, key in enumerate(attr_entities)}
        self.relations = relations
        self.relation_index = {key: i for i, key in enumerate(relations)}
        self.indptr = indptr
        self.neighbors = neighbors
        self.rels = rels
        self.family_counts = family_counts
        self.vocab_hash = vocab_hash

    @property
    def n_entities(self) -> int:
        return self.n_users + self.n_takeaways + len(self.attr_entities)

    @property
    def n_relations(self) -> int:
        return len(self.relations)

    @property
    def n_triples(self) -> int:
        return int(self.neighbors.shape[0]) // 2

    def user_entity(self, user_id: int) -> int:
        return user_id - 1

    def takeaway_entity(self, item_id: int) -> int:
        return self.n_users + item_id - 1

    def degree(self, entity: int) -> int:
        return int(self.indptr[entity + 1] - self.indptr[entity])

    def neighborhood(self, entity: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[entity], self.indptr[entity + 1]
        return self.neighbors[lo:hi], self.rels[lo:hi]

    def save(self, path: str) -> None:
        np.savez_compressed(
            str(path) if str(path).endswith(".npz") else str(path) + ".npz",
            format_version=np.int64(GRAPH_FORMAT_VERSION),
            n_users=np.int64(self.n_users),
            n_takeaways=np.int64(self.n_takeaways),
            attr_entities=np.array(
                [f"{f}\x00{v}" for f, v in self.attr_entities], dtype=object),
            relations=np.array(self.relations, dtype=object),
            indptr=self.indptr, neighbors=self.neighbors, rels=self.rels,
            family_counts=np.bytes_(json.dumps(self.family_counts).encode()),
            vocab_hash=np.bytes_(self.vocab_hash.encode()))

    @classmethod
    def load(cls, path: str) -> "Stkg":
        with np.load(path, allow_pickle=True) as z:
            version = int(z["format_version"])
            if version != GRAPH_FORMAT_VERSION:
                raise ConsistencyError(
                    f"graph file version {version} != supported "
                    f"{GRAPH_FORMAT_VERSION}")
            attr_entities = [tuple(s.split("\x00", 1))
                             for s in z["attr_entities"].tolist()]
            return cls(n_users=int(z["n_users"]),
                       n_takeaways=int(z["n_takeaways"]),
                       attr_entities=attr_entities,
                       relations=list(z["relations"].tolist()),
                       indptr=z["indptr"], neighbors=z["neighbors"],
                       rels=z["rels"],
                       family_counts=json.loads(bytes(z["family_counts"])),
                       vocab_hash=bytes(z["vocab_hash"]).decode())


def training_purchase_counts(events_per_user: dict[int, int]) -> dict[int, int]:
    """How many leading purchases of each user are visible to training."""
    return {u: (p - 2 if p >= 3 else p) for u, p in events_per_user.items()}


def build_stkg(events: list[PurchaseEvent], vocab: Vocab) -> Stkg:
    """Assemble the four triple families and index them as an undirected CSR.

    Raises ConsistencyError if an event references a key missing from vocab.
    """
    n_users, n_takeaways = vocab.n_users, vocab.n_takeaways
    attr_index: dict[tuple[str, str], int] = {}
    relations: list[str] = []
    relation_index: dict[str, int] = {}

    def rel_id(key: str) -> int:
        if key not in relation_index:
            relation_index[key] = len(relations)
            relations.append(key)
        return relation_index[key]

    def attr_entity(field_name: str, value: str) -> int:
        key = (field_name, value)
        if key not in attr_index:
            attr_index[key] = n_users + n_takeaways + len(attr_index)
        return attr_index[key]

    def check(key, table, kind):
        if key not in table:
            raise ConsistencyError(f"{kind} {key!r} not registered in vocab")
        return table[key]

    per_user_seen: dict[int, int] = {}
    counts: dict[int, int] = {}
    for ev in events:
        uid = check(ev.user_id, vocab.users, "user")
        counts[uid] = counts.get(uid, 0) + 1
    visible = training_purchase_counts(counts)

    triples: set[tuple[int, int, int]] = set()
    family = {"time": 0, "dist": 0, "attr": 0}

    for ev in events:
        uid = check(ev.user_id, vocab.users, "user")
        iid = check(ev.takeaway_id, vocab.takeaways, "takeaway")
        u_ent = uid - 1
        v_ent = n_users + iid - 1

        rank = per_user_seen.get(uid, 0)
        per_user_seen[uid] = rank + 1
        if rank < visible[uid]:
            t = (u_ent, rel_id(f"time:{time_bucket(ev.timestamp)}"), v_ent)
            if t not in triples:
                triples.add(t)
                family["time"] += 1
            km = spherical_distance(geohash6_centroid(ev.user_geohash6),
                                    geohash6_centroid(ev.shop_geohash6))
            t = (u_ent, rel_id(f"dist:{bucketize_distance(km)}"), v_ent)
            if t not in triples:
                triples.add(t)
                family["dist"] += 1

        # Attribute triples come from every cleaned event. Fields named
        # "user_..." describe the user; everything else describes the takeaway.
        for fname in sorted(ev.attributes):
            head = u_ent if fname.startswith("user_") else v_ent
            t = (head, rel_id(f"attr:{fname}"),
                 attr_entity(fname, ev.attributes[fname]))
            if t not in triples:
                triples.add(t)
                family["attr"] += 1

    n_entities = n_users + n_takeaways + len(attr_index)
    if triples:
        arr = np.array(sorted(triples), dtype=np.int64)
        src = np.concatenate([arr[:, 0], arr[:, 2]])
        dst = np.concatenate([arr[:, 2], arr[:, 0]])
        rel = np.concatenate([arr[:, 1], arr[:, 1]])
        order = np.lexsort((rel, dst, src))
        src, dst, rel = src[order], dst[order], rel[order]
        indptr = np.zeros(n_entities + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        indptr = np.cumsum(indptr)
    else:
        src = dst = rel = np.zeros(0, dtype=np.int64)
        indptr = np.zeros(n_entities + 1, dtype=np.int64)

    return Stkg(n_users=n_users, n_takeaways=n_takeaways,
                attr_entities=sorted(attr_index,
                                     key=lambda k: attr_index[k]),
                relations=relations,
                indptr=indptr, neighbors=dst, rels=rel,
                family_counts=family, vocab_hash=vocab.content_hash())


@dataclass
class Subgraph:
    """Per-sample neighborhood: local node table plus sampled directed edges."""

    nodes: np.ndarray            # (N,) global entity ids in insertion order
    centers: np.ndarray          # (n,) local index per position, -1 for PAD
    user_index: int              # local index of the user node
    edges: np.ndarray            # (E, 3) rows of (parent_local, rel, child_local)
    n_cold: int = 0

    @property
    def n_nodes(self) -> int:
        return int(self.nodes.shape[0])


def sample_subgraph(item_ids: np.ndarray, user_id: int, stkg: Stkg,
                    fanouts: tuple[int, int], seed: int, sid: int) -> Subgraph:
    """Sample a depth-m neighborhood around a sequence's items plus its user.

    Each distinct non-pad center samples min(s1, degree) neighbors uniformly
    without replacement; every newly reached node is expanded once at the next
    depth with fanout s_l. Deterministic in (seed, sid). Entities missing from
    the graph or with zero degree become isolated nodes (counted as cold).
    """
    if any(s < 1 for s in fanouts):
        raise ConsistencyError(f"fanouts must be positive, got {fanouts}")
    rng = rng_for(seed, STREAM_SUBGRAPH, sid)

    nodes: list[int] = []
    local: dict[int, int] = {}
    n_cold = 0

    def add_node(ent: int) -> int:
        if ent not in local:
            local[ent] = len(nodes)
            nodes.append(ent)
        return local[ent]

    n_entities = stkg.n_entities
    centers = np.full(item_ids.shape[0], -1, dtype=np.int64)
    frontier: list[int] = []
    for pos, item in enumerate(item_ids):
        if item == 0:
            continue
        ent = stkg.takeaway_entity(int(item))
        if ent >= n_entities:
            raise ConsistencyError(f"takeaway id {item} outside the graph")
        known = ent in local
        centers[pos] = add_node(ent)
        if not known:
            frontier.append(ent)

    user_ent = stkg.user_entity(user_id)
    if not (0 <= user_ent < stkg.n_users):
        raise ConsistencyError(f"user id {user_id} outside the graph")
    user_known = user_ent in local
    user_index = add_node(user_ent)
    if not user_known:
        frontier.append(user_ent)
    # the user node contributes its embedding but is not expanded
    no_expand = {user_ent}

    edge_rows: list[tuple[int, int, int]] = []
    expanded: set[int] = set(no_expand)
    for s in fanouts:
        next_frontier: list[int] = []
        for ent in frontier:
            if ent in expanded:
                continue
            expanded.add(ent)
            nbrs, rels = stkg.neighborhood(ent)
            deg = nbrs.shape[0]
            if deg == 0:
                n_cold += 1
                continue
            if deg <= s:
                picked = np.arange(deg)
            else:
                picked = rng.choice(deg, size=s, replace=False)
                picked.sort()
            parent_local = local[ent]
            for k in picked:
                child = int(nbrs[k])
                if child not in local:
                    next_frontier.append(child)
                child_local = add_node(child)
                edge_rows.append((parent_local, int(rels[k]), child_local))
        frontier = next_frontier

    edges = (np.array(edge_rows, dtype=np.int64) if edge_rows
             else np.zeros((0, 3), dtype=np.int64))
    return Subgraph(nodes=np.array(nodes, dtype=np.int64), centers=centers,
                    user_index=user_index, edges=edges, n_cold=n_cold)


@dataclass
class GraphStats:
    """Counts mirroring the graph's composition, plus a degree histogram."""

    n_entities: int = 0
    n_users: int = 0
    n_takeaways: int = 0
    n_attr_values: int = 0
    n_relations: int = 0
    n_triples: int = 0
    triples_by_family: dict = field(default_factory=dict)
    degree_histogram: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)


def graph_stats(stkg: Stkg) -> GraphStats:
    degrees = np.diff(stkg.indptr)
    hist = (np.bincount(degrees.astype(np.int64)).tolist()
            if degrees.size else [])
    return GraphStats(
        n_entities=stkg.n_entities,
        n_users=stkg.n_users,
        n_takeaways=stkg.n_takeaways,
        n_attr_values=len(stkg.attr_entities),
        n_relations=stkg.n_relations,
        n_triples=stkg.n_triples,
        triples_by_family=dict(stkg.family_counts),
        degree_histogram=hist)
