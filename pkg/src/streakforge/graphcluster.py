"""Weighted-graph community detection and field/topic assignment.

Two quality functions run inside the same local-move optimizer:

* resolution-scaled modularity, ``Q = sum_c [L_c/m - gamma*(D_c/(2m))^2]``
* constant Potts model (CPM), ``Q = sum_c [w_c - gamma*n_c*(n_c-1)/2]``

where ``L_c``/``w_c`` is the intra-community edge weight (each edge once),
``D_c`` the weighted degree sum, ``n_c`` the community size and ``m`` the
total edge weight. The optimizer is Louvain-style: seeded sweeps of
single-node moves followed by graph aggregation, repeated until no move
improves quality.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .corpus import AuthorCareer

Node = Hashable
_GAIN_EPS = 1e-12


class WeightedGraph:
    """Undirected graph with positive edge weights and no self-loops."""

    def __init__(self) -> None:
        self._adj: dict[Node, dict[Node, float]] = {}

    def add_node(self, u: Node) -> None:
        self._adj.setdefault(u, {})

    def add_edge(self, u: Node, v: Node, weight: float = 1.0) -> None:
        """Insert or accumulate an edge; self-loops and w <= 0 are rejected."""
        if u == v:
            raise ValueError(f"self-loop on {u!r}")
        if weight <= 0:
            raise ValueError("edge weight must be positive")
        self._adj.setdefault(u, {})
        self._adj.setdefault(v, {})
        self._adj[u][v] = self._adj[u].get(v, 0.0) + weight
        self._adj[v][u] = self._adj[v].get(u, 0.0) + weight

    @classmethod
    def from_edges(
        cls, edges: Iterable[tuple[Node, Node, float]], nodes: Iterable[Node] = ()
    ) -> "WeightedGraph":
        g = cls()
        for u in nodes:
            g.add_node(u)
        for u, v, w in edges:
            g.add_edge(u, v, w)
        return g

    def nodes(self) -> list[Node]:
        return list(self._adj)

    def neighbors(self, u: Node) -> dict[Node, float]:
        return self._adj[u]

    def has_node(self, u: Node) -> bool:
        return u in self._adj

    def edges(self) -> Iterable[tuple[Node, Node, float]]:
        """Each undirected edge exactly once."""
        seen: set[Node] = set()
        for u, nbrs in self._adj.items():
            for v, w in nbrs.items():
                if v not in seen:
                    yield u, v, w
            seen.add(u)

    @property
    def n_nodes(self) -> int:
        return len(self._adj)

    @property
    def total_weight(self) -> float:
        return sum(w for _, _, w in self.edges())

    def degree(self, u: Node) -> float:
        return sum(self._adj[u].values())


@dataclass(frozen=True)
class Partition:
    """A community assignment plus the quality it attains."""

    membership: dict[Node, int]
    sizes: dict[int, int]
    quality: float
    quality_kind: str
    gamma: float
    pass_qualities: tuple[float, ...] = ()


def cpm_quality(graph: WeightedGraph, membership: Mapping[Node, int], gamma: float) -> float:
    intra: dict[int, float] = {}
    for u, v, w in graph.edges():
        if membership[u] == membership[v]:
            c = membership[u]
            intra[c] = intra.get(c, 0.0) + w
    sizes: dict[int, int] = {}
    for u in graph.nodes():
        c = membership[u]
        sizes[c] = sizes.get(c, 0) + 1
    return sum(
        intra.get(c, 0.0) - gamma * n * (n - 1) / 2.0 for c, n in sizes.items()
    )


def modularity_quality(
    graph: WeightedGraph, membership: Mapping[Node, int], gamma: float
) -> float:
    m = graph.total_weight
    if m == 0:
        return 0.0
    intra: dict[int, float] = {}
    for u, v, w in graph.edges():
        if membership[u] == membership[v]:
            c = membership[u]
            intra[c] = intra.get(c, 0.0) + w
    deg: dict[int, float] = {}
    for u in graph.nodes():
        c = membership[u]
        deg[c] = deg.get(c, 0.0) + graph.degree(u)
    communities = set(deg)
    return sum(
        intra.get(c, 0.0) / m - gamma * (deg[c] / (2.0 * m)) ** 2 for c in communities
    )


def quality_of(
    graph: WeightedGraph, membership: Mapping[Node, int], kind: str, gamma: float
) -> float:
    if kind == "cpm":
        return cpm_quality(graph, membership, gamma)
    if kind == "modularity":
        return modularity_quality(graph, membership, gamma)
    raise ValueError(f"unknown quality kind {kind!r}")


class _Level:
    """Integer-indexed working graph for one aggregation level.

    ``self_w[i]`` holds edge weight already internal to supernode i and
    ``size[i]`` the original node count, so CPM sizes and modularity degrees
    stay exact across aggregations.
    """

    def __init__(
        self,
        adj: list[dict[int, float]],
        self_w: list[float],
        size: list[int],
        deg: list[float],
    ) -> None:
        self.adj = adj
        self.self_w = self_w
        self.size = size
        self.deg = deg
        self.n = len(adj)


def _level_quality(level: _Level, comm: list[int], kind: str, gamma: float, m: float) -> float:
    intra: dict[int, float] = {}
    csize: dict[int, int] = {}
    cdeg: dict[int, float] = {}
    for i in range(level.n):
        c = comm[i]
        intra[c] = intra.get(c, 0.0) + level.self_w[i]
        csize[c] = csize.get(c, 0) + level.size[i]
        cdeg[c] = cdeg.get(c, 0.0) + level.deg[i]
        for j, w in level.adj[i].items():
            if j > i and comm[j] == c:
                intra[c] += w
    if kind == "cpm":
        return sum(intra.get(c, 0.0) - gamma * n * (n - 1) / 2.0 for c, n in csize.items())
    if m == 0:
        return 0.0
    return sum(
        intra.get(c, 0.0) / m - gamma * (cdeg[c] / (2.0 * m)) ** 2 for c in csize
    )


def _local_moves(
    level: _Level,
    kind: str,
    gamma: float,
    m: float,
    rng: np.random.Generator,
    pass_qualities: list[float] | None,
    init: list[int] | None = None,
) -> tuple[list[int], bool]:
    """Sweep single-node moves until a full pass makes none; returns membership.

    ``init`` seeds the starting communities (labels are compressed); the
    default is singletons. Pass qualities are recorded only when a list is
    supplied.
    """
    n = level.n
    if init is None:
        comm = list(range(n))
    else:
        relabel: dict[int, int] = {}
        comm = []
        for c in init:
            if c not in relabel:
                relabel[c] = len(relabel)
            comm.append(relabel[c])
    k = max(comm) + 1 if comm else 0
    csize = [0] * k
    cdeg = [0.0] * k
    size = level.size
    deg = level.deg
    adj = level.adj
    for i in range(n):
        csize[comm[i]] += size[i]
        cdeg[comm[i]] += deg[i]
    next_comm_id = k
    moved_any = False
    cpm = kind == "cpm"
    inv_m = 1.0 / m if m else 0.0
    inv_2m2 = gamma / (2.0 * m * m) if m else 0.0
    eps = _GAIN_EPS

    while True:
        moved_in_pass = False
        order = rng.permutation(n).tolist()
        for i in order:
            adj_i = adj[i]
            a = comm[i]
            links: dict[int, float] = {}
            get = links.get
            for j, w in adj_i.items():
                cj = comm[j]
                links[cj] = get(cj, 0.0) + w
            # detach i, then score re-insertion into each candidate community
            size_i = size[i]
            csize[a] -= size_i
            if cpm:
                g_i = gamma * size_i
                best_c = a
                best_g = links.get(a, 0.0) - g_i * csize[a]
                for c, w_to in links.items():
                    if c == a:
                        continue
                    g = w_to - g_i * csize[c]
                    if g > best_g + eps or (g > best_g - eps and c < best_c):
                        best_c, best_g = c, g
            else:
                deg_i = deg[i]
                cdeg[a] -= deg_i
                k1 = deg_i * inv_2m2
                best_c = a
                best_g = links.get(a, 0.0) * inv_m - k1 * cdeg[a]
                for c, w_to in links.items():
                    if c == a:
                        continue
                    g = w_to * inv_m - k1 * cdeg[c]
                    if g > best_g + eps or (g > best_g - eps and c < best_c):
                        best_c, best_g = c, g
            if 0.0 > best_g + eps:
                best_c = next_comm_id
                next_comm_id += 1
                csize.append(0)
                cdeg.append(0.0)
            if best_c != a:
                moved_in_pass = True
                moved_any = True
            comm[i] = best_c
            csize[best_c] += size_i
            if not cpm:
                cdeg[best_c] += deg_i
        if pass_qualities is not None:
            pass_qualities.append(_level_quality(level, comm, kind, gamma, m))
        if not moved_in_pass:
            break
    return comm, moved_any


def _aggregate(level: _Level, comm: list[int]) -> tuple[_Level, list[int]]:
    """Collapse communities into supernodes; returns new level and the
    node -> supernode index map."""
    ids = sorted(set(comm))
    remap = {c: k for k, c in enumerate(ids)}
    node_map = [remap[c] for c in comm]
    k = len(ids)
    adj: list[dict[int, float]] = [dict() for _ in range(k)]
    self_w = [0.0] * k
    size = [0] * k
    deg = [0.0] * k
    for i in range(level.n):
        ci = node_map[i]
        self_w[ci] += level.self_w[i]
        size[ci] += level.size[i]
        deg[ci] += level.deg[i]
        for j, w in level.adj[i].items():
            if j <= i:
                continue
            cj = node_map[j]
            if ci == cj:
                self_w[ci] += w
            else:
                adj[ci][cj] = adj[ci].get(cj, 0.0) + w
                adj[cj][ci] = adj[cj].get(ci, 0.0) + w
    return _Level(adj, self_w, size, deg), node_map


def _optimize_once(
    level0: _Level,
    quality_kind: str,
    gamma: float,
    m: float,
    rng: np.random.Generator,
    track: bool,
) -> tuple[list[int], list[float], float]:
    """One full optimization: alternate flat sweeps and aggregation chains.

    The closing flat sweep over original nodes guarantees the result is a
    local optimum under single-node moves. Returns the membership, per-pass
    qualities (empty when untracked), and the final quality.
    """
    n = level0.n
    pass_qualities: list[float] | None = [] if track else None
    assignment = list(range(n))
    while True:
        assignment, moved_flat = _local_moves(
            level0, quality_kind, gamma, m, rng, pass_qualities, init=assignment
        )
        chain_moved = False
        level, node_map = _aggregate(level0, assignment)
        level_of = [node_map[i] for i in range(n)]
        while level.n > 1:
            comm, moved = _local_moves(
                level, quality_kind, gamma, m, rng, pass_qualities
            )
            if not moved:
                break
            chain_moved = True
            level, node_map = _aggregate(level, comm)
            level_of = [node_map[j] for j in level_of]
        assignment = level_of
        if not moved_flat and not chain_moved:
            final_q = (
                pass_qualities[-1]
                if pass_qualities
                else _level_quality(level0, assignment, quality_kind, gamma, m)
            )
            return assignment, pass_qualities or [], final_q


def louvain(
    graph: WeightedGraph,
    quality_kind: str,
    gamma: float,
    seed: int = 0,
    starts: int = 4,
    track_passes: bool | None = None,
) -> Partition:
    """Community detection by seeded local moves plus aggregation.

    Runs ``starts`` independent optimizations (visit orders derived from the
    seed) and keeps the best; deterministic for a fixed seed. The returned
    quality is recomputed from the input graph and final membership.
    ``track_passes`` records per-pass quality (defaults to on for graphs of
    up to 10,000 nodes; tracking is observational and never changes the
    result).
    """
    if quality_kind not in ("cpm", "modularity"):
        raise ValueError(f"unknown quality kind {quality_kind!r}")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if starts < 1:
        raise ValueError("starts must be >= 1")
    nodes = sorted(graph.nodes())
    if not nodes:
        raise ValueError("graph is empty")
    index = {u: i for i, u in enumerate(nodes)}
    adj: list[dict[int, float]] = [dict() for _ in nodes]
    for u, v, w in graph.edges():
        adj[index[u]][index[v]] = w
        adj[index[v]][index[u]] = w
    deg = [sum(d.values()) for d in adj]
    m = sum(deg) / 2.0
    if m == 0.0:
        membership = {u: i for i, u in enumerate(nodes)}
        return Partition(
            membership=membership,
            sizes={i: 1 for i in range(len(nodes))},
            quality=quality_of(graph, membership, quality_kind, gamma),
            quality_kind=quality_kind,
            gamma=gamma,
            pass_qualities=(0.0,),
        )
    level0 = _Level(adj, [0.0] * len(nodes), [1] * len(nodes), deg)

    if track_passes is None:
        track_passes = len(nodes) <= 10_000
    best_assignment: list[int] | None = None
    best_passes: list[float] = []
    best_q = -float("inf")
    for r in range(starts):
        rng = np.random.default_rng([seed, r])
        assignment, passes, q = _optimize_once(
            level0, quality_kind, gamma, m, rng, track_passes
        )
        if q > best_q + 1e-12:
            best_assignment, best_passes, best_q = assignment, passes, q
    assert best_assignment is not None

    # relabel communities by first appearance over sorted node order
    relabel: dict[int, int] = {}
    membership: dict[Node, int] = {}
    for u in nodes:
        c = best_assignment[index[u]]
        if c not in relabel:
            relabel[c] = len(relabel)
        membership[u] = relabel[c]
    sizes: dict[int, int] = {}
    for c in membership.values():
        sizes[c] = sizes.get(c, 0) + 1
    quality = quality_of(graph, membership, quality_kind, gamma)
    return Partition(
        membership=membership,
        sizes=sizes,
        quality=quality,
        quality_kind=quality_kind,
        gamma=gamma,
        pass_qualities=tuple(best_passes),
    )


def assign_fields(
    citation_graph: WeightedGraph,
    gamma: float,
    min_size: int,
    seed: int = 0,
    starts: int = 1,
) -> dict[Node, int]:
    """CPM clustering followed by small-cluster absorption.

    Clusters below ``min_size`` are merged, smallest first, into the cluster
    they share the largest total edge weight with; a small cluster with no
    external edges falls back to the largest remaining cluster. Iterates
    until every cluster reaches ``min_size`` or one cluster remains.
    """
    if min_size < 1:
        raise ValueError("min_size must be >= 1")
    part = louvain(citation_graph, "cpm", gamma, seed, starts=starts)
    members: dict[int, set[Node]] = {}
    for u, c in part.membership.items():
        members.setdefault(c, set()).add(u)
    link: dict[int, dict[int, float]] = {c: {} for c in members}
    node_comm = dict(part.membership)
    for u, v, w in citation_graph.edges():
        cu, cv = node_comm[u], node_comm[v]
        if cu == cv:
            continue
        link[cu][cv] = link[cu].get(cv, 0.0) + w
        link[cv][cu] = link[cv].get(cu, 0.0) + w

    # absorb small clusters smallest-first; the heap carries (size, id)
    # entries with lazy invalidation on staleness
    heap = [(len(ms), c) for c, ms in members.items() if len(ms) < min_size]
    heapq.heapify(heap)
    while heap and len(members) > 1:
        csize, c = heapq.heappop(heap)
        if c not in members or len(members[c]) != csize:
            continue
        if link[c]:
            target = max(link[c].items(), key=lambda kv: (kv[1], -kv[0]))[0]
        else:
            target = max(
                (cc for cc in members if cc != c),
                key=lambda cc: (len(members[cc]), -cc),
            )
        members[target] |= members.pop(c)
        for nb, w in link.pop(c).items():
            if nb == target:
                continue
            link[nb].pop(c, None)
            link[nb][target] = link[nb].get(target, 0.0) + w
            link[target][nb] = link[target].get(nb, 0.0) + w
        link[target].pop(c, None)
        if len(members[target]) < min_size:
            heapq.heappush(heap, (len(members[target]), target))

    ordered = sorted(members.items(), key=lambda kv: (-len(kv[1]), min(map(str, kv[1]))))
    fields: dict[Node, int] = {}
    for fid, (_, ms) in enumerate(ordered):
        for u in ms:
            fields[u] = fid
    return fields


def author_topics(
    career: AuthorCareer,
    paper_references: Mapping[str, Iterable[str]],
    seed: int = 0,
    gamma: float = 1.0,
    starts: int = 2,
) -> dict[str, int]:
    """Label each of an author's papers with a topic id.

    Papers are linked by the number of references they share (no edge below
    one); the resulting graph is clustered with modularity at resolution 1
    by default. Isolated papers become singleton topics. Topic ids are
    assigned by first occurrence in career order.
    """
    papers = list(career.papers)
    if not papers:
        raise ValueError(f"career {career.author_id} has no papers")
    citing: dict[str, list[int]] = {}
    for i, p in enumerate(papers):
        for r in set(paper_references.get(p, ())):
            citing.setdefault(r, []).append(i)
    shared: dict[tuple[int, int], int] = {}
    for idxs in citing.values():
        if len(idxs) < 2:
            continue
        for a in range(len(idxs)):
            for b in range(a + 1, len(idxs)):
                key = (idxs[a], idxs[b])
                shared[key] = shared.get(key, 0) + 1
    if not shared:
        return {p: i for i, p in enumerate(papers)}
    graph = WeightedGraph.from_edges(
        ((papers[i], papers[j], float(w)) for (i, j), w in shared.items()),
        nodes=papers,
    )
    part = louvain(graph, "modularity", gamma, seed, starts=starts)
    relabel: dict[int, int] = {}
    topics: dict[str, int] = {}
    for p in papers:
        c = part.membership[p]
        if c not in relabel:
            relabel[c] = len(relabel)
        topics[p] = relabel[c]
    return topics


# --- CSV interchange -------------------------------------------------------

def graph_to_rows(graph: WeightedGraph) -> list[tuple[str, str, float]]:
    return sorted((str(u), str(v), w) for u, v, w in graph.edges())


def graph_from_rows(rows: Iterable[Sequence[str]]) -> WeightedGraph:
    g = WeightedGraph()
    for u, v, w in rows:
        g.add_edge(u, v, float(w))
    return g


def partition_rows(membership: Mapping[Node, int]) -> list[tuple[str, int]]:
    return sorted((str(u), c) for u, c in membership.items())
