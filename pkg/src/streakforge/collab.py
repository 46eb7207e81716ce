"""Collaboration and content metrics on five-paper sequences.

All operations are pure functions over the window's author lists, topic ids,
or local citation neighborhoods, so they can be mapped over windows in any
order.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

BIG_TEAM_THRESHOLD = 10
DENSE_TIES_MIN_FREQ = 3


@dataclass(frozen=True)
class CoauthorshipLocalNet:
    """Co-authorship graph of one window: edge weight counts shared papers."""

    focal: str
    nodes: tuple[str, ...]
    edges: dict[tuple[str, str], int]

    def adjacency(self) -> dict[str, set[str]]:
        adj: dict[str, set[str]] = {u: set() for u in self.nodes}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj


@dataclass(frozen=True)
class StreakTypeLabel:
    """dense|loose ties crossed with small|large teams."""

    tie_kind: str
    team_kind: str

    @property
    def name(self) -> str:
        return f"{self.tie_kind}/{self.team_kind}"


def _check_window(author_lists: Sequence[Sequence[str]]) -> None:
    if len(author_lists) != 5:
        raise ValueError(f"expected 5 author lists, got {len(author_lists)}")
    for i, authors in enumerate(author_lists):
        if not authors:
            raise ValueError(f"paper {i}: empty author list")


def mean_team_size(author_lists: Sequence[Sequence[str]]) -> float:
    """Arithmetic mean of the five team sizes."""
    _check_window(author_lists)
    return sum(len(a) for a in author_lists) / 5.0


def has_big_project(
    author_lists: Sequence[Sequence[str]], threshold: int = BIG_TEAM_THRESHOLD
) -> bool:
    """True when any paper in the window has a team of ``threshold`` or more."""
    _check_window(author_lists)
    return any(len(a) >= threshold for a in author_lists)


def max_coauthor_freq(author_lists: Sequence[Sequence[str]], focal: str) -> int:
    """Largest number of the five papers shared with any single co-author.

    Zero only when all five papers are solo. The focal author must appear on
    every paper.
    """
    _check_window(author_lists)
    counts: dict[str, int] = {}
    for i, authors in enumerate(author_lists):
        if focal not in authors:
            raise ValueError(f"focal author {focal!r} missing from paper {i}")
        for a in set(authors):
            if a != focal:
                counts[a] = counts.get(a, 0) + 1
    return max(counts.values(), default=0)


def is_dense_ties(author_lists: Sequence[Sequence[str]], focal: str) -> bool:
    """Some co-author appears in at least three of the five papers."""
    return max_coauthor_freq(author_lists, focal) >= DENSE_TIES_MIN_FREQ


def build_local_net(
    author_lists: Sequence[Sequence[str]], focal: str
) -> CoauthorshipLocalNet:
    """Window co-authorship network; edge weights are shared-paper counts."""
    _check_window(author_lists)
    nodes: list[str] = []
    seen: set[str] = set()
    edges: dict[tuple[str, str], int] = {}
    for i, authors in enumerate(author_lists):
        if focal not in authors:
            raise ValueError(f"focal author {focal!r} missing from paper {i}")
        uniq = sorted(set(authors))
        for a in uniq:
            if a not in seen:
                seen.add(a)
                nodes.append(a)
        for x in range(len(uniq)):
            for y in range(x + 1, len(uniq)):
                key = (uniq[x], uniq[y])
                edges[key] = edges.get(key, 0) + 1
    return CoauthorshipLocalNet(focal=focal, nodes=tuple(nodes), edges=edges)


def focal_betweenness(net: CoauthorshipLocalNet) -> float:
    """Normalized shortest-path betweenness of the focal author.

    Edges are treated as unweighted. Pair dependencies are split equally
    among equal-length shortest paths (Brandes accumulation); the score is
    normalized by (n-1)(n-2)/2 and is 0 for nets of fewer than 3 nodes.
    """
    adj = net.adjacency()
    n = len(net.nodes)
    if n < 3:
        return 0.0
    score = 0.0
    for source in net.nodes:
        dist = {source: 0}
        sigma = {source: 1.0}
        preds: dict[str, list[str]] = {source: []}
        order: list[str] = []
        queue = deque([source])
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in adj[v]:
                if w not in dist:
                    dist[w] = dist[v] + 1
                    sigma[w] = 0.0
                    preds[w] = []
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = {v: 0.0 for v in order}
        for w in reversed(order):
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != source and w == net.focal:
                score += delta[w]
    # each unordered pair was counted from both endpoints
    return (score / 2.0) / ((n - 1) * (n - 2) / 2.0)


def topic_diversity(topic_ids: Sequence[Hashable]) -> int:
    """Number of distinct topics among the window's five papers."""
    if len(topic_ids) != 5:
        raise ValueError(f"expected 5 topic ids, got {len(topic_ids)}")
    return len(set(topic_ids))


def most_frequent_topic(topic_ids: Sequence[Hashable]) -> Hashable:
    """Most frequent topic; frequency ties go to the earliest first occurrence."""
    counts: dict[Hashable, int] = {}
    first: dict[Hashable, int] = {}
    for i, t in enumerate(topic_ids):
        counts[t] = counts.get(t, 0) + 1
        first.setdefault(t, i)
    return max(counts, key=lambda t: (counts[t], -first[t]))


def is_new_topic(
    topic_ids: Sequence[Hashable], prior_topic_ids: Iterable[Hashable]
) -> bool:
    """True when the window's dominant topic never appeared earlier in the career."""
    if len(topic_ids) != 5:
        raise ValueError(f"expected 5 topic ids, got {len(topic_ids)}")
    return most_frequent_topic(topic_ids) not in set(prior_topic_ids)


def classify_streak_type(
    author_lists: Sequence[Sequence[str]],
    focal: str,
    big_threshold: int = BIG_TEAM_THRESHOLD,
) -> StreakTypeLabel:
    """Four-way window type from tie density and team size."""
    tie = "dense" if is_dense_ties(author_lists, focal) else "loose"
    team = "large" if has_big_project(author_lists, big_threshold) else "small"
    return StreakTypeLabel(tie_kind=tie, team_kind=team)


def disruption_index(
    focal_id: str,
    focal_refs: Iterable[str],
    citing_map: Mapping[str, Iterable[str]],
) -> float | None:
    """Disruption D = (n_i - n_j) / (n_i + n_j + n_k) over the focal's citers.

    ``citing_map`` maps each citer to the subset of {focal} and the focal's
    references it cites. n_i citers cite the focal only, n_j the focal plus
    a reference, n_k a reference but not the focal. Returns None when the
    denominator is zero (no relevant citers).
    """
    refs = set(focal_refs)
    n_i = n_j = n_k = 0
    for cited in citing_map.values():
        cited_set = set(cited) & (refs | {focal_id})
        hits_focal = focal_id in cited_set
        hits_ref = bool(cited_set & refs)
        if hits_focal and hits_ref:
            n_j += 1
        elif hits_focal:
            n_i += 1
        elif hits_ref:
            n_k += 1
    denom = n_i + n_j + n_k
    if denom == 0:
        return None
    return (n_i - n_j) / denom


def rank_within_groups(
    items: Sequence[tuple[Hashable, float]],
) -> list[float]:
    """Mid-rank percentiles in [0, 1] within each group.

    ``items`` pairs a group key with a value; the result is parallel to the
    input. Rank is (strictly smaller + half the other ties) / (group size -
    1); singleton groups get 0.5.
    """
    groups: dict[Hashable, list[float]] = {}
    for key, value in items:
        groups.setdefault(key, []).append(value)
    ranks: list[float] = []
    for key, value in items:
        values = groups[key]
        size = len(values)
        if size == 1:
            ranks.append(0.5)
            continue
        smaller = sum(1 for v in values if v < value)
        ties = sum(1 for v in values if v == value) - 1
        rank = (smaller + 0.5 * ties) / (size - 1)
        ranks.append(min(1.0, max(0.0, rank)))
    return ranks
