"""Citation impact: 10-year counts, field-year normalization, top-k flags.

A paper's raw impact is the number of citations it receives within 120
months of publication; the normalized impact divides that count by the mean
over all corpus papers in the same (field, publication-year) cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .corpus import AuthorCareer, CorpusError, CorpusStore, month_to_year

C10_WINDOW_MONTHS = 120


@dataclass(frozen=True)
class FieldYearBaseline:
    """Mean raw impact per (field_id, year) cell, with cell counts."""

    means: dict[tuple[int, int], float]
    counts: dict[tuple[int, int], int]

    def rows(self) -> list[tuple[int, int, float, int]]:
        """(field_id, year, mean_c10, count) rows sorted by cell."""
        return [
            (f, y, self.means[(f, y)], self.counts[(f, y)])
            for f, y in sorted(self.means)
        ]


def compute_c10(pub_month: int, citing_months: Iterable[int]) -> int:
    """Citations landing in the half-open window [pub_month, pub_month+120)."""
    lo, hi = pub_month, pub_month + C10_WINDOW_MONTHS
    return sum(1 for m in citing_months if lo <= m < hi)


def build_baseline(store: CorpusStore) -> FieldYearBaseline:
    """Aggregate mean c10 per (field, year) over papers carrying both."""
    sums: dict[tuple[int, int], float] = {}
    counts: dict[tuple[int, int], int] = {}
    for paper in store.papers.values():
        if paper.c10 is None or paper.field_id is None:
            continue
        cell = (paper.field_id, month_to_year(paper.pub_month))
        sums[cell] = sums.get(cell, 0.0) + paper.c10
        counts[cell] = counts.get(cell, 0) + 1
    means = {cell: sums[cell] / counts[cell] for cell in sums}
    return FieldYearBaseline(means=means, counts=counts)


def normalize_impact(
    c10: int, field_id: int, pub_year: int, baseline: FieldYearBaseline
) -> float:
    """``c10`` divided by its cell mean; 0.0 for an all-zero cell."""
    cell = (field_id, pub_year)
    if cell not in baseline.means:
        raise KeyError(f"no baseline cell for field {field_id}, year {pub_year}")
    mean = baseline.means[cell]
    if mean == 0.0:
        return 0.0
    return c10 / mean


def top_k_flags(
    impacts: Sequence[float],
    k_percent: float,
    tie_keys: Sequence[tuple] | None = None,
) -> list[bool]:
    """Flag the top-k% papers of a career by impact.

    Exactly ``ceil(k_percent * len(impacts) / 100)`` flags are set (at least
    one). Ties are broken by ``tie_keys`` ascending when given, else by
    position.
    """
    if not impacts:
        raise ValueError("impacts must be non-empty")
    if not (0.0 < k_percent <= 100.0):
        raise ValueError("k_percent must be in (0, 100]")
    n = len(impacts)
    m = max(1, math.ceil(k_percent * n / 100.0))
    if tie_keys is None:
        order = sorted(range(n), key=lambda i: (-impacts[i], i))
    else:
        order = sorted(range(n), key=lambda i: (-impacts[i],) + tuple(tie_keys[i]))
    flags = [False] * n
    for i in order[:m]:
        flags[i] = True
    return flags


def shuffle_career(career: AuthorCareer, seed: int) -> AuthorCareer:
    """Jointly permute impacts and flags; paper order and dates stay put.

    The permutation comes from numpy's PCG64 generator, so a fixed 64-bit
    seed reproduces it bit-exactly on any platform.
    """
    perm = np.random.default_rng(seed).permutation(career.n_total)
    return AuthorCareer(
        author_id=career.author_id,
        papers=career.papers,
        impacts=tuple(career.impacts[i] for i in perm),
        top_flags=tuple(career.top_flags[i] for i in perm),
    )


def attach_c10(store: CorpusStore) -> CorpusStore:
    """Compute c10 for every paper from the store's citation events."""
    papers = {
        pid: replace(
            p, c10=compute_c10(p.pub_month, [ev.citing_month for ev in store.citations_of(pid)])
        )
        for pid, p in store.papers.items()
    }
    return CorpusStore(
        papers=papers,
        careers=store.careers,
        citations=store.citations,
        filters=store.filters,
    )


def attach_normalized_impacts(
    store: CorpusStore, k_percent: float, baseline: FieldYearBaseline | None = None
) -> tuple[CorpusStore, FieldYearBaseline]:
    """Fill c10_norm on papers and (impacts, top_flags) on careers.

    Every career paper must already carry c10 and field_id. Returns the new
    store and the baseline used.
    """
    if baseline is None:
        baseline = build_baseline(store)
    papers: dict[str, object] = {}
    for pid, p in store.papers.items():
        if p.c10 is None or p.field_id is None:
            raise CorpusError(f"paper {pid}: missing c10 or field_id before normalization")
        norm = normalize_impact(p.c10, p.field_id, month_to_year(p.pub_month), baseline)
        papers[pid] = replace(p, c10_norm=norm)
    careers: dict[str, AuthorCareer] = {}
    for author, career in store.careers.items():
        records = [papers[t] for t in career.papers]
        impacts = [r.c10_norm for r in records]
        tie_keys = [(-r.c10, r.pub_month, r.paper_id) for r in records]
        flags = top_k_flags(impacts, k_percent, tie_keys=tie_keys)
        careers[author] = AuthorCareer(
            author_id=author,
            papers=career.papers,
            impacts=tuple(impacts),
            top_flags=tuple(flags),
        )
    new_store = CorpusStore(
        papers=papers, careers=careers, citations=store.citations, filters=store.filters
    )
    return new_store, baseline
