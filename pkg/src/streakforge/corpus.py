"""Data model, ingestion, filtering, and persistence for publication corpora.

Papers and citation events come in as newline-delimited JSON; careers are
assembled per author in chronological order. The month epoch is 1970-01
(``pub_month == 0``), so ``pub_month = (year - 1970) * 12 + (month - 1)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import IO, Iterable, Iterator

SNAPSHOT_HEADER = "STREAKFORGE-CORPUS-v1"
EPOCH_YEAR = 1970


class CorpusError(ValueError):
    """Malformed record, duplicate identifier, or broken store invariant."""


class IngestError(CorpusError):
    """Ingest failure; message carries the offending stream and line number."""


def month_to_year(pub_month: int) -> int:
    """Calendar year of a month index (epoch 1970-01)."""
    return EPOCH_YEAR + pub_month // 12


@dataclass(frozen=True)
class PaperRecord:
    """One publication with optional derived impact fields."""

    paper_id: str
    pub_month: int
    author_ids: tuple[str, ...]
    reference_ids: tuple[str, ...] = ()
    field_id: int | None = None
    c10: int | None = None
    c10_norm: float | None = None

    def __post_init__(self) -> None:
        if not self.author_ids:
            raise CorpusError(f"paper {self.paper_id}: empty author list")
        if len(set(self.author_ids)) != len(self.author_ids):
            raise CorpusError(f"paper {self.paper_id}: duplicate authors")
        if len(set(self.reference_ids)) != len(self.reference_ids):
            raise CorpusError(f"paper {self.paper_id}: duplicate references")
        if self.paper_id in self.reference_ids:
            raise CorpusError(f"paper {self.paper_id}: cites itself")
        if self.c10 is not None and self.c10 < 0:
            raise CorpusError(f"paper {self.paper_id}: negative c10")
        if self.c10_norm is not None and (self.c10 is None or self.field_id is None):
            raise CorpusError(
                f"paper {self.paper_id}: c10_norm requires both c10 and field_id"
            )


@dataclass(frozen=True)
class CitationEvent:
    """One citation: ``citing_id`` cites ``cited_id`` at ``citing_month``."""

    citing_id: str
    cited_id: str
    citing_month: int

    def __post_init__(self) -> None:
        if self.citing_id == self.cited_id:
            raise CorpusError(f"citation {self.citing_id}: self-citation event")


@dataclass(frozen=True)
class AuthorCareer:
    """Chronologically ordered publication sequence of one author.

    ``papers``, ``impacts`` and ``top_flags`` are parallel; impacts are
    ``None`` until normalized impact has been attached.
    """

    author_id: str
    papers: tuple[str, ...]
    impacts: tuple[float | None, ...]
    top_flags: tuple[bool, ...]

    def __post_init__(self) -> None:
        if not (len(self.papers) == len(self.impacts) == len(self.top_flags)):
            raise CorpusError(f"career {self.author_id}: parallel lists differ in length")

    @property
    def n_total(self) -> int:
        return len(self.papers)


@dataclass(frozen=True)
class FilterRecord:
    """Author filters already applied to a store."""

    min_papers: int
    min_years: int
    cutoff_month: int


@dataclass(frozen=True)
class CorpusStore:
    """Immutable snapshot of papers, careers, and raw citation events."""

    papers: dict[str, PaperRecord]
    careers: dict[str, AuthorCareer]
    citations: tuple[CitationEvent, ...] = ()
    filters: FilterRecord | None = None
    _by_cited: dict[str, tuple[CitationEvent, ...]] = field(
        default_factory=dict, compare=False, repr=False
    )

    def __post_init__(self) -> None:
        for career in self.careers.values():
            for token in career.papers:
                if token not in self.papers:
                    raise CorpusError(
                        f"career {career.author_id} references unknown paper {token}"
                    )
        by_cited: dict[str, list[CitationEvent]] = {}
        for ev in self.citations:
            by_cited.setdefault(ev.cited_id, []).append(ev)
        object.__setattr__(
            self, "_by_cited", {k: tuple(v) for k, v in by_cited.items()}
        )

    def citations_of(self, paper_id: str) -> tuple[CitationEvent, ...]:
        """All citation events whose cited paper is ``paper_id``."""
        return self._by_cited.get(paper_id, ())

    @property
    def n_authors(self) -> int:
        return len(self.careers)


def build_careers(papers: Iterable[PaperRecord]) -> dict[str, AuthorCareer]:
    """Assemble per-author careers ordered by (pub_month, paper_id)."""
    by_author: dict[str, list[PaperRecord]] = {}
    for paper in papers:
        for author in paper.author_ids:
            by_author.setdefault(author, []).append(paper)
    careers: dict[str, AuthorCareer] = {}
    for author in sorted(by_author):
        ordered = sorted(by_author[author], key=lambda p: (p.pub_month, p.paper_id))
        careers[author] = AuthorCareer(
            author_id=author,
            papers=tuple(p.paper_id for p in ordered),
            impacts=tuple(p.c10_norm for p in ordered),
            top_flags=tuple(False for _ in ordered),
        )
    return careers


def _parse_paper_line(line: str, lineno: int) -> PaperRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise IngestError(f"papers line {lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(obj, dict):
        raise IngestError(f"papers line {lineno}: expected an object")
    try:
        paper_id = obj["paper_id"]
        pub_month = obj["pub_month"]
        authors = obj["authors"]
        references = obj.get("references", [])
    except KeyError as exc:
        raise IngestError(f"papers line {lineno}: missing key {exc.args[0]}") from exc
    if not isinstance(paper_id, str) or not isinstance(pub_month, int):
        raise IngestError(f"papers line {lineno}: bad paper_id or pub_month type")
    if not isinstance(authors, list) or not all(isinstance(a, str) for a in authors):
        raise IngestError(f"papers line {lineno}: authors must be a list of tokens")
    if not isinstance(references, list) or not all(isinstance(r, str) for r in references):
        raise IngestError(f"papers line {lineno}: references must be a list of tokens")
    try:
        return PaperRecord(paper_id, pub_month, tuple(authors), tuple(references))
    except CorpusError as exc:
        raise IngestError(f"papers line {lineno}: {exc}") from exc


def _parse_citation_line(line: str, lineno: int) -> CitationEvent:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise IngestError(f"citations line {lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(obj, dict):
        raise IngestError(f"citations line {lineno}: expected an object")
    try:
        citing = obj["citing_id"]
        cited = obj["cited_id"]
        month = obj["citing_month"]
    except KeyError as exc:
        raise IngestError(f"citations line {lineno}: missing key {exc.args[0]}") from exc
    if not isinstance(citing, str) or not isinstance(cited, str) or not isinstance(month, int):
        raise IngestError(f"citations line {lineno}: bad field types")
    try:
        return CitationEvent(citing, cited, month)
    except CorpusError as exc:
        raise IngestError(f"citations line {lineno}: {exc}") from exc


def ingest(
    paper_lines: Iterable[str], citation_lines: Iterable[str]
) -> CorpusStore:
    """Parse newline-delimited paper and citation records into a store.

    Duplicate paper ids and malformed lines raise :class:`IngestError` with
    the stream name and 1-based line number.
    """
    papers: dict[str, PaperRecord] = {}
    for lineno, line in enumerate(paper_lines, start=1):
        if not line.strip():
            continue
        paper = _parse_paper_line(line, lineno)
        if paper.paper_id in papers:
            raise IngestError(f"papers line {lineno}: duplicate paper_id {paper.paper_id}")
        papers[paper.paper_id] = paper
    citations: list[CitationEvent] = []
    for lineno, line in enumerate(citation_lines, start=1):
        if not line.strip():
            continue
        citations.append(_parse_citation_line(line, lineno))
    return CorpusStore(
        papers=papers,
        careers=build_careers(papers.values()),
        citations=tuple(citations),
    )


def filter_authors(
    store: CorpusStore, min_papers: int, min_years: int, cutoff_month: int
) -> CorpusStore:
    """Truncate careers at ``cutoff_month`` and drop short ones.

    A career is kept iff, after removing papers with
    ``pub_month >= cutoff_month``, it has at least ``min_papers`` papers and
    spans at least ``12 * min_years`` months. Idempotent for fixed arguments.
    """
    if min_papers < 1:
        raise ValueError("min_papers must be >= 1")
    if min_years < 0:
        raise ValueError("min_years must be >= 0")
    kept: dict[str, AuthorCareer] = {}
    for author, career in store.careers.items():
        keep_idx = [
            i for i, token in enumerate(career.papers)
            if store.papers[token].pub_month < cutoff_month
        ]
        if len(keep_idx) < min_papers:
            continue
        first = store.papers[career.papers[keep_idx[0]]].pub_month
        last = store.papers[career.papers[keep_idx[-1]]].pub_month
        if last - first < 12 * min_years:
            continue
        kept[author] = AuthorCareer(
            author_id=author,
            papers=tuple(career.papers[i] for i in keep_idx),
            impacts=tuple(career.impacts[i] for i in keep_idx),
            top_flags=tuple(career.top_flags[i] for i in keep_idx),
        )
    used = {token for career in kept.values() for token in career.papers}
    return CorpusStore(
        papers={pid: p for pid, p in store.papers.items() if pid in used},
        careers=kept,
        citations=tuple(ev for ev in store.citations if ev.cited_id in used),
        filters=FilterRecord(min_papers, min_years, cutoff_month),
    )


def attach_paper_fields(store: CorpusStore, fields: dict[str, int]) -> CorpusStore:
    """Return a store whose papers carry ``field_id`` from ``fields``."""
    papers = {
        pid: (replace(p, field_id=fields[pid]) if pid in fields else p)
        for pid, p in store.papers.items()
    }
    return CorpusStore(
        papers=papers,
        careers=store.careers,
        citations=store.citations,
        filters=store.filters,
    )


# --- snapshot persistence ------------------------------------------------

def _paper_to_obj(p: PaperRecord) -> dict:
    obj: dict = {
        "kind": "paper",
        "paper_id": p.paper_id,
        "pub_month": p.pub_month,
        "authors": list(p.author_ids),
        "references": list(p.reference_ids),
    }
    if p.field_id is not None:
        obj["field_id"] = p.field_id
    if p.c10 is not None:
        obj["c10"] = p.c10
    if p.c10_norm is not None:
        obj["c10_norm"] = p.c10_norm
    return obj


def save_store(store: CorpusStore, fh: IO[str]) -> None:
    """Write a versioned textual snapshot; round-trips through load_store."""
    fh.write(SNAPSHOT_HEADER + "\n")
    if store.filters is not None:
        f = store.filters
        fh.write(json.dumps({
            "kind": "filters",
            "min_papers": f.min_papers,
            "min_years": f.min_years,
            "cutoff_month": f.cutoff_month,
        }, sort_keys=True) + "\n")
    for pid in sorted(store.papers):
        fh.write(json.dumps(_paper_to_obj(store.papers[pid]), sort_keys=True) + "\n")
    for ev in sorted(store.citations, key=lambda e: (e.cited_id, e.citing_id, e.citing_month)):
        fh.write(json.dumps({
            "kind": "citation",
            "citing_id": ev.citing_id,
            "cited_id": ev.cited_id,
            "citing_month": ev.citing_month,
        }, sort_keys=True) + "\n")
    for author in sorted(store.careers):
        career = store.careers[author]
        fh.write(json.dumps({
            "kind": "career",
            "author_id": author,
            "papers": list(career.papers),
            "impacts": list(career.impacts),
            "top_flags": list(career.top_flags),
        }, sort_keys=True) + "\n")


def load_store(fh: IO[str]) -> CorpusStore:
    """Read a snapshot written by :func:`save_store`."""
    header = fh.readline().rstrip("\n")
    if header != SNAPSHOT_HEADER:
        raise CorpusError(f"unrecognized snapshot header {header!r}")
    papers: dict[str, PaperRecord] = {}
    citations: list[CitationEvent] = []
    careers: dict[str, AuthorCareer] = {}
    filters: FilterRecord | None = None
    for lineno, line in enumerate(fh, start=2):
        if not line.strip():
            continue
        obj = json.loads(line)
        kind = obj.get("kind")
        if kind == "paper":
            papers[obj["paper_id"]] = PaperRecord(
                paper_id=obj["paper_id"],
                pub_month=obj["pub_month"],
                author_ids=tuple(obj["authors"]),
                reference_ids=tuple(obj["references"]),
                field_id=obj.get("field_id"),
                c10=obj.get("c10"),
                c10_norm=obj.get("c10_norm"),
            )
        elif kind == "citation":
            citations.append(
                CitationEvent(obj["citing_id"], obj["cited_id"], obj["citing_month"])
            )
        elif kind == "career":
            careers[obj["author_id"]] = AuthorCareer(
                author_id=obj["author_id"],
                papers=tuple(obj["papers"]),
                impacts=tuple(obj["impacts"]),
                top_flags=tuple(obj["top_flags"]),
            )
        elif kind == "filters":
            filters = FilterRecord(
                obj["min_papers"], obj["min_years"], obj["cutoff_month"]
            )
        else:
            raise CorpusError(f"snapshot line {lineno}: unknown record kind {kind!r}")
    return CorpusStore(
        papers=papers, careers=careers, citations=tuple(citations), filters=filters
    )


def iter_paper_lines(path) -> Iterator[str]:
    """Yield lines of a newline-delimited file (UTF-8)."""
    with open(path, "r", encoding="utf-8") as fh:
        yield from fh
