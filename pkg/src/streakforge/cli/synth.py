"""Seeded synthetic corpus generation with planted ground truth.

Each author gets a career plan: paper dates, team sizes, a topic sequence
backed by shared anchor references, same-field citations for field
clustering, and optionally a planted event — three clustered hits (one
detectable 3-of-5 streak) or an isolated single hit. Hits are positioned so
the planted streak produces exactly one qualifying window, which makes the
sidecar's expected spans exact oracles.

Careers can be materialized two ways: ``gen_careers`` returns in-memory
careers with impact values directly (for statistical studies), while
``gen_synthetic`` writes papers/citations files in the ingest format plus a
ground-truth sidecar.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..corpus import AuthorCareer
from ..impact import top_k_flags
from .config import SyntheticSpec


@dataclass(frozen=True)
class PlantedAuthor:
    """Ground truth for one synthetic author."""

    author_id: str
    n_total: int
    kind: str  # streak | single | none
    hit_positions: tuple[int, ...]
    span: tuple[int, int] | None
    onset_relative: float | None
    field: int
    topics: tuple[int, ...]


def _author_rng(spec: SyntheticSpec, idx: int) -> np.random.Generator:
    return np.random.default_rng([spec.seed, idx])


def _draw_timing(rng: np.random.Generator, placement: str) -> float:
    if placement == "early":
        return float(rng.uniform(0.0, 0.1))
    if placement == "late":
        return float(rng.uniform(0.9, 1.0))
    if placement == "uniform":
        return float(rng.uniform(0.0, 1.0))
    if placement == "edges":
        if rng.random() < 0.5:
            return float(rng.uniform(0.0, 0.1))
        return float(rng.uniform(0.9, 1.0))
    raise ValueError(f"no timing draw for placement {placement!r}")


def _plan_author(spec: SyntheticSpec, idx: int) -> tuple[PlantedAuthor, np.random.Generator]:
    rng = _author_rng(spec, idx)
    author_id = f"a{idx:05d}"
    n_total = int(rng.integers(spec.nt_min, spec.nt_max + 1))
    field = int(rng.integers(0, spec.n_fields))

    kind = "none"
    if spec.placement != "none":
        u = rng.random()
        if u < spec.streak_fraction:
            kind = "streak"
        elif u < spec.streak_fraction + spec.single_hit_fraction:
            kind = "single"

    hits: tuple[int, ...] = ()
    span: tuple[int, int] | None = None
    onset_rel: float | None = None
    if kind == "streak":
        timing = _draw_timing(rng, spec.placement)
        start = int(round(timing * (n_total - 5)))
        start = max(0, min(n_total - 5, start))
        # hits at start, start+2, start+4: exactly one qualifying 3-of-5 window
        hits = (start, start + 2, start + 4)
        span = (start, start + 4)
        onset_rel = start / (n_total - 5) if n_total > 5 else 0.0
    elif kind == "single":
        timing = _draw_timing(rng, spec.placement)
        hits = (max(0, min(n_total - 1, int(round(timing * (n_total - 1))))),)

    topics = []
    topic = 0
    for _ in range(n_total):
        topics.append(topic)
        if rng.random() < spec.topic_switch_prob:
            topic = (topic + 1) % spec.topics_per_author
    return (
        PlantedAuthor(
            author_id=author_id,
            n_total=n_total,
            kind=kind,
            hit_positions=hits,
            span=span,
            onset_relative=onset_rel,
            field=field,
            topics=tuple(topics),
        ),
        rng,
    )


def _impact_values(
    plan: PlantedAuthor, rng: np.random.Generator, spec: SyntheticSpec
) -> list[float]:
    """Direct normalized-impact-like values: hits well above the base band.

    Hit levels scale with ``hit_citations`` (the default of 30 puts them
    around 9-12 against a base band of [0, 0.5]).
    """
    values = rng.uniform(0.0, 0.5, plan.n_total)
    for h in plan.hit_positions:
        values[h] = spec.hit_citations * rng.uniform(0.3, 0.4)
    return [float(v) for v in values]


def gen_careers(
    spec: SyntheticSpec,
) -> tuple[list[AuthorCareer], dict[str, PlantedAuthor]]:
    """In-memory careers with impacts and top flags, plus ground truth."""
    careers: list[AuthorCareer] = []
    truth: dict[str, PlantedAuthor] = {}
    for idx in range(spec.authors):
        plan, rng = _plan_author(spec, idx)
        impacts = _impact_values(plan, rng, spec)
        flags = top_k_flags(impacts, spec.k_percent)
        papers = tuple(f"{plan.author_id}-p{i:04d}" for i in range(plan.n_total))
        careers.append(
            AuthorCareer(
                author_id=plan.author_id,
                papers=papers,
                impacts=tuple(impacts),
                top_flags=tuple(flags),
            )
        )
        truth[plan.author_id] = plan
    return careers, truth


def _team(
    plan: PlantedAuthor, i: int, rng: np.random.Generator, spec: SyntheticSpec,
    dense_window: bool,
) -> list[str]:
    authors = [plan.author_id]
    if dense_window and plan.span is not None and plan.span[0] <= i < plan.span[0] + 4:
        # recurring collaborator on four of the window's five papers
        authors.append(f"{plan.author_id}~d0")
    size = int(rng.integers(spec.team_min, spec.team_max + 1))
    if rng.random() < spec.big_team_prob:
        size = spec.big_team_size + int(rng.integers(0, 5))
    while len(authors) < size:
        authors.append(f"{plan.author_id}~c{i}x{len(authors)}")
    return authors


def gen_synthetic(spec: SyntheticSpec, out_dir: str | Path) -> dict[str, str]:
    """Write papers.jsonl, citations.jsonl, and groundtruth.json.

    Paper records follow the ingest schema. Citation events land inside the
    10-year window (with an occasional out-of-window extra), so each paper's
    c10 equals its planted citation count. Returns the emitted paths.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    papers_path = out / "papers.jsonl"
    citations_path = out / "citations.jsonl"
    truth_path = out / "groundtruth.json"

    field_backlog: dict[int, list[str]] = {f: [] for f in range(spec.n_fields)}
    truth_obj: dict[str, dict] = {}
    lo_month = (spec.start_year_min - 1970) * 12
    hi_month = (spec.start_year_max - 1970) * 12
    mean_gap = 12.0 / spec.papers_per_year

    with open(papers_path, "w", encoding="utf-8") as pfh, open(
        citations_path, "w", encoding="utf-8"
    ) as cfh:
        for idx in range(spec.authors):
            plan, rng = _plan_author(spec, idx)
            dense_window = bool(rng.random() < spec.dense_tie_prob)
            month = int(rng.integers(lo_month, hi_month + 1))
            hit_set = set(plan.hit_positions)
            for i in range(plan.n_total):
                paper_id = f"{plan.author_id}-p{i:04d}"
                refs: list[str] = []
                pool = field_backlog[plan.field]
                if pool:
                    n_refs = min(spec.refs_per_paper, len(pool))
                    picks = rng.choice(len(pool), size=n_refs, replace=False)
                    refs.extend(pool[int(p)] for p in sorted(picks))
                refs.extend(
                    f"{plan.author_id}~t{plan.topics[i]}~r{j}"
                    for j in range(spec.topic_anchor_refs)
                )
                record = {
                    "paper_id": paper_id,
                    "pub_month": month,
                    "authors": _team(plan, i, rng, spec, dense_window),
                    "references": refs,
                }
                pfh.write(json.dumps(record, sort_keys=True) + "\n")
                pool.append(paper_id)

                # exactly two citation levels: with constant counts, a hit's
                # normalized impact is >= 1 >= any base paper's in every
                # (field, year) cell, and the raw-c10 tie-break favors hits,
                # so top-k flags land exactly on the planted hits
                n_cites = spec.hit_citations if i in hit_set else spec.base_citations
                offsets = rng.integers(0, 120, size=n_cites)
                for j, off in enumerate(offsets):
                    cfh.write(
                        json.dumps(
                            {
                                "citing_id": f"z~{paper_id}~{j}",
                                "cited_id": paper_id,
                                "citing_month": month + int(off),
                            },
                            sort_keys=True,
                        )
                        + "\n"
                    )
                if rng.random() < 0.05:
                    # out-of-window citation: must not count toward c10
                    cfh.write(
                        json.dumps(
                            {
                                "citing_id": f"z~{paper_id}~late",
                                "cited_id": paper_id,
                                "citing_month": month + 121,
                            },
                            sort_keys=True,
                        )
                        + "\n"
                    )
                month += int(rng.poisson(mean_gap))

            truth_obj[plan.author_id] = {
                "kind": plan.kind,
                "n_total": plan.n_total,
                "hit_positions": list(plan.hit_positions),
                "span": list(plan.span) if plan.span else None,
                "onset_relative": plan.onset_relative,
                "field": plan.field,
                "topics": list(plan.topics),
                "dense_window": dense_window,
            }

    with open(truth_path, "w", encoding="utf-8") as tfh:
        json.dump({"authors": truth_obj}, tfh, sort_keys=True, indent=1)
        tfh.write("\n")
    return {
        "papers": str(papers_path),
        "citations": str(citations_path),
        "groundtruth": str(truth_path),
    }
