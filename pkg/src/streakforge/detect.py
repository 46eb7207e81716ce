"""Consecutive-success detection on top-flag sequences.

A length-N window of a career qualifies when it contains at least X
top-flagged papers; qualifying windows whose index ranges intersect are
merged transitively into maximal spans. Onset timing is reported relative
to career length: ``start_idx / (n_total - N)``, defined as 0 when the
career has exactly N papers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import AuthorCareer, CorpusStore

WINDOW_LEN = 5  # Hot/Top/Ordinary sequences are always five papers


@dataclass(frozen=True)
class DetectionParams:
    """X successes within N consecutive papers, flags from the top k%."""

    x: int
    n: int
    k_percent: float = 10.0

    def __post_init__(self) -> None:
        if not (1 <= self.x <= self.n):
            raise ValueError("need 1 <= X <= N")
        if not (0.0 < self.k_percent <= 100.0):
            raise ValueError("k_percent must be in (0, 100]")


@dataclass(frozen=True)
class StreakSpan:
    """A maximal consecutive-success interval, indices inclusive."""

    start_idx: int
    end_idx: int
    onset_relative: float
    onset_month: int | None = None


@dataclass(frozen=True)
class SequenceWindow:
    """Five consecutive papers labeled Hot, Top, or Ordinary."""

    author_id: str
    start_idx: int
    label: str
    papers: tuple[str, str, str, str, str]
    onset_relative: float


def relative_onset(start_idx: int, n_total: int, n_window: int) -> float:
    """start_idx / (n_total - N); 0 for the degenerate n_total == N career."""
    if n_total <= n_window:
        return 0.0
    return start_idx / (n_total - n_window)


def detect_streaks(
    top_flags: Sequence[bool], params: DetectionParams
) -> list[StreakSpan]:
    """Find all merged consecutive-success spans in a flag sequence.

    Returns disjoint spans sorted by start index; empty when the career is
    shorter than N.
    """
    n_total = len(top_flags)
    x, n = params.x, params.n
    if n_total < n:
        return []
    prefix = [0]
    for flag in top_flags:
        prefix.append(prefix[-1] + (1 if flag else 0))
    spans: list[tuple[int, int]] = []
    for start in range(n_total - n + 1):
        if prefix[start + n] - prefix[start] < x:
            continue
        end = start + n - 1
        if spans and start <= spans[-1][1]:
            spans[-1] = (spans[-1][0], max(spans[-1][1], end))
        else:
            spans.append((start, end))
    return [
        StreakSpan(s, e, relative_onset(s, n_total, n)) for s, e in spans
    ]


def detect_career(
    career: AuthorCareer, params: DetectionParams, store: CorpusStore | None = None
) -> list[StreakSpan]:
    """detect_streaks on a career, stamping onset months when a store is given."""
    spans = detect_streaks(career.top_flags, params)
    if store is None:
        return spans
    return [
        StreakSpan(
            sp.start_idx,
            sp.end_idx,
            sp.onset_relative,
            onset_month=store.papers[career.papers[sp.start_idx]].pub_month,
        )
        for sp in spans
    ]


def extract_hot_windows(
    career: AuthorCareer, spans: Iterable[StreakSpan]
) -> list[SequenceWindow]:
    """One Hot window per span: its first five papers, tagged with the span onset."""
    windows = []
    for span in spans:
        if span.end_idx - span.start_idx + 1 < WINDOW_LEN:
            raise ValueError(
                f"span ({span.start_idx}, {span.end_idx}) shorter than {WINDOW_LEN}"
            )
        papers = career.papers[span.start_idx : span.start_idx + WINDOW_LEN]
        windows.append(
            SequenceWindow(
                author_id=career.author_id,
                start_idx=span.start_idx,
                label="Hot",
                papers=tuple(papers),  # type: ignore[arg-type]
                onset_relative=span.onset_relative,
            )
        )
    return windows


def sample_nonhot_window(
    career: AuthorCareer, seed: int, require_top_first: bool = False
) -> SequenceWindow:
    """Draw a random five-paper window from a career with no detected streak.

    Labels Top when the window holds one or two top flags, Ordinary when it
    holds none. With ``require_top_first`` the draw is restricted to windows
    that are either flag-free or start with a flagged paper, so every Top
    window opens with a top paper.
    """
    n_total = career.n_total
    if n_total < WINDOW_LEN:
        raise ValueError(f"career {career.author_id}: fewer than {WINDOW_LEN} papers")
    flags = career.top_flags
    counts = [
        sum(flags[s : s + WINDOW_LEN]) for s in range(n_total - WINDOW_LEN + 1)
    ]
    starts = list(range(n_total - WINDOW_LEN + 1))
    if require_top_first:
        starts = [s for s in starts if counts[s] == 0 or flags[s]]
        if not starts:
            raise ValueError(
                f"career {career.author_id}: no eligible window start under "
                "require_top_first"
            )
    rng = np.random.default_rng(seed)
    start = starts[int(rng.integers(0, len(starts)))]
    count = counts[start]
    if count >= 3:
        raise ValueError(
            f"career {career.author_id}: window at {start} holds {count} flags; "
            "career has an undetected streak"
        )
    label = "Top" if count >= 1 else "Ordinary"
    return SequenceWindow(
        author_id=career.author_id,
        start_idx=start,
        label=label,
        papers=tuple(career.papers[start : start + WINDOW_LEN]),  # type: ignore[arg-type]
        onset_relative=relative_onset(start, n_total, WINDOW_LEN),
    )


def streak_count_stats(
    careers: Mapping[str, AuthorCareer] | Iterable[AuthorCareer],
    params: DetectionParams,
) -> dict:
    """Corpus-level summary: streak prevalence and per-author span counts.

    Returns ``authors_with_streak`` and ``multi_streak`` as fractions of all
    authors, plus a histogram mapping span count to author count.
    """
    if isinstance(careers, Mapping):
        careers = careers.values()
    histogram: dict[int, int] = {}
    total = 0
    for career in careers:
        total += 1
        n_spans = len(detect_streaks(career.top_flags, params))
        histogram[n_spans] = histogram.get(n_spans, 0) + 1
    with_streak = sum(c for k, c in histogram.items() if k >= 1)
    multi = sum(c for k, c in histogram.items() if k >= 2)
    return {
        "authors_with_streak": with_streak / total if total else 0.0,
        "multi_streak": multi / total if total else 0.0,
        "counts": dict(sorted(histogram.items())),
    }
