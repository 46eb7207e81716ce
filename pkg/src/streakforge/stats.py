"""Distributional statistics behind the figure families.

Relative timings live in [0, 1] and are binned right-open with the last bin
right-closed. Densities are normalized so a flat distribution sits at 1;
confidence intervals are mean +/- 1.96 * sd / sqrt(n). Undefined ratios are
reported as None, never infinity.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

Z95 = 1.96


def bin_index(t: float, bins: int) -> int:
    """Bin of t in [0, 1]: right-open bins, last bin right-closed."""
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"timing {t} outside [0, 1]")
    return min(int(t * bins), bins - 1)


@dataclass(frozen=True)
class BinnedDensity:
    """Histogram over [0, 1] normalized to density (flat = 1)."""

    edges: tuple[float, ...]
    densities: tuple[float, ...]
    counts: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.counts)

    def standard_errors(self) -> tuple[float, ...]:
        """Poisson standard error of each density estimate."""
        n = self.total
        if n == 0:
            return tuple(0.0 for _ in self.counts)
        width = self.edges[1] - self.edges[0]
        return tuple(math.sqrt(c) / (n * width) for c in self.counts)


@dataclass(frozen=True)
class BinnedCurve:
    """Per-bin mean, standard error, and 95% CI of a timed metric."""

    edges: tuple[float, ...]
    means: tuple[float | None, ...]
    std_errors: tuple[float, ...]
    ci_half_widths: tuple[float, ...]
    counts: tuple[int, ...]


def onset_density(onsets: Sequence[float], bins: int = 10) -> BinnedDensity:
    """Density histogram of onset timings; empty input gives zero counts."""
    counts = [0] * bins
    for t in onsets:
        counts[bin_index(t, bins)] += 1
    total = sum(counts)
    width = 1.0 / bins
    if total == 0:
        densities = [0.0] * bins
    else:
        densities = [c / (total * width) for c in counts]
    edges = tuple(i / bins for i in range(bins + 1))
    return BinnedDensity(edges=edges, densities=tuple(densities), counts=tuple(counts))


def binned_metric_curve(
    points: Iterable[tuple[float, float]], bins: int = 10
) -> BinnedCurve:
    """Mean/SE/CI of metric values grouped by their relative timing bin."""
    buckets: list[list[float]] = [[] for _ in range(bins)]
    for timing, value in points:
        buckets[bin_index(timing, bins)].append(value)
    means: list[float | None] = []
    ses: list[float] = []
    cis: list[float] = []
    counts: list[int] = []
    for values in buckets:
        n = len(values)
        counts.append(n)
        if n == 0:
            means.append(None)
            ses.append(0.0)
            cis.append(0.0)
            continue
        mean = sum(values) / n
        se = statistics.stdev(values) / math.sqrt(n) if n >= 2 else 0.0
        means.append(mean)
        ses.append(se)
        cis.append(Z95 * se)
    edges = tuple(i / bins for i in range(bins + 1))
    return BinnedCurve(
        edges=edges,
        means=tuple(means),
        std_errors=tuple(ses),
        ci_half_widths=tuple(cis),
        counts=tuple(counts),
    )


@dataclass(frozen=True)
class JointMap:
    """Joint over product-of-marginals ratios on a bins x bins grid."""

    bins: int
    ratios: tuple[tuple[float | None, ...], ...]
    counts: tuple[tuple[int, ...], ...]


def joint_probability_map(
    pairs: Iterable[tuple[float, float]], bins: int = 20
) -> JointMap:
    """P(x1, x2) / (P(x1) P(x2)) per cell; None where a marginal is empty."""
    counts = [[0] * bins for _ in range(bins)]
    total = 0
    for x1, x2 in pairs:
        counts[bin_index(x1, bins)][bin_index(x2, bins)] += 1
        total += 1
    row_tot = [sum(counts[i]) for i in range(bins)]
    col_tot = [sum(counts[i][j] for i in range(bins)) for j in range(bins)]
    ratios: list[tuple[float | None, ...]] = []
    for i in range(bins):
        row: list[float | None] = []
        for j in range(bins):
            if total == 0 or row_tot[i] == 0 or col_tot[j] == 0:
                row.append(None)
            else:
                p_joint = counts[i][j] / total
                p_prod = (row_tot[i] / total) * (col_tot[j] / total)
                row.append(p_joint / p_prod)
        ratios.append(tuple(row))
    return JointMap(
        bins=bins,
        ratios=tuple(ratios),
        counts=tuple(tuple(r) for r in counts),
    )


def temporal_distance_ratio(
    dx_real: Sequence[float], dx_shuffled: Sequence[float], bins: int = 10
) -> list[float | None]:
    """Per-bin density ratio of real over shuffled temporal distances.

    Values above 1 mean the real distances are more likely than chance;
    bins with zero shuffled density are None.
    """
    real = onset_density(dx_real, bins)
    shuf = onset_density(dx_shuffled, bins)
    out: list[float | None] = []
    for r, s in zip(real.densities, shuf.densities):
        out.append(None if s == 0.0 else r / s)
    return out


def _nearest_rank_quantile(values: Sequence[float], q: float) -> float:
    ordered = sorted(values)
    rank = max(1, math.ceil(q * len(ordered)))
    return ordered[rank - 1]


def max_streak_length(
    impacts: Sequence[float], threshold_kind: str = "median", q: float = 0.9
) -> int:
    """Longest run of impacts strictly above a career-derived threshold.

    ``threshold_kind`` is one of median, mean, or top_quantile (which uses
    the empirical q-quantile by the nearest-rank rule).
    """
    if not impacts:
        raise ValueError("impacts must be non-empty")
    if threshold_kind == "median":
        threshold = statistics.median(impacts)
    elif threshold_kind == "mean":
        threshold = sum(impacts) / len(impacts)
    elif threshold_kind == "top_quantile":
        threshold = _nearest_rank_quantile(impacts, q)
    else:
        raise ValueError(f"unknown threshold kind {threshold_kind!r}")
    best = run = 0
    for v in impacts:
        if v > threshold:
            run += 1
            best = max(best, run)
        else:
            run = 0
    return best


@dataclass(frozen=True)
class EarlyLateDensity:
    """Onset mass near the career's start and end, in density units."""

    early_density: float
    late_density: float
    early_mass: float
    late_mass: float
    count: int


def field_early_late(
    onsets_by_field: Mapping[Hashable, Sequence[float]],
    early: float = 0.1,
    late: float = 0.9,
    min_count: int = 100,
) -> dict[Hashable, EarlyLateDensity]:
    """Early (< early) and late (> late) onset densities per field.

    Densities are normalized so a uniform onset distribution scores 1 on
    both sides; fields with fewer than ``min_count`` onsets are dropped.
    The raw masses are carried alongside.
    """
    out: dict[Hashable, EarlyLateDensity] = {}
    for fld, onsets in onsets_by_field.items():
        n = len(onsets)
        if n < min_count:
            continue
        early_mass = sum(1 for t in onsets if t < early) / n
        late_mass = sum(1 for t in onsets if t > late) / n
        out[fld] = EarlyLateDensity(
            early_density=early_mass / early,
            late_density=late_mass / (1.0 - late),
            early_mass=early_mass,
            late_mass=late_mass,
            count=n,
        )
    return out


def jaccard(set_a: Iterable[Hashable], set_b: Iterable[Hashable]) -> float:
    """|A & B| / |A | B|; 0 when both sets are empty."""
    a, b = set(set_a), set(set_b)
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


def onset_year_views(
    entries: Iterable[tuple[int, int, int]],
    group_years: int = 5,
) -> dict[str, dict[str, dict[int, int]]]:
    """Histograms of onset years from career start and to career end.

    ``entries`` are (onset_month, first_month, last_month) triples; groups
    are career-length buckets of ``group_years`` years. Yields, per group,
    integer-year histograms keyed "years_from_start" and "years_to_end".
    """
    out: dict[str, dict[str, dict[int, int]]] = {}
    for onset_month, first_month, last_month in entries:
        length_years = (last_month - first_month) / 12.0
        lo = int(length_years // group_years) * group_years
        group = f"{lo}-{lo + group_years}"
        views = out.setdefault(
            group, {"years_from_start": {}, "years_to_end": {}}
        )
        from_start = int((onset_month - first_month) // 12)
        to_end = int((last_month - onset_month) // 12)
        views["years_from_start"][from_start] = (
            views["years_from_start"].get(from_start, 0) + 1
        )
        views["years_to_end"][to_end] = views["years_to_end"].get(to_end, 0) + 1
    return out
