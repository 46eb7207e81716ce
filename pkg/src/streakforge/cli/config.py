"""Pipeline configuration: YAML keys, defaults, and named seed slots.

Every randomized step draws from a named slot derived from the base seed,
so reruns with the same configuration are bit-identical and the manifest
can record exactly which seeds were in play.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from ..detect import DetectionParams

SEED_SLOTS = ("synthesis", "sampling", "clustering", "fitting", "shuffle")


class ConfigError(ValueError):
    """Bad or inconsistent configuration."""


def slot_seed(base_seed: int, slot: str, *extra: int) -> int:
    """Deterministic 64-bit seed for a named slot (optionally per item)."""
    if slot not in SEED_SLOTS:
        raise ConfigError(f"unknown seed slot {slot!r}")
    ss = np.random.SeedSequence(
        entropy=base_seed, spawn_key=(SEED_SLOTS.index(slot), *extra)
    )
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class SyntheticSpec:
    """Knobs for the seeded synthetic corpus generator.

    ``placement`` positions planted events: early / late / uniform place a
    single event per author by relative timing, edges splits authors between
    the first and last deciles, and none plants nothing. ``streak_fraction``
    of authors get three clustered hits (one detectable 3-of-5 streak);
    ``single_hit_fraction`` get one isolated hit.
    """

    authors: int = 1000
    nt_min: int = 21
    nt_max: int = 30
    papers_per_year: float = 3.0
    placement: str = "edges"
    streak_fraction: float = 1.0
    single_hit_fraction: float = 0.0
    k_percent: float = 10.0
    hit_citations: int = 30
    base_citations: int = 2
    n_fields: int = 4
    refs_per_paper: int = 3
    topics_per_author: int = 3
    topic_switch_prob: float = 0.15
    topic_anchor_refs: int = 3
    team_min: int = 2
    team_max: int = 6
    big_team_prob: float = 0.08
    big_team_size: int = 12
    dense_tie_prob: float = 0.7
    start_year_min: int = 1975
    start_year_max: int = 1995
    seed: int = 0

    def __post_init__(self) -> None:
        if self.authors < 0:
            raise ConfigError("authors must be non-negative")
        if not (5 <= self.nt_min <= self.nt_max):
            raise ConfigError("need 5 <= nt_min <= nt_max")
        if self.placement not in ("early", "late", "uniform", "none", "edges"):
            raise ConfigError(f"unknown placement {self.placement!r}")
        if not (0.0 <= self.streak_fraction <= 1.0):
            raise ConfigError("streak_fraction must be in [0, 1]")
        if not (0.0 <= self.single_hit_fraction <= 1.0):
            raise ConfigError("single_hit_fraction must be in [0, 1]")
        if self.streak_fraction + self.single_hit_fraction > 1.0 + 1e-9:
            raise ConfigError("streak and single-hit fractions exceed 1")
        if self.papers_per_year <= 0:
            raise ConfigError("papers_per_year must be positive")
        if not (1 <= self.team_min <= self.team_max):
            raise ConfigError("need 1 <= team_min <= team_max")


@dataclass(frozen=True)
class PipelineConfig:
    """Everything one pipeline run needs; see README for the YAML layout."""

    papers_path: str
    citations_path: str
    out_dir: str
    detection_params: tuple[DetectionParams, ...] = (
        DetectionParams(3, 5, 10.0),
        DetectionParams(1, 1, 10.0),
        DetectionParams(2, 3, 10.0),
        DetectionParams(5, 9, 10.0),
    )
    k_percent: float = 10.0
    log_impact_scale: bool = True
    min_papers: int = 10
    min_years: int = 0
    cutoff_month: int = 1560  # 2100-01: effectively no truncation
    field_gamma: float = 0.05
    field_min_size: int = 10
    topic_gamma: float = 1.0
    big_team_threshold: int = 10
    small_team_filter: bool = True
    require_top_first: bool = False
    bins: int = 10
    jointmap_bins: int = 20
    wsr_list: tuple[float, ...] = (0.1, 0.2, 0.3)
    fit_wsr: float = 0.1
    lambda_penalty: float = 1.0
    epsilon_active: float = 0.1
    restarts: int = 6
    fit_sample_size: int = 300
    base_seed: int = 42
    workers: int = 1
    use_cache: bool = True
    report_authors: tuple[str, ...] = ()
    synth: SyntheticSpec | None = None

    def __post_init__(self) -> None:
        if not self.detection_params:
            raise ConfigError("at least one detection params triple is required")
        paths = {self.papers_path, self.citations_path}
        if len(paths) != 2:
            raise ConfigError("papers and citations paths must be distinct")
        if self.out_dir in paths:
            raise ConfigError("out_dir must differ from the corpus paths")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def primary_params(self) -> DetectionParams:
        return self.detection_params[0]

    def seed_for(self, slot: str, *extra: int) -> int:
        return slot_seed(self.base_seed, slot, *extra)


def _require_keys(section: Mapping[str, Any], allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")


def _parse_detection(params: Any) -> tuple[DetectionParams, ...]:
    out = []
    for triple in params:
        if len(triple) != 3:
            raise ConfigError(f"detection triple must be [X, N, k]: {triple}")
        out.append(DetectionParams(int(triple[0]), int(triple[1]), float(triple[2])))
    return tuple(out)


def config_from_dict(raw: Mapping[str, Any], base_dir: Path | None = None) -> PipelineConfig:
    """Build a PipelineConfig from a parsed YAML mapping."""
    _require_keys(
        raw,
        {
            "corpus", "out_dir", "seed", "workers", "cache", "filters", "impact",
            "detection", "cluster", "collab", "stats", "fit", "synth",
            "report_authors",
        },
        "config",
    )
    base = base_dir or Path(".")

    def respath(p: str) -> str:
        path = Path(p)
        return str(path if path.is_absolute() else base / path)

    out_dir = respath(str(raw.get("out_dir", "out")))
    synth_raw = raw.get("synth")
    synth = None
    if synth_raw is not None:
        known = {f.name for f in fields(SyntheticSpec)}
        _require_keys(synth_raw, known, "synth")
        synth = SyntheticSpec(**synth_raw)

    corpus = raw.get("corpus") or {}
    _require_keys(corpus, {"papers", "citations"}, "corpus")
    if corpus:
        papers = respath(corpus["papers"])
        citations = respath(corpus["citations"])
    elif synth is not None:
        papers = str(Path(out_dir) / "data" / "papers.jsonl")
        citations = str(Path(out_dir) / "data" / "citations.jsonl")
    else:
        raise ConfigError("config needs either a corpus section or a synth section")

    filters = raw.get("filters") or {}
    _require_keys(filters, {"min_papers", "min_years", "cutoff_month"}, "filters")
    impact = raw.get("impact") or {}
    _require_keys(impact, {"k_percent", "log_scale"}, "impact")
    detection = raw.get("detection") or {}
    _require_keys(detection, {"params"}, "detection")
    cluster = raw.get("cluster") or {}
    _require_keys(cluster, {"field_gamma", "field_min_size", "topic_gamma"}, "cluster")
    collab = raw.get("collab") or {}
    _require_keys(
        collab, {"big_team_threshold", "small_team_filter", "require_top_first"}, "collab"
    )
    stats_sec = raw.get("stats") or {}
    _require_keys(stats_sec, {"bins", "jointmap_bins"}, "stats")
    fit = raw.get("fit") or {}
    _require_keys(
        fit,
        {"wsr_list", "fit_wsr", "lambda_penalty", "epsilon_active", "restarts",
         "sample_size"},
        "fit",
    )

    kwargs: dict[str, Any] = {
        "papers_path": papers,
        "citations_path": citations,
        "out_dir": out_dir,
        "base_seed": int(raw.get("seed", 42)),
        "workers": int(raw.get("workers", 1)),
        "use_cache": bool(raw.get("cache", True)),
        "report_authors": tuple(raw.get("report_authors") or ()),
        "synth": synth,
    }
    if "params" in detection:
        kwargs["detection_params"] = _parse_detection(detection["params"])
    if "min_papers" in filters:
        kwargs["min_papers"] = int(filters["min_papers"])
    if "min_years" in filters:
        kwargs["min_years"] = int(filters["min_years"])
    if "cutoff_month" in filters:
        kwargs["cutoff_month"] = int(filters["cutoff_month"])
    if "k_percent" in impact:
        kwargs["k_percent"] = float(impact["k_percent"])
    if "log_scale" in impact:
        kwargs["log_impact_scale"] = bool(impact["log_scale"])
    if "field_gamma" in cluster:
        kwargs["field_gamma"] = float(cluster["field_gamma"])
    if "field_min_size" in cluster:
        kwargs["field_min_size"] = int(cluster["field_min_size"])
    if "topic_gamma" in cluster:
        kwargs["topic_gamma"] = float(cluster["topic_gamma"])
    if "big_team_threshold" in collab:
        kwargs["big_team_threshold"] = int(collab["big_team_threshold"])
    if "small_team_filter" in collab:
        kwargs["small_team_filter"] = bool(collab["small_team_filter"])
    if "require_top_first" in collab:
        kwargs["require_top_first"] = bool(collab["require_top_first"])
    if "bins" in stats_sec:
        kwargs["bins"] = int(stats_sec["bins"])
    if "jointmap_bins" in stats_sec:
        kwargs["jointmap_bins"] = int(stats_sec["jointmap_bins"])
    if "wsr_list" in fit:
        kwargs["wsr_list"] = tuple(float(w) for w in fit["wsr_list"])
    if "fit_wsr" in fit:
        kwargs["fit_wsr"] = float(fit["fit_wsr"])
    if "lambda_penalty" in fit:
        kwargs["lambda_penalty"] = float(fit["lambda_penalty"])
    if "epsilon_active" in fit:
        kwargs["epsilon_active"] = float(fit["epsilon_active"])
    if "restarts" in fit:
        kwargs["restarts"] = int(fit["restarts"])
    if "sample_size" in fit:
        kwargs["fit_sample_size"] = int(fit["sample_size"])
    return PipelineConfig(**kwargs)


def load_config(path: str | Path) -> PipelineConfig:
    """Read a YAML config file; relative paths resolve against its directory."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    return config_from_dict(raw, base_dir=path.parent)
