"""Pipeline stages, disk cache, report emission, and the run manifest.

Stages run in a fixed order (synth, ingest, cluster, normalize, detect,
classify, metrics, fit, stats, report); each subcommand resolves to a
prefix of that order. All report files are plain CSV/JSON with stable key
and row ordering, so identical configs and seeds reproduce identical bytes.
The manifest lists every emitted file with a content hash; when a stage
fails, its partial outputs are marked invalid.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .. import collab, detect, graphcluster, hotstreak, impact, stats
from ..corpus import (
    CorpusStore,
    attach_paper_fields,
    filter_authors,
    ingest,
    load_store,
    save_store,
)
from .config import ConfigError, PipelineConfig
from .synth import gen_synthetic

STAGE_ORDER = (
    "synth",
    "ingest",
    "cluster",
    "normalize",
    "detect",
    "classify",
    "metrics",
    "fit",
    "stats",
    "report",
)

CURVE_METRICS = (
    # (name, column, restricted to all-small-team windows per the figure convention)
    ("team_size", "mean_team_size", True),
    ("big_project", "big_project", False),
    ("dense", "dense", True),
    ("betweenness", "betweenness", True),
    ("diversity", "diversity", True),
    ("new_topic", "new_topic", True),
)


class PipelineError(RuntimeError):
    """A stage failed; carries the stage name and the original error."""

    def __init__(self, stage: str, cause: Exception) -> None:
        super().__init__(f"stage {stage}: {cause}")
        self.stage = stage
        self.cause = cause


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(config: PipelineConfig) -> str:
    # paths are excluded so runs into different directories stay comparable;
    # input content is covered separately by the stage cache keys
    obj = dataclasses.asdict(config)
    for key in ("papers_path", "citations_path", "out_dir"):
        obj.pop(key, None)
    blob = json.dumps(obj, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _params_tag(p: detect.DetectionParams) -> str:
    k = repr(p.k_percent).rstrip("0").rstrip(".").replace(".", "_")
    return f"x{p.x}n{p.n}k{k}"


def _impact_scale(values: Sequence[float], log_scale: bool) -> list[float]:
    if not log_scale:
        return [float(v) for v in values]
    return [math.log10(v + 1.0) for v in values]


def _smooth(seq: Sequence[float], window: int) -> list[float]:
    # same centering convention as the career moving average
    n = len(seq)
    window = max(1, min(window, n))
    h_l = (window - 1) // 2
    h_r = window - 1 - h_l
    out = []
    for i in range(n):
        lo = max(0, i - h_l)
        hi = min(n, i + h_r + 1)
        out.append(sum(seq[lo:hi]) / (hi - lo))
    return out


class _Run:
    """Mutable state threaded through the stages of one pipeline run."""

    def __init__(self, config: PipelineConfig) -> None:
        self.config = config
        self.out = Path(config.out_dir)
        self.reports = self.out / "reports"
        self.cache_dir = self.out / "cache"
        self._ingest_key: str | None = None
        self.store: CorpusStore | None = None
        self.enriched: CorpusStore | None = None
        self.spans: dict[str, dict[str, list[detect.StreakSpan]]] = {}
        self.windows: list[detect.SequenceWindow] = []
        self.window_rows: list[dict[str, Any]] = []
        self.topics: dict[str, dict[str, int]] = {}
        self.manifest: dict[str, Any] = {
            "config_hash": config_hash(config),
            "seeds": {
                "base": config.base_seed,
                "slots": {
                    slot: config.seed_for(slot)
                    for slot in ("synthesis", "sampling", "clustering", "fitting", "shuffle")
                },
            },
            "stages": {},
            "files": {},
        }

    def emit_csv(
        self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]
    ) -> Path:
        self.reports.mkdir(parents=True, exist_ok=True)
        path = self.reports / name
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
        self.register(path)
        return path

    def emit_json(self, path: Path, obj: Any) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, sort_keys=True, indent=1)
            fh.write("\n")
        self.register(path)
        return path

    def register(self, path: Path, valid: bool = True) -> None:
        rel = str(path.relative_to(self.out))
        self.manifest["files"][rel] = {
            "sha256": _sha256_file(path),
            "valid": valid,
        }

    def invalidate_all(self) -> None:
        for entry in self.manifest["files"].values():
            entry["valid"] = False

    def write_manifest(self) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / "manifest.json"
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.manifest, fh, sort_keys=True, indent=1)
            fh.write("\n")
        return path


# --- stages ---------------------------------------------------------------

def _stage_synth(run: _Run) -> None:
    config = run.config
    if config.synth is None:
        return
    if Path(config.papers_path).name != "papers.jsonl" or (
        Path(config.citations_path).name != "citations.jsonl"
    ):
        raise ConfigError(
            "with a synth section, corpus paths must end in papers.jsonl and "
            "citations.jsonl (or be omitted)"
        )
    spec = dataclasses.replace(
        config.synth, seed=config.seed_for("synthesis", config.synth.seed)
    )
    paths = gen_synthetic(spec, Path(config.papers_path).parent)
    for p in paths.values():
        if Path(p).is_relative_to(run.out):
            run.register(Path(p))
    run.manifest["stages"]["synth"] = {"status": "ok"}


def _ingest_cache_key(run: _Run) -> str:
    if run._ingest_key is not None:
        return run._ingest_key
    cfg = run.config
    h = hashlib.sha256()
    h.update(
        json.dumps(
            [cfg.min_papers, cfg.min_years, cfg.cutoff_month], sort_keys=True
        ).encode()
    )
    for path in (cfg.papers_path, cfg.citations_path):
        h.update(_sha256_file(Path(path)).encode())
    run._ingest_key = h.hexdigest()[:16]
    return run._ingest_key


def _stage_ingest(run: _Run) -> None:
    cfg = run.config
    cache = run.cache_dir / f"corpus-{_ingest_cache_key(run)}.snap"
    if cfg.use_cache and cache.exists():
        with open(cache, "r", encoding="utf-8") as fh:
            run.store = load_store(fh)
        run.manifest["stages"]["ingest"] = {"status": "ok", "cache_hit": True}
    else:
        with open(cfg.papers_path, "r", encoding="utf-8") as pfh, open(
            cfg.citations_path, "r", encoding="utf-8"
        ) as cfh:
            raw = ingest(pfh, cfh)
        run.store = filter_authors(raw, cfg.min_papers, cfg.min_years, cfg.cutoff_month)
        if cfg.use_cache:
            run.cache_dir.mkdir(parents=True, exist_ok=True)
            with open(cache, "w", encoding="utf-8") as fh:
                save_store(run.store, fh)
        run.manifest["stages"]["ingest"] = {"status": "ok", "cache_hit": False}
    store = run.store
    run.manifest["corpus"] = {
        "authors": store.n_authors,
        "papers": len(store.papers),
        "citations": len(store.citations),
        "note": "zero authors after filtering" if store.n_authors == 0 else "",
    }


def _enriched_cache_key(run: _Run) -> str:
    cfg = run.config
    h = hashlib.sha256()
    h.update(_ingest_cache_key(run).encode())
    h.update(
        json.dumps(
            [cfg.field_gamma, cfg.field_min_size, cfg.k_percent, cfg.base_seed],
            sort_keys=True,
        ).encode()
    )
    return h.hexdigest()[:16]


def _stage_cluster_and_normalize(run: _Run) -> None:
    cfg = run.config
    assert run.store is not None
    cache = run.cache_dir / f"enriched-{_enriched_cache_key(run)}.snap"
    if cfg.use_cache and cache.exists():
        with open(cache, "r", encoding="utf-8") as fh:
            run.enriched = load_store(fh)
        run.manifest["stages"]["cluster"] = {"status": "ok", "cache_hit": True}
        run.manifest["stages"]["normalize"] = {"status": "ok", "cache_hit": True}
        baseline = impact.build_baseline(run.enriched)
    else:
        store = run.store
        if store.n_authors == 0:
            run.enriched = store
            baseline = impact.FieldYearBaseline(means={}, counts={})
        else:
            graph = graphcluster.WeightedGraph()
            for pid in store.papers:
                graph.add_node(pid)
            for pid, paper in store.papers.items():
                for ref in paper.reference_ids:
                    if ref in store.papers:
                        graph.add_edge(pid, ref, 1.0)
            fields = graphcluster.assign_fields(
                graph,
                cfg.field_gamma,
                cfg.field_min_size,
                seed=cfg.seed_for("clustering"),
            )
            store = attach_paper_fields(store, fields)
            store = impact.attach_c10(store)
            store, baseline = impact.attach_normalized_impacts(store, cfg.k_percent)
            run.enriched = store
        if cfg.use_cache:
            run.cache_dir.mkdir(parents=True, exist_ok=True)
            with open(cache, "w", encoding="utf-8") as fh:
                save_store(run.enriched, fh)
        run.manifest["stages"]["cluster"] = {"status": "ok", "cache_hit": False}
        run.manifest["stages"]["normalize"] = {"status": "ok", "cache_hit": False}

    enriched = run.enriched
    run.emit_csv(
        "fields.csv",
        ["paper_id", "field_id"],
        sorted((pid, p.field_id) for pid, p in enriched.papers.items()),
    )
    run.emit_csv(
        "baseline.csv",
        ["field_id", "year", "mean_c10", "count"],
        baseline.rows(),
    )


def _stage_detect(run: _Run) -> None:
    cfg = run.config
    store = run.enriched
    assert store is not None
    authors = sorted(store.careers)
    for params in cfg.detection_params:
        tag = _params_tag(params)
        per_author: dict[str, list[detect.StreakSpan]] = {}
        rows = []
        for author in authors:
            career = store.careers[author]
            if abs(params.k_percent - cfg.k_percent) < 1e-12:
                flags = career.top_flags
            else:
                records = [store.papers[t] for t in career.papers]
                tie = [(-(r.c10 or 0), r.pub_month, r.paper_id) for r in records]
                flags = impact.top_k_flags(
                    list(career.impacts), params.k_percent, tie_keys=tie
                )
            spans = detect.detect_streaks(flags, params)
            spans = [
                dataclasses.replace(
                    sp,
                    onset_month=store.papers[career.papers[sp.start_idx]].pub_month,
                )
                for sp in spans
            ]
            per_author[author] = spans
            for sp in spans:
                rows.append(
                    (author, sp.start_idx, sp.end_idx, sp.onset_relative, sp.onset_month)
                )
        run.spans[tag] = per_author
        run.emit_csv(
            f"streaks_{tag}.csv",
            ["author_id", "start_idx", "end_idx", "onset_relative", "onset_month"],
            rows,
        )

    stat_rows = []
    hist_rows = []
    for params in cfg.detection_params:
        tag = _params_tag(params)
        per_author = run.spans[tag]
        histogram: dict[int, int] = {}
        for author in authors:
            n_spans = len(per_author[author])
            histogram[n_spans] = histogram.get(n_spans, 0) + 1
        total = len(authors)
        with_streak = sum(c for k, c in histogram.items() if k >= 1)
        multi = sum(c for k, c in histogram.items() if k >= 2)
        stat_rows.append(
            (
                params.x,
                params.n,
                params.k_percent,
                with_streak / total if total else 0.0,
                multi / total if total else 0.0,
            )
        )
        for n_spans in sorted(histogram):
            hist_rows.append((params.x, params.n, params.k_percent, n_spans, histogram[n_spans]))
    run.emit_csv(
        "streak_stats.csv",
        ["x", "n", "k_percent", "authors_with_streak", "multi_streak"],
        stat_rows,
    )
    run.emit_csv(
        "streak_hist.csv",
        ["x", "n", "k_percent", "spans", "authors"],
        hist_rows,
    )
    run.manifest["stages"]["detect"] = {"status": "ok"}


def _stage_classify(run: _Run) -> None:
    cfg = run.config
    store = run.enriched
    assert store is not None
    tag = _params_tag(cfg.primary_params)
    per_author = run.spans[tag]
    windows: list[detect.SequenceWindow] = []
    for idx, author in enumerate(sorted(store.careers)):
        career = store.careers[author]
        spans = per_author[author]
        if spans:
            windows.extend(detect.extract_hot_windows(career, spans))
        elif career.n_total >= detect.WINDOW_LEN:
            # the sampled labels require that no 5-window holds 3 flags; with
            # a non-3/5 primary triple such careers can slip through undetected
            flags = career.top_flags
            if any(
                sum(flags[s : s + detect.WINDOW_LEN]) >= 3
                for s in range(career.n_total - detect.WINDOW_LEN + 1)
            ):
                continue
            windows.append(
                detect.sample_nonhot_window(
                    career,
                    seed=cfg.seed_for("sampling", idx),
                    require_top_first=cfg.require_top_first,
                )
            )
    run.windows = windows
    run.emit_csv(
        "windows.csv",
        ["author_id", "start_idx", "label", "onset_relative"],
        [(w.author_id, w.start_idx, w.label, w.onset_relative) for w in windows],
    )
    run.manifest["stages"]["classify"] = {"status": "ok"}


def _topics_payload(args: tuple) -> tuple[str, dict[str, int]]:
    career, refs, gamma = args
    return career.author_id, graphcluster.author_topics(career, refs, gamma=gamma)


def _stage_metrics(run: _Run) -> None:
    cfg = run.config
    store = run.enriched
    assert store is not None
    authors_needed = sorted({w.author_id for w in run.windows})
    payloads = []
    for author in authors_needed:
        career = store.careers[author]
        refs = {t: store.papers[t].reference_ids for t in career.papers}
        payloads.append((career, refs, cfg.topic_gamma))
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_topics_payload, payloads, chunksize=64))
    else:
        results = [_topics_payload(p) for p in payloads]
    run.topics = {author: topics for author, topics in results}

    rows = []
    for w in run.windows:
        career = store.careers[w.author_id]
        author_lists = [store.papers[t].author_ids for t in w.papers]
        topics = run.topics[w.author_id]
        window_topics = [topics[t] for t in w.papers]
        prior = {topics[t] for t in career.papers[: w.start_idx]}
        net = collab.build_local_net(author_lists, w.author_id)
        label = collab.classify_streak_type(
            author_lists, w.author_id, big_threshold=cfg.big_team_threshold
        )
        row = {
            "author_id": w.author_id,
            "start_idx": w.start_idx,
            "label": w.label,
            "onset_relative": w.onset_relative,
            "mean_team_size": collab.mean_team_size(author_lists),
            "big_project": collab.has_big_project(author_lists, cfg.big_team_threshold),
            "max_freq": collab.max_coauthor_freq(author_lists, w.author_id),
            "dense": collab.is_dense_ties(author_lists, w.author_id),
            "betweenness": collab.focal_betweenness(net),
            "diversity": collab.topic_diversity(window_topics),
            "new_topic": collab.is_new_topic(window_topics, prior),
            "type": label.name,
            "all_small": all(
                len(a) < cfg.big_team_threshold for a in author_lists
            ),
        }
        rows.append(row)
    run.window_rows = rows
    run.emit_csv(
        "window_metrics.csv",
        [
            "author_id", "start_idx", "label", "onset_relative", "mean_team_size",
            "big_project", "max_freq", "dense", "betweenness", "diversity",
            "new_topic", "type",
        ],
        [
            (
                r["author_id"], r["start_idx"], r["label"], r["onset_relative"],
                r["mean_team_size"], r["big_project"], r["max_freq"], r["dense"],
                r["betweenness"], r["diversity"], r["new_topic"], r["type"],
            )
            for r in rows
        ],
    )
    type_counts: dict[str, int] = {}
    for r in rows:
        if r["label"] == "Hot":
            type_counts[r["type"]] = type_counts.get(r["type"], 0) + 1
    run.emit_csv(
        "streak_types.csv",
        ["type", "count"],
        sorted(type_counts.items()),
    )
    run.manifest["stages"]["metrics"] = {"status": "ok"}


def _stage_fit(run: _Run) -> None:
    cfg = run.config
    store = run.enriched
    assert store is not None
    authors = sorted(
        a for a, c in store.careers.items() if c.n_total >= 9
    )
    rng = np.random.default_rng(cfg.seed_for("fitting"))
    if len(authors) > cfg.fit_sample_size:
        picks = rng.choice(len(authors), size=cfg.fit_sample_size, replace=False)
        sample = [authors[i] for i in sorted(picks)]
    else:
        sample = authors

    def fit_row(author: str, wsr: float, fit: hotstreak.PulseFit) -> tuple:
        cells: list[Any] = [author, wsr, fit.base]
        for j in range(3):
            if j < len(fit.pulses):
                p = fit.pulses[j]
                cells.extend([p.hot, p.n_up, p.n_down])
            else:
                cells.extend([None, None, None])
        cells.append(fit.objective)
        cells.append(len(fit.active_pulses(cfg.epsilon_active)))
        return tuple(cells)

    header = [
        "author_id", "wsr", "base", "hot1", "nu1", "nd1", "hot2", "nu2", "nd2",
        "hot3", "nu3", "nd3", "objective", "active_pulses",
    ]
    simple_rows = []
    full_rows = []
    model_onsets: dict[float, dict[str, list[float]]] = {}
    for wsr in (cfg.fit_wsr, 0.0):
        model_onsets[wsr] = {}
    for i, author in enumerate(sample):
        career = store.careers[author]
        values = _impact_scale([v or 0.0 for v in career.impacts], cfg.log_impact_scale)
        for wsr in cfg.wsr_list:
            smoothed = hotstreak.moving_average(values, wsr)
            simple_rows.append(fit_row(author, wsr, hotstreak.fit_simple(smoothed)))
        for wsr in (cfg.fit_wsr, 0.0):
            smoothed = hotstreak.moving_average(values, wsr)
            fit = hotstreak.fit_full(
                smoothed,
                lambda_penalty=cfg.lambda_penalty,
                restarts=cfg.restarts,
                seed=cfg.seed_for("fitting", 1, i),
            )
            full_rows.append(fit_row(author, wsr, fit))
            model_onsets[wsr][author] = [
                p.n_up / career.n_total for p in fit.active_pulses(cfg.epsilon_active)
            ]
    run.emit_csv("fit_simple_report.csv", header, simple_rows)
    run.emit_csv("fit_report.csv", header, full_rows)

    tag = _params_tag(cfg.primary_params)
    data_onsets = {
        author: [sp.onset_relative for sp in run.spans[tag].get(author, [])]
        for author in sample
    }
    confusion_rows = []
    for wsr in (cfg.fit_wsr, 0.0):
        counts = hotstreak.onset_confusion(model_onsets[wsr], data_onsets)
        confusion_rows.append(
            (wsr, counts["both"], counts["model_only"], counts["data_only"])
        )
    run.emit_csv(
        "confusion.csv", ["wsr", "both", "model_only", "data_only"], confusion_rows
    )
    run.manifest["stages"]["fit"] = {"status": "ok"}


def _top5_positions(career) -> list[float]:
    records = [(i, career.impacts[i] or 0.0) for i in range(career.n_total)]
    records.sort(key=lambda t: (-t[1], t[0]))
    n = career.n_total
    return [(i + 1) / n for i, _ in records[:5]]


def _stage_stats(run: _Run) -> None:
    cfg = run.config
    store = run.enriched
    assert store is not None
    authors = sorted(store.careers)

    # onset densities, raw and shuffled, per detection params
    for params in cfg.detection_params:
        tag = _params_tag(params)
        onsets = [
            sp.onset_relative
            for author in authors
            for sp in run.spans[tag][author]
        ]
        density = stats.onset_density(onsets, cfg.bins)
        ses = density.standard_errors()
        run.emit_csv(
            f"onset_density_{tag}.csv",
            ["bin_lo", "bin_hi", "count", "density", "std_error"],
            [
                (density.edges[i], density.edges[i + 1], density.counts[i],
                 density.densities[i], ses[i])
                for i in range(cfg.bins)
            ],
        )
        shuffled_onsets = []
        for idx, author in enumerate(authors):
            career = store.careers[author]
            shuffled = impact.shuffle_career(career, cfg.seed_for("shuffle", idx))
            for sp in detect.detect_streaks(shuffled.top_flags, params):
                shuffled_onsets.append(sp.onset_relative)
        sdensity = stats.onset_density(shuffled_onsets, cfg.bins)
        sses = sdensity.standard_errors()
        run.emit_csv(
            f"onset_density_shuffled_{tag}.csv",
            ["bin_lo", "bin_hi", "count", "density", "std_error"],
            [
                (sdensity.edges[i], sdensity.edges[i + 1], sdensity.counts[i],
                 sdensity.densities[i], sses[i])
                for i in range(cfg.bins)
            ],
        )

    # per-label metric curves over onset timing
    for name, column, restricted in CURVE_METRICS:
        rows = []
        for label in ("Hot", "Top", "Ordinary"):
            points = [
                (r["onset_relative"], float(r[column]))
                for r in run.window_rows
                if r["label"] == label
                and (not restricted or not cfg.small_team_filter or r["all_small"])
            ]
            curve = stats.binned_metric_curve(points, cfg.bins)
            for i in range(cfg.bins):
                rows.append(
                    (
                        label, curve.edges[i], curve.edges[i + 1], curve.counts[i],
                        curve.means[i], curve.std_errors[i], curve.ci_half_widths[i],
                    )
                )
        run.emit_csv(
            f"curve_{name}.csv",
            ["label", "bin_lo", "bin_hi", "count", "mean", "std_error", "ci_half_width"],
            rows,
        )

    # joint probability of the top-1/top-2 timing, plus temporal distances
    pairs = []
    dx_real: list[float] = []
    dx_shuffled: list[float] = []
    for idx, author in enumerate(authors):
        career = store.careers[author]
        if career.n_total < 5:
            continue
        pos = _top5_positions(career)
        pairs.append((pos[0], pos[1]))
        for a in range(5):
            for b in range(a + 1, 5):
                dx_real.append(abs(pos[a] - pos[b]))
        shuffled = impact.shuffle_career(career, cfg.seed_for("shuffle", idx))
        spos = _top5_positions(shuffled)
        for a in range(5):
            for b in range(a + 1, 5):
                dx_shuffled.append(abs(spos[a] - spos[b]))
    jmap = stats.joint_probability_map(pairs, cfg.jointmap_bins)
    run.emit_csv(
        "jointmap.csv",
        ["row", "col", "ratio"],
        [
            (i, j, jmap.ratios[i][j])
            for i in range(cfg.jointmap_bins)
            for j in range(cfg.jointmap_bins)
        ],
    )
    ratios = stats.temporal_distance_ratio(dx_real, dx_shuffled, cfg.bins)
    run.emit_csv(
        "tdr.csv",
        ["bin_lo", "bin_hi", "ratio"],
        [(i / cfg.bins, (i + 1) / cfg.bins, ratios[i]) for i in range(cfg.bins)],
    )

    # longest above-threshold runs, real versus shuffled
    length_rows = []
    for kind in ("median", "mean", "top_quantile"):
        real_hist: dict[int, int] = {}
        shuf_hist: dict[int, int] = {}
        for idx, author in enumerate(authors):
            career = store.careers[author]
            values = [v or 0.0 for v in career.impacts]
            L = stats.max_streak_length(values, kind)
            real_hist[L] = real_hist.get(L, 0) + 1
            shuffled = impact.shuffle_career(career, cfg.seed_for("shuffle", idx))
            svalues = [v or 0.0 for v in shuffled.impacts]
            Ls = stats.max_streak_length(svalues, kind)
            shuf_hist[Ls] = shuf_hist.get(Ls, 0) + 1
        for L in sorted(set(real_hist) | set(shuf_hist)):
            length_rows.append((kind, L, real_hist.get(L, 0), shuf_hist.get(L, 0)))
    run.emit_csv(
        "streak_length.csv",
        ["threshold_kind", "L", "real_count", "shuffled_count"],
        length_rows,
    )

    # early/late onset densities per field
    tag = _params_tag(cfg.primary_params)
    by_field: dict[int, list[float]] = {}
    for author in authors:
        career = store.careers[author]
        for sp in run.spans[tag][author]:
            fields = [
                store.papers[t].field_id
                for t in career.papers[sp.start_idx : sp.start_idx + detect.WINDOW_LEN]
            ]
            fields = [f for f in fields if f is not None]
            if not fields:
                continue
            counts: dict[int, int] = {}
            for f in fields:
                counts[f] = counts.get(f, 0) + 1
            field = min(
                counts, key=lambda f: (-counts[f], f)
            )
            by_field.setdefault(field, []).append(sp.onset_relative)
    early_late = stats.field_early_late(by_field)
    run.emit_csv(
        "early_late.csv",
        ["field_id", "count", "early_mass", "late_mass", "early_density", "late_density"],
        [
            (f, r.count, r.early_mass, r.late_mass, r.early_density, r.late_density)
            for f, r in sorted(early_late.items())
        ],
    )

    # onset years from career start / to career end, by career-length group
    entries = []
    for author in authors:
        career = store.careers[author]
        if career.n_total == 0:
            continue
        first = store.papers[career.papers[0]].pub_month
        last = store.papers[career.papers[-1]].pub_month
        for sp in run.spans[tag][author]:
            entries.append((sp.onset_month, first, last))
    views = stats.onset_year_views(entries)
    year_rows = []
    for group in sorted(views):
        for view in ("years_from_start", "years_to_end"):
            for year in sorted(views[group][view]):
                year_rows.append((group, view, year, views[group][view][year]))
    run.emit_csv(
        "onset_years.csv", ["group", "view", "year", "count"], year_rows
    )
    run.manifest["stages"]["stats"] = {"status": "ok"}


def report_author(
    store: CorpusStore,
    author_id: str,
    params: detect.DetectionParams,
    topic_gamma: float = 1.0,
) -> dict[str, Any]:
    """Per-author dossier: flagged career, spans, and smoothed metric tracks.

    The three tracks (team size per paper, max co-author frequency and topic
    diversity per five-paper window) are smoothed with a moving window of 5%
    of the career length.
    """
    if author_id not in store.careers:
        raise KeyError(f"unknown author {author_id!r}")
    career = store.careers[author_id]
    n = career.n_total
    spans = detect.detect_career(career, params, store)
    team_sizes = [float(len(store.papers[t].author_ids)) for t in career.papers]
    freq_track: list[float] = []
    div_track: list[float] = []
    if n >= detect.WINDOW_LEN:
        refs = {t: store.papers[t].reference_ids for t in career.papers}
        topics = graphcluster.author_topics(career, refs, gamma=topic_gamma)
        for s in range(n - detect.WINDOW_LEN + 1):
            window = career.papers[s : s + detect.WINDOW_LEN]
            lists = [store.papers[t].author_ids for t in window]
            freq_track.append(float(collab.max_coauthor_freq(lists, author_id)))
            div_track.append(float(collab.topic_diversity([topics[t] for t in window])))
    window = max(1, int(round(0.05 * n)))
    return {
        "author_id": author_id,
        "n_total": n,
        "impacts": [v if v is None else float(v) for v in career.impacts],
        "top_flags": [bool(f) for f in career.top_flags],
        "spans": [
            {
                "start_idx": sp.start_idx,
                "end_idx": sp.end_idx,
                "onset_relative": sp.onset_relative,
                "onset_month": sp.onset_month,
            }
            for sp in spans
        ],
        "smoothing_window": window,
        "tracks": {
            "team_size": {
                "raw": team_sizes,
                "smoothed": _smooth(team_sizes, window),
            },
            "max_coauthor_freq": {
                "raw": freq_track,
                "smoothed": _smooth(freq_track, window),
            },
            "topic_diversity": {
                "raw": div_track,
                "smoothed": _smooth(div_track, window),
            },
        },
    }


def _stage_report(run: _Run) -> None:
    cfg = run.config
    store = run.enriched
    assert store is not None
    for author in cfg.report_authors:
        dossier = report_author(
            store, author, cfg.primary_params, topic_gamma=cfg.topic_gamma
        )
        run.emit_json(run.reports / f"report_{author}.json", dossier)
    run.manifest["stages"]["report"] = {"status": "ok"}


_STAGE_FUNCS = {
    "synth": _stage_synth,
    "ingest": _stage_ingest,
    "cluster": _stage_cluster_and_normalize,
    "normalize": lambda run: None,  # folded into cluster; kept for stage naming
    "detect": _stage_detect,
    "classify": _stage_classify,
    "metrics": _stage_metrics,
    "fit": _stage_fit,
    "stats": _stage_stats,
    "report": _stage_report,
}

_SUBCOMMAND_LAST_STAGE = {
    "synth": "synth",
    "ingest": "ingest",
    "detect": "detect",
    "classify": "classify",
    "metrics": "metrics",
    "fit": "fit",
    "stats": "stats",
    "report": "report",
    "all": "report",
}


def run_pipeline(config: PipelineConfig, subcommand: str = "all") -> dict[str, Any]:
    """Run the stages a subcommand needs, emit reports, write the manifest.

    Raises :class:`PipelineError` naming the failing stage; the manifest is
    still written with the partial outputs marked invalid.
    """
    if subcommand not in _SUBCOMMAND_LAST_STAGE:
        raise ValueError(f"unknown subcommand {subcommand!r}")
    last = _SUBCOMMAND_LAST_STAGE[subcommand]
    run = _Run(config)
    stages = list(STAGE_ORDER[: STAGE_ORDER.index(last) + 1])
    if config.synth is None and "synth" in stages:
        stages.remove("synth")
    try:
        for stage in stages:
            try:
                _STAGE_FUNCS[stage](run)
            except PipelineError:
                raise
            except Exception as exc:
                raise PipelineError(stage, exc) from exc
    except PipelineError as exc:
        run.manifest["stages"][exc.stage] = {"status": "failed", "error": str(exc.cause)}
        run.invalidate_all()
        run.write_manifest()
        raise
    run.write_manifest()
    return run.manifest
