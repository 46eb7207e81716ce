import json
from pathlib import Path

import pytest
import yaml

from streakforge.cli.config import ConfigError, config_from_dict, load_config, slot_seed
from streakforge.cli.main import main
from streakforge.cli.pipeline import PipelineError, config_hash, report_author, run_pipeline
from streakforge.corpus import AuthorCareer, CorpusStore, PaperRecord
from streakforge.detect import DetectionParams


def small_config(tmp_path, authors=40, **synth_extra):
    synth = {"authors": authors, "placement": "edges", "seed": 1}
    synth.update(synth_extra)
    return config_from_dict(
        {
            "out_dir": str(tmp_path / "out"),
            "seed": 9,
            "synth": synth,
            "filters": {"min_papers": 10, "min_years": 0},
            "fit": {"sample_size": 8, "restarts": 3},
        }
    )


class TestConfig:
    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            config_from_dict({"out_dir": "o", "synth": {}, "bogus": 1})

    def test_needs_corpus_or_synth(self):
        with pytest.raises(ConfigError, match="corpus section or a synth"):
            config_from_dict({"out_dir": "o"})

    def test_detection_triple_validated(self):
        with pytest.raises(ValueError):
            config_from_dict(
                {
                    "out_dir": "o",
                    "synth": {},
                    "detection": {"params": [[6, 5, 10.0]]},
                }
            )

    def test_paths_must_differ(self):
        with pytest.raises(ConfigError, match="distinct"):
            config_from_dict(
                {"out_dir": "o", "corpus": {"papers": "x", "citations": "x"}}
            )

    def test_load_config_resolves_relative_paths(self, tmp_path):
        cfg_path = tmp_path / "cfg.yaml"
        cfg_path.write_text(
            yaml.safe_dump(
                {
                    "out_dir": "results",
                    "corpus": {"papers": "data/p.jsonl", "citations": "data/c.jsonl"},
                }
            )
        )
        cfg = load_config(cfg_path)
        assert cfg.out_dir == str(tmp_path / "results")
        assert cfg.papers_path == str(tmp_path / "data" / "p.jsonl")

    def test_slot_seeds_stable_and_distinct(self):
        a = slot_seed(42, "sampling")
        assert a == slot_seed(42, "sampling")
        assert a != slot_seed(42, "fitting")
        assert slot_seed(42, "sampling", 1) != slot_seed(42, "sampling", 2)

    def test_config_hash_ignores_paths(self, tmp_path):
        a = small_config(tmp_path / "a")
        b = small_config(tmp_path / "b")
        assert config_hash(a) == config_hash(b)


class TestPipelineRuns:
    def test_end_to_end_determinism(self, tmp_path):
        m1 = run_pipeline(small_config(tmp_path / "r1"), "all")
        m2 = run_pipeline(small_config(tmp_path / "r2"), "all")
        out1, out2 = tmp_path / "r1" / "out", tmp_path / "r2" / "out"
        files1 = sorted(p.relative_to(out1) for p in out1.rglob("*") if p.is_file())
        files2 = sorted(p.relative_to(out2) for p in out2.rglob("*") if p.is_file())
        assert files1 == files2
        for rel in files1:
            assert (out1 / rel).read_bytes() == (out2 / rel).read_bytes(), rel
        assert m1 == m2

    def test_manifest_lists_every_report_with_hash(self, tmp_path):
        cfg = small_config(tmp_path)
        manifest = run_pipeline(cfg, "all")
        out = Path(cfg.out_dir)
        on_disk = {
            str(p.relative_to(out))
            for p in (out / "reports").rglob("*")
            if p.is_file()
        }
        listed = set(manifest["files"])
        assert on_disk <= listed
        for rel, entry in manifest["files"].items():
            assert entry["valid"] is True
            assert len(entry["sha256"]) == 64
            assert (out / rel).exists()

    def test_u_shape_in_reports(self, tmp_path):
        import csv

        cfg = small_config(tmp_path, authors=300)
        run_pipeline(cfg, "all")
        with open(Path(cfg.out_dir) / "reports" / "onset_density_x3n5k10.csv") as fh:
            rows = list(csv.DictReader(fh))
        densities = [float(r["density"]) for r in rows]
        assert densities[0] > 1.0 and densities[9] > 1.0
        assert all(d < 1.0 for d in densities[3:7])

    def test_empty_corpus_ok(self, tmp_path):
        papers = tmp_path / "papers.jsonl"
        citations = tmp_path / "citations.jsonl"
        papers.write_text("")
        citations.write_text("")
        cfg = config_from_dict(
            {
                "out_dir": str(tmp_path / "out"),
                "corpus": {"papers": str(papers), "citations": str(citations)},
            }
        )
        manifest = run_pipeline(cfg, "all")
        assert manifest["corpus"]["authors"] == 0
        assert manifest["corpus"]["note"] == "zero authors after filtering"
        assert all(s["status"] == "ok" for s in manifest["stages"].values())

    def test_cache_hit_on_second_run(self, tmp_path):
        cfg = small_config(tmp_path, authors=15)
        m1 = run_pipeline(cfg, "all")
        assert m1["stages"]["ingest"]["cache_hit"] is False
        m2 = run_pipeline(cfg, "all")
        assert m2["stages"]["ingest"]["cache_hit"] is True
        assert m2["stages"]["cluster"]["cache_hit"] is True
        # cached rerun leaves identical reports
        assert m1["files"] == m2["files"]

    def test_failed_stage_marks_outputs_invalid(self, tmp_path):
        papers = tmp_path / "papers.jsonl"
        citations = tmp_path / "citations.jsonl"
        papers.write_text('{"paper_id": "p", "pub_month": broken\n')
        citations.write_text("")
        cfg = config_from_dict(
            {
                "out_dir": str(tmp_path / "out"),
                "corpus": {"papers": str(papers), "citations": str(citations)},
            }
        )
        with pytest.raises(PipelineError, match="ingest"):
            run_pipeline(cfg, "all")
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["stages"]["ingest"]["status"] == "failed"
        for entry in manifest["files"].values():
            assert entry["valid"] is False

    def test_detect_subcommand_stops_early(self, tmp_path):
        cfg = small_config(tmp_path, authors=15)
        manifest = run_pipeline(cfg, "detect")
        assert "detect" in manifest["stages"]
        assert "fit" not in manifest["stages"]

    def test_streak_types_partition_hot_windows(self, tmp_path):
        import csv

        cfg = small_config(tmp_path, authors=60)
        run_pipeline(cfg, "all")
        reports = Path(cfg.out_dir) / "reports"
        with open(reports / "window_metrics.csv") as fh:
            hot_rows = [r for r in csv.DictReader(fh) if r["label"] == "Hot"]
        with open(reports / "streak_types.csv") as fh:
            type_counts = {r["type"]: int(r["count"]) for r in csv.DictReader(fh)}
        assert sum(type_counts.values()) == len(hot_rows)


class TestReportAuthor:
    def make_store(self):
        papers = {}
        careers = {}
        n = 100
        ids = []
        for i in range(n):
            pid = f"p{i:03d}"
            papers[pid] = PaperRecord(
                paper_id=pid,
                pub_month=i * 2,
                author_ids=("A",) if i % 3 else ("A", "B"),
                reference_ids=(f"r{i % 4}",),
            )
            ids.append(pid)
        impacts = [float(i % 7) for i in range(n)]
        flags = [v >= 6.0 for v in impacts]
        careers["A"] = AuthorCareer("A", tuple(ids), tuple(impacts), tuple(flags))
        return CorpusStore(papers=papers, careers=careers)

    def test_smoothing_window_five_percent(self):
        store = self.make_store()
        dossier = report_author(store, "A", DetectionParams(3, 5))
        assert dossier["smoothing_window"] == 5
        raw = dossier["tracks"]["team_size"]["raw"]
        smoothed = dossier["tracks"]["team_size"]["smoothed"]
        # window 5 centers with h_l = h_r = 2: first point averages raw[0:3]
        assert smoothed[0] == pytest.approx(sum(raw[:3]) / 3)
        assert smoothed[2] == pytest.approx(sum(raw[:5]) / 5)

    def test_single_paper_author(self):
        papers = {
            "p0": PaperRecord(paper_id="p0", pub_month=5, author_ids=("S",))
        }
        careers = {"S": AuthorCareer("S", ("p0",), (1.0,), (True,))}
        store = CorpusStore(papers=papers, careers=careers)
        dossier = report_author(store, "S", DetectionParams(3, 5))
        assert dossier["n_total"] == 1
        assert dossier["spans"] == []
        assert dossier["tracks"]["max_coauthor_freq"]["raw"] == []

    def test_unknown_author(self):
        store = self.make_store()
        with pytest.raises(KeyError, match="unknown author"):
            report_author(store, "nobody", DetectionParams(3, 5))

    def test_planted_span_marked(self, tmp_path):
        cfg = small_config(tmp_path, authors=12)
        run_pipeline(cfg, "all")
        truth = json.loads(
            (Path(cfg.out_dir) / "data" / "groundtruth.json").read_text()
        )["authors"]
        # reconstruct the enriched store from the cache via a fresh run object
        from streakforge.cli.pipeline import _Run, _stage_ingest, _stage_cluster_and_normalize

        run = _Run(cfg)
        _stage_ingest(run)
        _stage_cluster_and_normalize(run)
        author = sorted(truth)[0]
        dossier = report_author(run.enriched, author, cfg.primary_params)
        spans = [(s["start_idx"], s["end_idx"]) for s in dossier["spans"]]
        assert spans == [tuple(truth[author]["span"])]


class TestCli:
    def write_cfg(self, tmp_path, authors=12):
        cfg = {
            "out_dir": str(tmp_path / "out"),
            "seed": 3,
            "synth": {"authors": authors, "seed": 2},
            "filters": {"min_papers": 10, "min_years": 0},
            "fit": {"sample_size": 4, "restarts": 2},
        }
        path = tmp_path / "cfg.yaml"
        path.write_text(yaml.safe_dump(cfg))
        return path

    def test_usage_error_exit_1(self, capsys):
        assert main(["not-a-command"]) == 1
        assert main([]) == 1

    def test_missing_config_exit_2(self, tmp_path):
        assert main(["detect", str(tmp_path / "nope.yaml")]) == 2

    def test_bad_corpus_exit_2(self, tmp_path):
        cfg = {
            "out_dir": str(tmp_path / "out"),
            "corpus": {
                "papers": str(tmp_path / "missing.jsonl"),
                "citations": str(tmp_path / "missing2.jsonl"),
            },
        }
        path = tmp_path / "cfg.yaml"
        path.write_text(yaml.safe_dump(cfg))
        assert main(["ingest", str(path)]) == 2

    def test_full_run_exit_0(self, tmp_path):
        path = self.write_cfg(tmp_path)
        assert main(["all", str(path)]) == 0
        assert (tmp_path / "out" / "manifest.json").exists()

    def test_out_dir_override(self, tmp_path):
        path = self.write_cfg(tmp_path)
        override = tmp_path / "elsewhere"
        assert main(["synth", str(path), "--out-dir", str(override)]) == 0
        assert (override / "data" / "papers.jsonl").exists()
