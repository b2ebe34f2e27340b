"""Stage orchestration, config, cross-validation, CLI contract."""

import json
import subprocess
import sys
from dataclasses import replace
from pathlib import Path

import pytest

from knowdis.detector import DetectorModel
from knowdis.errors import ConfigError, DependencyError
from knowdis.manifest import DatasetManifest
from knowdis.pipeline import (audit_sample, evaluate_instances, kfold_split,
                              load_config, load_gold_instances,
                              pairs_from_instances, prf, run_cv, run_stage)
from knowdis.synth import write_fixture_set

from conftest import make_instance


@pytest.fixture(scope="module")
def fixture_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("world")
    write_fixture_set(root, seed=13, corpus_sentences=400)
    return root


@pytest.fixture(scope="module")
def config(fixture_dir):
    return load_config(fixture_dir / "config.ini")


class TestConfig:
    def test_loads_defaults_and_paths(self, config, fixture_dir):
        assert config.gold_pairs == (fixture_dir / "gold_pairs.tsv").resolve()
        assert config.alpha == 0.5
        assert config.train.beta == 0.1
        assert config.raw_text.startswith("[paths]")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.ini")

    def test_missing_path_key(self, tmp_path):
        path = tmp_path / "c.ini"
        path.write_text("[paths]\nout_dir = out\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_bad_fraction_rejected(self, fixture_dir, tmp_path):
        text = (fixture_dir / "config.ini").read_text()
        bad = text.replace("corpus_fraction = 0.5", "corpus_fraction = 1.5")
        path = tmp_path / "bad.ini"
        path.write_text(bad, encoding="utf-8")
        with pytest.raises(ConfigError):
            load_config(path)


class TestStages:
    def test_filter_without_upstream_raises(self, config, tmp_path):
        isolated = replace(config, out_dir=tmp_path / "fresh")
        with pytest.raises(DependencyError):
            run_stage("filter", isolated)

    def test_unknown_stage(self, config):
        with pytest.raises(ConfigError):
            run_stage("not-a-stage", config)

    def test_chain_runs_and_is_idempotent(self, config, tmp_path):
        cfg = replace(config, out_dir=tmp_path / "out")
        first = {}
        for stage in ("expand", "train-embed", "annotate", "build-cs",
                      "filter", "relabel", "train"):
            first[stage] = run_stage(stage, cfg).output_hash
        again = run_stage("filter", cfg)
        assert again.output_hash == first["filter"]

    def test_stage_isolation_reproduces_artifact(self, config, tmp_path):
        cfg = replace(config, out_dir=tmp_path / "out")
        for stage in ("expand", "train-embed", "annotate", "build-cs", "filter"):
            run_stage(stage, cfg)
        artifact = cfg.out_dir / "dr.jsonl"
        original = artifact.read_bytes()
        artifact.unlink()
        run_stage("filter", cfg)
        assert artifact.read_bytes() == original

    def test_expand_manifest_counts(self, config, tmp_path):
        cfg = replace(config, out_dir=tmp_path / "out")
        manifest = run_stage("expand", cfg)
        assert manifest.counts["expanded"] > 0
        assert manifest.stage == "expand"
        on_disk = DatasetManifest.read(cfg.out_dir / "expand.manifest.json")
        assert on_disk.output_hash == manifest.output_hash


class TestKfold:
    def build_gold(self, n_docs, per_doc=2):
        out = []
        for d in range(n_docs):
            for s in range(per_doc):
                label = "causal" if s % 2 == 0 else "noncausal"
                out.append(make_instance(
                    ["storm", "hit", "flood"], 0, 2, label=label,
                    doc_id=f"doc{d:02d}", sent_id=s))
        return out

    def test_ten_docs_five_folds(self):
        splits = kfold_split(self.build_gold(10), 5, seed=0)
        assert len(splits) == 5
        for train, test in splits:
            test_docs = {i.sentence.doc_id for i in test}
            train_docs = {i.sentence.doc_id for i in train}
            assert len(test_docs) == 2
            assert not test_docs & train_docs

    def test_same_seed_same_folds(self):
        a = kfold_split(self.build_gold(9), 3, seed=5)
        b = kfold_split(self.build_gold(9), 3, seed=5)
        fold_docs = lambda splits: [
            sorted({i.sentence.doc_id for i in test}) for _, test in splits]
        assert fold_docs(a) == fold_docs(b)

    def test_documents_never_straddle_folds(self):
        gold = self.build_gold(7, per_doc=3)
        splits = kfold_split(gold, 3, seed=1)
        seen = {}
        for fold_no, (_, test) in enumerate(splits):
            for inst in test:
                seen.setdefault(inst.sentence.doc_id, set()).add(fold_no)
        assert all(len(folds) == 1 for folds in seen.values())
        assert set(seen) == {i.sentence.doc_id for i in gold}

    def test_k_exceeding_documents(self):
        with pytest.raises(ConfigError):
            kfold_split(self.build_gold(3), 5, seed=0)


class TestEvaluateArithmetic:
    def test_all_correct(self):
        model = DetectorModel({}, 20.0, 0, (0, 0, 0))
        data = [make_instance(["a", "b"], 0, 1, label="causal",
                              doc_id=f"d{i}") for i in range(5)]
        report = evaluate_instances(model, data)
        assert (report.precision, report.recall, report.f1) == (1.0, 1.0, 1.0)

    def test_predict_everything_positive(self):
        model = DetectorModel({}, 20.0, 0, (0, 0, 0))
        data = [make_instance(["a", "b"], 0, 1, label="causal", doc_id=f"p{i}")
                for i in range(5)]
        data += [make_instance(["a", "b"], 0, 1, label="noncausal", doc_id=f"n{i}")
                 for i in range(15)]
        report = evaluate_instances(model, data)
        assert report.precision == pytest.approx(0.25)
        assert report.recall == 1.0
        assert report.f1 == pytest.approx(0.4)

    def test_zero_predicted_positives(self):
        model = DetectorModel({}, -20.0, 0, (0, 0, 0))
        data = [make_instance(["a", "b"], 0, 1, label="causal")]
        report = evaluate_instances(model, data)
        assert report.precision == 0.0 and report.f1 == 0.0

    def test_f1_identity(self):
        for tp, fp, fn in [(3, 1, 2), (0, 0, 5), (7, 0, 0), (1, 9, 4)]:
            p, r, f1 = prf(tp, fp, fn)
            expected = 2 * p * r / (p + r) if p + r > 0 else 0.0
            assert f1 == pytest.approx(expected)


class TestRunCv:
    def test_report_shape_and_leakage(self, config):
        report = run_cv(replace(config, kfold=3), repeats=1)
        assert report["k"] == 3
        run = report["runs"][0]
        assert len(run["folds"]) == 3
        gold = load_gold_instances(config)
        by_doc = {}
        for inst in gold:
            by_doc.setdefault(inst.sentence.doc_id, []).append(inst)
        for fold in run["folds"]:
            # expansion base must equal the causal pairs of the training docs
            train_insts = [i for d in fold["train_docs"] for i in by_doc[d]]
            causal, _ = pairs_from_instances(train_insts)
            assert sorted(p.key() for p in causal) == [
                tuple(x) for x in fold["expansion_base"]]
            assert not set(fold["train_docs"]) & set(fold["test_docs"])
        for key in ("precision", "recall", "f1"):
            assert 0.0 <= report["mean"][key] <= 1.0

    def test_repeats_average(self, config):
        report = run_cv(replace(config, kfold=3), repeats=2)
        assert len(report["runs"]) == 2
        mean_f1 = sum(r["mean"]["f1"] for r in report["runs"]) / 2
        assert report["mean"]["f1"] == pytest.approx(mean_f1)


class TestAuditSample:
    def build(self, n):
        return [make_instance(["storm", "made", "flood"], 0, 2,
                              doc_id=f"d{i:03d}") for i in range(n)]

    def test_whole_set(self):
        text = audit_sample(self.build(4), 4, seed=1)
        assert text.count("[d") == 4

    def test_deterministic(self):
        data = self.build(30)
        assert audit_sample(data, 10, 3) == audit_sample(data, 10, 3)

    def test_subset_only(self):
        data = self.build(25)
        text = audit_sample(data, 5, seed=2)
        for line in text.splitlines():
            if line.startswith("["):
                doc = line[1:].split(":", 1)[0]
                assert doc in {i.sentence.doc_id for i in data}

    def test_oversized_request_rejected(self):
        with pytest.raises(ConfigError):
            audit_sample(self.build(3), 10, seed=0)

    def test_events_highlighted(self):
        text = audit_sample(self.build(1), 1, seed=0)
        assert "[[storm]]" in text and "{{flood}}" in text


class TestCli:
    def run_cli(self, *args):
        return subprocess.run([sys.executable, "-m", "knowdis.cli", *args],
                              capture_output=True, text=True)

    def test_exit_code_zero_on_success(self, fixture_dir, tmp_path):
        out = subprocess.run(
            [sys.executable, "-m", "knowdis.cli", "expand",
             "--config", str(fixture_dir / "config.ini")],
            capture_output=True, text=True)
        assert out.returncode == 0, out.stderr

    def test_exit_code_two_on_config_error(self, tmp_path):
        out = self.run_cli("expand", "--config", str(tmp_path / "missing.ini"))
        assert out.returncode == 2
        assert "config error" in out.stderr

    def test_exit_code_three_on_missing_dependency(self, fixture_dir, tmp_path):
        cfg_text = (fixture_dir / "config.ini").read_text().replace(
            "out_dir = out", f"out_dir = {tmp_path / 'empty'}")
        path = tmp_path / "c.ini"
        path.write_text(cfg_text, encoding="utf-8")
        out = self.run_cli("filter", "--config", str(path))
        assert out.returncode == 3
        assert "dependency error" in out.stderr

    def test_synth_subcommand(self, tmp_path):
        out = self.run_cli("synth", "--out", str(tmp_path / "fx"), "--seed", "3",
                           "--corpus-sentences", "100")
        assert out.returncode == 0
        assert (tmp_path / "fx" / "corpus.jsonl").exists()
