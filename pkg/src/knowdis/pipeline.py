"""Stage orchestration: config, manifests, cross-validation, audit.

Each stage reads its declared inputs (files or upstream artifacts),
writes canonical outputs plus a manifest, and is idempotent: identical
inputs and config reproduce identical output hashes, for any worker
count. The evaluate stage runs document-level k-fold cross-validation,
re-deriving the distant augmentation from each fold's own training pairs
so no test pair leaks into expansion.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import random
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import annotator, commonsense, detector, lexicon, pair_embedding
from .annotator import LabeledSentence, PairIndex, SentenceRecord
from .commonsense import CooccurrenceTable, CSParams
from .cuts import check_fraction
from .detector import DetectorModel, TrainConfig
from .errors import ConfigError, DependencyError, FixtureParseError
from .lexicon import EventPair
from .manifest import (DatasetManifest, file_sha256, read_jsonl, records_hash,
                       write_jsonl)
from .pair_embedding import MarginConfig

STAGES = ("expand", "train-embed", "annotate", "build-cs", "filter",
          "relabel", "train", "evaluate", "audit-sample")

_UPSTREAM = {
    "expand": (),
    "train-embed": ("expand",),
    "annotate": ("train-embed",),
    "build-cs": (),
    "filter": ("annotate", "build-cs"),
    "relabel": ("filter",),
    "train": ("relabel",),
    "evaluate": (),
    "audit-sample": ("filter",),
}

_ARTIFACTS = {
    "expand": "expanded_pairs.jsonl",
    "train-embed": "ef_pairs.jsonl",
    "annotate": "dn.jsonl",
    "build-cs": "cooc_table.tsv",
    "filter": "dr.jsonl",
    "relabel": "drr.jsonl",
    "train": "model.json",
    "evaluate": "eval_report.json",
    "audit-sample": "audit_sample.txt",
}


@dataclass
class AblationFlags:
    use_distant: bool = True
    use_filter: bool = True
    use_connective: bool = True
    use_cooccurrence: bool = True
    use_relabeling: bool = True
    use_annealing: bool = True


@dataclass
class PipelineConfig:
    gold_pairs: Path
    gold_sentences: Path
    corpus: Path
    synsets: Path
    verb_classes: Path
    lemma_table: Path
    copa: Path
    out_dir: Path
    connectives: Path | None = None
    pair_keep_fraction: float = 0.10
    corpus_fraction: float = 0.05
    keep_c: float = 0.50
    keep_nc: float = 0.10
    alpha: float = 0.5
    lambda_interp: float = 0.5
    epsilon: float = 0.0
    seed: int = 13
    kfold: int = 5
    audit_n: int = 100
    max_sentence_tokens: int = 128
    margin: MarginConfig = field(default_factory=MarginConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    ablation: AblationFlags = field(default_factory=AblationFlags)
    raw_text: str = ""

    def validate(self) -> "PipelineConfig":
        for name in ("pair_keep_fraction", "corpus_fraction", "keep_c", "keep_nc"):
            check_fraction(getattr(self, name), name)
        if self.kfold < 2:
            raise ConfigError("kfold must be >= 2")
        if self.audit_n < 1:
            raise ConfigError("audit_n must be >= 1")
        self.margin.validate()
        self.train.validate()
        CSParams(self.alpha, self.lambda_interp, self.epsilon).validate()
        return self

    def cs_params(self) -> CSParams:
        return CSParams(self.alpha, self.lambda_interp, self.epsilon)


def _get(parser, section, key, cast, default):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key)
    try:
        if cast is bool:
            lowered = raw.strip().lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for [{section}] {key}: {raw!r}") from exc


def load_config(path) -> PipelineConfig:
    """Parse the sectioned key/value config file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    raw_text = path.read_text(encoding="utf-8")
    parser = configparser.ConfigParser()
    try:
        parser.read_string(raw_text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc

    base = path.parent

    def resolve(key, required=True):
        if not parser.has_option("paths", key):
            if required:
                raise ConfigError(f"missing [paths] {key}")
            return None
        return (base / parser.get("paths", key)).resolve()

    margin = MarginConfig(
        margin=_get(parser, "embedding", "margin", float, 1.0),
        learning_rate=_get(parser, "embedding", "learning_rate", float, 0.01),
        epochs=_get(parser, "embedding", "epochs", int, 100),
        negative_strategy=_get(parser, "embedding", "negative_strategy", str,
                               "annotated_negatives"),
        dim=_get(parser, "embedding", "dim", int, 100),
        zero_relation=_get(parser, "embedding", "zero_relation", bool, False),
    )
    train = TrainConfig(
        learning_rate=_get(parser, "detector", "learning_rate", float, 0.1),
        l2_penalty=_get(parser, "detector", "l2_penalty", float, 1e-4),
        epochs=_get(parser, "detector", "epochs", int, 20),
        beta=_get(parser, "detector", "beta", float, 0.1),
        relabel_threshold=_get(parser, "detector", "relabel_threshold", float, 0.5),
    )
    ablation = AblationFlags(
        use_distant=_get(parser, "ablation", "use_distant", bool, True),
        use_filter=_get(parser, "ablation", "use_filter", bool, True),
        use_connective=_get(parser, "ablation", "use_connective", bool, True),
        use_cooccurrence=_get(parser, "ablation", "use_cooccurrence", bool, True),
        use_relabeling=_get(parser, "ablation", "use_relabeling", bool, True),
        use_annealing=_get(parser, "ablation", "use_annealing", bool, True),
    )
    config = PipelineConfig(
        gold_pairs=resolve("gold_pairs"),
        gold_sentences=resolve("gold_sentences"),
        corpus=resolve("corpus"),
        synsets=resolve("synsets"),
        verb_classes=resolve("verb_classes"),
        lemma_table=resolve("lemma_table"),
        copa=resolve("copa"),
        out_dir=resolve("out_dir"),
        connectives=resolve("connectives", required=False),
        pair_keep_fraction=_get(parser, "pipeline", "pair_keep_fraction", float, 0.10),
        corpus_fraction=_get(parser, "pipeline", "corpus_fraction", float, 0.05),
        keep_c=_get(parser, "pipeline", "keep_c", float, 0.50),
        keep_nc=_get(parser, "pipeline", "keep_nc", float, 0.10),
        alpha=_get(parser, "pipeline", "alpha", float, 0.5),
        lambda_interp=_get(parser, "pipeline", "lambda_interp", float, 0.5),
        epsilon=_get(parser, "pipeline", "epsilon", float, 0.0),
        seed=_get(parser, "pipeline", "seed", int, 13),
        kfold=_get(parser, "pipeline", "kfold", int, 5),
        audit_n=_get(parser, "pipeline", "audit_n", int, 100),
        max_sentence_tokens=_get(parser, "pipeline", "max_sentence_tokens", int, 128),
        margin=margin,
        train=train,
        ablation=ablation,
        raw_text=raw_text,
    )
    return config.validate()


# ---------------------------------------------------------------------------
# shared loading helpers


def load_gold_instances(config: PipelineConfig) -> list[LabeledSentence]:
    """Read the gold sentence dataset and build labeled instances."""
    table = annotator.load_lemma_table(config.lemma_table)
    out = []
    for i, rec in enumerate(read_jsonl(config.gold_sentences), 1):
        tokens, lemmas = annotator.tokenize_and_lemmatize(rec["text"], table)
        cause_idx, effect_idx = int(rec["cause_idx"]), int(rec["effect_idx"])
        if not tokens or not (0 <= cause_idx < len(tokens)) \
                or not (0 <= effect_idx < len(tokens)) or cause_idx == effect_idx:
            raise FixtureParseError(config.gold_sentences, i, "bad event indices")
        label = rec["label"]
        if label not in ("causal", "noncausal"):
            raise FixtureParseError(config.gold_sentences, i, f"bad label {label!r}")
        sentence = SentenceRecord(str(rec["doc_id"]), int(rec["sent_id"]),
                                  rec["text"], tokens, lemmas)
        pair = EventPair(lemmas[cause_idx], lemmas[effect_idx], "gold", label)
        out.append(LabeledSentence(
            sentence=sentence, cause_idx=cause_idx, effect_idx=effect_idx,
            pair=pair, pair_source="gold",
            orientation="cause_first" if cause_idx < effect_idx else "effect_first"))
    out.sort(key=LabeledSentence.sort_key)
    return out


def load_lexicon_for(config: PipelineConfig):
    table = annotator.load_lemma_table(config.lemma_table)
    if config.connectives is not None:
        return commonsense.load_connective_lexicon(config.connectives, table)
    return commonsense.default_connective_lexicon(table)


def pairs_from_instances(instances):
    """Distinct (cause, effect) pairs of a gold split.

    A pair with any causal occurrence counts as causal; the rest are
    noncausal (negatives for the embedding trainer).
    """
    causal_keys = set()
    all_keys = set()
    for inst in instances:
        all_keys.add(inst.pair.key())
        if inst.pair.label == "causal":
            causal_keys.add(inst.pair.key())
    causal = {EventPair(c, e, "gold", "causal") for c, e in causal_keys}
    noncausal = {EventPair(c, e, "gold", "noncausal")
                 for c, e in all_keys - causal_keys}
    return causal, noncausal


def enrich_instances(instances, table: CooccurrenceTable | None,
                     params: CSParams, lexicon_obj) -> None:
    """Fill connective and span-score evidence in place.

    `lexicon_obj` None disables connective detection; `table` None
    disables scoring (cs stays absent). Span scores are refinement
    evidence for distantly labeled data only; gold and test instances get
    connective detection but never a score, so score buckets cannot skew
    test-time decisions toward the filtered distribution.
    """
    for inst in instances:
        if table is not None:
            commonsense.score_sentence(inst, table, params, lexicon_obj)
        elif lexicon_obj is not None:
            inst.connective = commonsense.detect_connective(inst, lexicon_obj)
        else:
            inst.connective = None


# ---------------------------------------------------------------------------
# evaluation primitives


@dataclass
class EvalReport:
    precision: float
    recall: float
    f1: float
    confusion: dict[str, int]
    folds: list[dict] = field(default_factory=list)

    def to_record(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "confusion": dict(sorted(self.confusion.items())),
            "folds": self.folds,
        }


def prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall > 0 else 0.0)
    return precision, recall, f1


def evaluate_instances(model: DetectorModel, instances,
                       threshold: float = 0.5) -> EvalReport:
    """Precision/recall/F1 on the causal class."""
    tp = fp = tn = fn = 0
    for inst in instances:
        predicted = detector.predict(model, inst) >= threshold
        actual = inst.pair.label == "causal"
        if predicted and actual:
            tp += 1
        elif predicted and not actual:
            fp += 1
        elif not predicted and actual:
            fn += 1
        else:
            tn += 1
    precision, recall, f1 = prf(tp, fp, fn)
    return EvalReport(precision, recall, f1,
                      {"tp": tp, "fp": fp, "fn": fn, "tn": tn})


def kfold_split(instances, k: int, seed: int):
    """Document-level folds: all sentences of a document share a fold."""
    if k < 2:
        raise ConfigError("k must be >= 2")
    docs = sorted({inst.sentence.doc_id for inst in instances})
    if k > len(docs):
        raise ConfigError(f"k={k} exceeds document count {len(docs)}")
    rng = random.Random(seed)
    rng.shuffle(docs)
    folds = [docs[i::k] for i in range(k)]
    by_doc: dict[str, list] = {}
    for inst in instances:
        by_doc.setdefault(inst.sentence.doc_id, []).append(inst)
    splits = []
    for fold_docs in folds:
        fold_set = set(fold_docs)
        test = [i for d in sorted(fold_set) for i in by_doc[d]]
        train = [i for d in sorted(set(docs) - fold_set) for i in by_doc[d]]
        splits.append((train, test))
    return splits


# ---------------------------------------------------------------------------
# the distant-augmentation pipeline as pure functions over loaded inputs


@dataclass
class WorldInputs:
    """Everything the pipeline reads, loaded once."""

    gold_instances: list[LabeledSentence]
    syn: lexicon.SynsetIndex
    vn: lexicon.VerbClassIndex
    lemma_table: dict
    corpus_records: list[dict]
    copa_pairs: list
    lexicon_obj: commonsense.ConnectiveLexicon


def load_world(config: PipelineConfig) -> WorldInputs:
    table = annotator.load_lemma_table(config.lemma_table)
    return WorldInputs(
        gold_instances=load_gold_instances(config),
        syn=lexicon.load_synset_index(config.synsets),
        vn=lexicon.load_verbclass_index(config.verb_classes),
        lemma_table=table,
        corpus_records=read_jsonl(config.corpus),
        copa_pairs=commonsense.extract_copa_pairs(
            read_jsonl(config.copa), table),
        lexicon_obj=load_lexicon_for(config),
    )


def _copy_instances(instances):
    return [LabeledSentence.from_record(inst.to_record()) for inst in instances]


def run_fold(config: PipelineConfig, world: WorldInputs, gold_train, gold_test,
             seed: int, workers: int = 1) -> dict:
    """Train on one gold split (optionally distantly augmented); score the test half.

    Returns the fold report including the pair set used for expansion, so
    leakage checks can audit that only training-fold pairs seeded the
    augmentation.
    """
    flags = config.ablation
    params = config.cs_params()
    lexicon_obj = world.lexicon_obj if flags.use_connective else None
    gold_train = _copy_instances(gold_train)
    gold_test = _copy_instances(gold_test)

    causal, noncausal = pairs_from_instances(gold_train)
    report = {
        "train_docs": sorted({i.sentence.doc_id for i in gold_train}),
        "test_docs": sorted({i.sentence.doc_id for i in gold_test}),
        "expansion_base": sorted(p.key() for p in causal),
    }

    table: CooccurrenceTable | None = None
    drr = []
    if flags.use_distant and causal:
        expanded = lexicon.expand_all(causal, world.syn, world.vn)
        margin_cfg = replace(config.margin, seed=seed * 31 + 7)
        if not noncausal and config.margin.negative_strategy == "annotated_negatives":
            margin_cfg = replace(margin_cfg, negative_strategy="corruption")
        space = pair_embedding.train(
            causal, noncausal, margin_cfg,
            extra_lemmas=[l for p in expanded for l in p.key()])
        ranked = pair_embedding.rank_candidates(space, expanded)
        ef = pair_embedding.filter_top(ranked, config.pair_keep_fraction)
        report["expanded"] = len(expanded)
        report["ef"] = len(ef)

        index = PairIndex.from_pair_sets(causal, ef)
        dn, dn_counts = annotator.build_dn(
            world.corpus_records, index, world.lemma_table,
            config.corpus_fraction, config.seed, workers=workers,
            max_tokens=config.max_sentence_tokens)
        report["dn"] = dn_counts

        if flags.use_cooccurrence:
            gold_causal_train = [i for i in gold_train if i.pair.label == "causal"]
            table = commonsense.build_table(
                world.copa_pairs
                + commonsense.extract_annotated_pairs(gold_causal_train))
        else:
            table = CooccurrenceTable()  # empty: every span scores 0
        enrich_instances(dn, table, params, lexicon_obj)

        if flags.use_filter:
            dr, filter_counts = commonsense.partition_and_keep(
                dn, config.keep_c, config.keep_nc)
            report["filter"] = filter_counts
        else:
            dr = dn
            report["filter"] = {"kept": len(dn), "skipped": True}

        enrich_instances(gold_train, None, params, lexicon_obj)
        enrich_instances(gold_test, None, params, lexicon_obj)

        train_cfg = replace(config.train, seed=seed)
        if flags.use_relabeling:
            pretrained = detector.train_plain(gold_train, train_cfg)
            drr, relabel_counts = detector.relabel(
                pretrained, dr, train_cfg.relabel_threshold)
            report["relabel"] = relabel_counts
        else:
            drr = dr
            report["relabel"] = {"kept": len(dr), "skipped": True}
    else:
        enrich_instances(gold_train, None, params, lexicon_obj)
        enrich_instances(gold_test, None, params, lexicon_obj)

    train_cfg = replace(config.train, seed=seed)
    if flags.use_distant and drr and flags.use_annealing:
        model = detector.train_annealed(gold_train, drr, train_cfg)
    elif flags.use_distant and drr:
        model = detector.train_plain(list(gold_train) + list(drr), train_cfg)
    else:
        model = detector.train_plain(gold_train, train_cfg)

    result = evaluate_instances(model, gold_test)
    report.update(result.to_record())
    del report["folds"]
    return report


def run_cv(config: PipelineConfig, repeats: int = 1, workers: int = 1) -> dict:
    """k-fold cross-validation, averaged over derived seeds."""
    world = load_world(config)
    k = config.kfold
    runs = []
    for r in range(repeats):
        seed_r = config.seed + 9973 * r
        splits = kfold_split(world.gold_instances, k, seed_r)
        folds = []
        for fold_index, (train_split, test_split) in enumerate(splits):
            fold_seed = seed_r * 1009 + fold_index
            fold = run_fold(config, world, train_split, test_split,
                            fold_seed, workers=workers)
            fold["fold"] = fold_index
            folds.append(fold)
        mean = {
            "precision": sum(f["precision"] for f in folds) / k,
            "recall": sum(f["recall"] for f in folds) / k,
            "f1": sum(f["f1"] for f in folds) / k,
        }
        runs.append({"seed": seed_r, "folds": folds, "mean": mean})
    mean = {
        metric: sum(run["mean"][metric] for run in runs) / len(runs)
        for metric in ("precision", "recall", "f1")
    }
    return {
        "k": k,
        "repeats": repeats,
        "ablation": vars(config.ablation),
        "runs": runs,
        "mean": mean,
    }


# ---------------------------------------------------------------------------
# stages


def _artifact(config: PipelineConfig, stage: str) -> Path:
    return config.out_dir / _ARTIFACTS[stage]


def _manifest_path(config: PipelineConfig, stage: str) -> Path:
    return config.out_dir / f"{stage}.manifest.json"


def _require_upstream(config: PipelineConfig, stage: str) -> dict[str, str]:
    hashes = {}
    for upstream in _UPSTREAM[stage]:
        artifact = _artifact(config, upstream)
        manifest = _manifest_path(config, upstream)
        if not artifact.exists() or not manifest.exists():
            raise DependencyError(
                f"stage {stage!r} needs stage {upstream!r}; run it first")
        hashes[f"stage:{upstream}"] = DatasetManifest.read(manifest).output_hash
    return hashes


def _combine_hashes(parts: dict[str, str]) -> str:
    h = hashlib.sha256()
    for name in sorted(parts):
        h.update(f"{name}:{parts[name]}\n".encode("utf-8"))
    return h.hexdigest()


def _add_connectives_hash(config: PipelineConfig, inputs: dict) -> None:
    if config.connectives is not None:
        inputs["connectives"] = file_sha256(config.connectives)


def _finish(config: PipelineConfig, stage: str, input_hashes, output_hash,
            counts) -> DatasetManifest:
    manifest = DatasetManifest(
        stage=stage, input_hashes=input_hashes, output_hash=output_hash,
        counts=counts, config_echo=config.raw_text)
    manifest.write(_manifest_path(config, stage))
    return manifest


def _stage_expand(config: PipelineConfig, workers, repeats) -> DatasetManifest:
    inputs = {
        "gold_pairs": file_sha256(config.gold_pairs),
        "synsets": file_sha256(config.synsets),
        "verb_classes": file_sha256(config.verb_classes),
    }
    gold = lexicon.load_gold_pairs(config.gold_pairs)
    expanded = lexicon.expand_all(gold, lexicon.load_synset_index(config.synsets),
                                  lexicon.load_verbclass_index(config.verb_classes))
    records = [p.to_record() for p in sorted(expanded)]
    output_hash = write_jsonl(_artifact(config, "expand"), records)
    counts = {
        "gold_pairs": len(gold),
        "gold_causal": sum(1 for p in gold if p.label == "causal"),
        "expanded": len(expanded),
    }
    return _finish(config, "expand", inputs, output_hash, counts)


def _stage_train_embed(config: PipelineConfig, workers, repeats) -> DatasetManifest:
    inputs = _require_upstream(config, "train-embed")
    inputs["gold_pairs"] = file_sha256(config.gold_pairs)
    gold = lexicon.load_gold_pairs(config.gold_pairs)
    positives = {p for p in gold if p.label == "causal"}
    negatives = {p for p in gold if p.label == "noncausal"}
    expanded = {EventPair.from_record(r)
                for r in read_jsonl(_artifact(config, "expand"))}

    margin_cfg = replace(config.margin, seed=config.seed)
    if not negatives and margin_cfg.negative_strategy == "annotated_negatives":
        margin_cfg = replace(margin_cfg, negative_strategy="corruption")
    space = pair_embedding.train(
        positives, negatives, margin_cfg,
        extra_lemmas=[l for p in expanded for l in p.key()])
    pair_embedding.save_space(space, config.out_dir / "embedding.tsv")

    ranked = pair_embedding.rank_candidates(space, expanded)
    ranked_records = [dict(p.to_record(), distance=d) for p, d in ranked]
    ranked_hash = write_jsonl(config.out_dir / "ranked_pairs.jsonl", ranked_records)

    ef = pair_embedding.filter_top(ranked, config.pair_keep_fraction)
    ef_hash = write_jsonl(_artifact(config, "train-embed"),
                          [p.to_record() for p in sorted(ef)])

    output_hash = _combine_hashes({
        "embedding.tsv": file_sha256(config.out_dir / "embedding.tsv"),
        "ranked_pairs.jsonl": ranked_hash,
        "ef_pairs.jsonl": ef_hash,
    })
    counts = {
        "candidates": len(expanded),
        "ranked": len(ranked),
        "dropped_unembeddable": len(expanded) - len(ranked),
        "ef": len(ef),
    }
    return _finish(config, "train-embed", inputs, output_hash, counts)


def _stage_annotate(config: PipelineConfig, workers, repeats) -> DatasetManifest:
    inputs = _require_upstream(config, "annotate")
    inputs["corpus"] = file_sha256(config.corpus)
    inputs["gold_pairs"] = file_sha256(config.gold_pairs)
    inputs["lemma_table"] = file_sha256(config.lemma_table)

    gold = lexicon.load_gold_pairs(config.gold_pairs)
    gold_causal = {p for p in gold if p.label == "causal"}
    ef = {EventPair.from_record(r)
          for r in read_jsonl(_artifact(config, "train-embed"))}
    index = PairIndex.from_pair_sets(gold_causal, ef)
    table = annotator.load_lemma_table(config.lemma_table)

    dn, counts = annotator.build_dn(
        read_jsonl(config.corpus), index, table, config.corpus_fraction,
        config.seed, workers=workers, max_tokens=config.max_sentence_tokens)
    output_hash = write_jsonl(_artifact(config, "annotate"),
                              [inst.to_record() for inst in dn])
    return _finish(config, "annotate", inputs, output_hash, counts)


def _stage_build_cs(config: PipelineConfig, workers, repeats) -> DatasetManifest:
    inputs = {
        "copa": file_sha256(config.copa),
        "gold_sentences": file_sha256(config.gold_sentences),
        "lemma_table": file_sha256(config.lemma_table),
    }
    table_lookup = annotator.load_lemma_table(config.lemma_table)
    copa_pairs = commonsense.extract_copa_pairs(read_jsonl(config.copa),
                                                table_lookup)
    gold_causal = [i for i in load_gold_instances(config)
                   if i.pair.label == "causal"]
    annotated = commonsense.extract_annotated_pairs(gold_causal)
    table = commonsense.build_table(copa_pairs + annotated)
    out = _artifact(config, "build-cs")
    commonsense.save_table(table, out)
    counts = {
        "copa_pairs": len(copa_pairs),
        "annotated_pairs": len(annotated),
        "vocabulary": len(table.vocab),
        "total_count": table.m,
    }
    return _finish(config, "build-cs", inputs, file_sha256(out), counts)


def _stage_filter(config: PipelineConfig, workers, repeats) -> DatasetManifest:
    inputs = _require_upstream(config, "filter")
    inputs["lemma_table"] = file_sha256(config.lemma_table)
    _add_connectives_hash(config, inputs)
    flags = config.ablation
    dn = [LabeledSentence.from_record(r)
          for r in read_jsonl(_artifact(config, "annotate"))]
    table = (commonsense.load_table(_artifact(config, "build-cs"))
             if flags.use_cooccurrence else CooccurrenceTable())
    lexicon_obj = load_lexicon_for(config) if flags.use_connective else None
    enrich_instances(dn, table, config.cs_params(), lexicon_obj)

    if flags.use_filter:
        dr, counts = commonsense.partition_and_keep(dn, config.keep_c,
                                                    config.keep_nc)
    else:
        dr, counts = dn, {"scored": len(dn), "kept": len(dn)}
    counts["score_warnings"] = sum(1 for i in dn if i.score_warning)
    output_hash = write_jsonl(_artifact(config, "filter"),
                              [inst.to_record() for inst in dr])
    return _finish(config, "filter", inputs, output_hash, counts)


def _gold_enriched_for_training(config: PipelineConfig):
    gold = load_gold_instances(config)
    lexicon_obj = (load_lexicon_for(config)
                   if config.ablation.use_connective else None)
    enrich_instances(gold, None, config.cs_params(), lexicon_obj)
    return gold


def _stage_relabel(config: PipelineConfig, workers, repeats) -> DatasetManifest:
    inputs = _require_upstream(config, "relabel")
    inputs["gold_sentences"] = file_sha256(config.gold_sentences)
    _add_connectives_hash(config, inputs)
    dr = [LabeledSentence.from_record(r)
          for r in read_jsonl(_artifact(config, "filter"))]
    gold = _gold_enriched_for_training(config)
    train_cfg = replace(config.train, seed=config.seed)
    pretrained = detector.train_plain(gold, train_cfg)
    pretrained.save(config.out_dir / "pretrained_model.json")

    if config.ablation.use_relabeling:
        drr, counts = detector.relabel(pretrained, dr,
                                       train_cfg.relabel_threshold)
    else:
        drr, counts = dr, {"input": len(dr), "kept": len(dr), "skipped": True}
    output_hash = write_jsonl(_artifact(config, "relabel"),
                              [inst.to_record() for inst in drr])
    return _finish(config, "relabel", inputs, output_hash, counts)


def _stage_train(config: PipelineConfig, workers, repeats) -> DatasetManifest:
    inputs = _require_upstream(config, "train")
    inputs["gold_sentences"] = file_sha256(config.gold_sentences)
    _add_connectives_hash(config, inputs)
    drr = [LabeledSentence.from_record(r)
           for r in read_jsonl(_artifact(config, "relabel"))]
    gold = _gold_enriched_for_training(config)
    train_cfg = replace(config.train, seed=config.seed)
    if drr and config.ablation.use_annealing:
        model = detector.train_annealed(gold, drr, train_cfg)
    elif drr:
        model = detector.train_plain(list(gold) + drr, train_cfg)
    else:
        model = detector.train_plain(gold, train_cfg)
    out = _artifact(config, "train")
    model.save(out)
    counts = {"gold": len(gold), "distant": len(drr),
              "weights": len(model.weights)}
    return _finish(config, "train", inputs, file_sha256(out), counts)


def _stage_evaluate(config: PipelineConfig, workers, repeats) -> DatasetManifest:
    inputs = {
        "gold_sentences": file_sha256(config.gold_sentences),
        "corpus": file_sha256(config.corpus),
        "copa": file_sha256(config.copa),
        "synsets": file_sha256(config.synsets),
        "verb_classes": file_sha256(config.verb_classes),
        "lemma_table": file_sha256(config.lemma_table),
    }
    _add_connectives_hash(config, inputs)
    report = run_cv(config, repeats=repeats, workers=workers)
    out = _artifact(config, "evaluate")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                   encoding="utf-8")
    counts = {"k": report["k"], "repeats": repeats,
              "gold_instances": len(read_jsonl(config.gold_sentences))}
    return _finish(config, "evaluate", inputs, records_hash([report]), counts)


def audit_sample(instances, n: int, seed: int) -> str:
    """Render a deterministic uniform sample as reviewable text."""
    if n > len(instances):
        raise ConfigError(f"audit sample n={n} exceeds dataset size {len(instances)}")
    rng = random.Random(seed)
    chosen = sorted(rng.sample(range(len(instances)), n))
    lines = [f"# audit sample n={n} seed={seed} "
             f"(cause marked [[..]], effect marked {{{{..}}}})"]
    for idx in chosen:
        inst = instances[idx]
        tokens = list(inst.sentence.tokens)
        tokens[inst.cause_idx] = f"[[{tokens[inst.cause_idx]}]]"
        tokens[inst.effect_idx] = "{{" + tokens[inst.effect_idx] + "}}"
        conn = f" connective={inst.connective!r}" if inst.connective else ""
        score = (f" cs={inst.cs_score:.6f}"
                 if inst.cs_score is not None else "")
        lines.append(
            f"[{inst.sentence.doc_id}:{inst.sentence.sent_id}] "
            f"pair={inst.pair.cause}->{inst.pair.effect} "
            f"({inst.pair_source}, {inst.orientation}){conn}{score}")
        lines.append("  " + " ".join(tokens))
    return "\n".join(lines) + "\n"


def _stage_audit(config: PipelineConfig, workers, repeats) -> DatasetManifest:
    inputs = _require_upstream(config, "audit-sample")
    dr = [LabeledSentence.from_record(r)
          for r in read_jsonl(_artifact(config, "filter"))]
    text = audit_sample(dr, config.audit_n, config.seed)
    out = _artifact(config, "audit-sample")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    counts = {"sampled": config.audit_n, "pool": len(dr)}
    return _finish(config, "audit-sample", inputs, file_sha256(out), counts)


_STAGE_FUNCS = {
    "expand": _stage_expand,
    "train-embed": _stage_train_embed,
    "annotate": _stage_annotate,
    "build-cs": _stage_build_cs,
    "filter": _stage_filter,
    "relabel": _stage_relabel,
    "train": _stage_train,
    "evaluate": _stage_evaluate,
    "audit-sample": _stage_audit,
}


def run_stage(name: str, config: PipelineConfig, workers: int = 1,
              repeats: int = 1) -> DatasetManifest:
    """Execute one stage; writes outputs plus a manifest under out_dir."""
    if name not in _STAGE_FUNCS:
        raise ConfigError(f"unknown stage {name!r}; expected one of {STAGES}")
    config.out_dir.mkdir(parents=True, exist_ok=True)
    return _STAGE_FUNCS[name](config, workers, repeats)
