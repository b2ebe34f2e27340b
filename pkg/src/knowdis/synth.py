"""Synthetic planted-signal world for fixtures and benchmarks.

Generates a self-consistent toy domain: cause lemmas and effect lemmas
fall into aligned groups (group i causes group i), synonym and verb-class
fixtures expand within groups (plus deliberate traps and cross-group
noise), a corpus plants causal sentences with varied connectives next to
non-causal distractors that reuse the same event vocabulary, and gold
sentences label both phrasings. Everything derives from one seed.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .annotator import tokenize_and_lemmatize

CAUSE_GROUPS = [
    ["crash", "collision", "wreck"],
    ["storm", "cyclone", "tempest"],
    ["walkout", "boycott", "lockout"],
    ["outbreak", "epidemic", "contagion"],
]
CAUSE_HYPERNYMS = ["accident", "downpour", "unrest", "illness"]
EFFECT_GROUPS = [
    ["injury", "delay", "jam"],
    ["flood", "blackout", "erosion"],
    ["shutdown", "shortage", "slowdown"],
    ["quarantine", "panic", "lockdown"],
]
TRAP_SYNONYMS = ["ceremony", "festival", "parade", "banquet"]

LEMMA_TABLE_ROWS = [
    ("led", "lead"), ("left", "leave"), ("came", "come"), ("began", "begin"),
    ("grew", "grow"), ("swept", "sweep"), ("brought", "bring"), ("hit", "hit"),
    ("caused", "cause"), ("blamed", "blame"), ("worsened", "worsen"),
    ("mentioned", "mention"), ("discussed", "discuss"), ("compared", "compare"),
    ("covered", "cover"), ("reported", "report"), ("followed", "follow"),
    ("happened", "happen"), ("seemed", "seem"), ("ended", "end"),
    ("continued", "continue"), ("resulted", "result"), ("spread", "spread"),
]

# Explicit templates put a lexicon connective strictly between the events.
EXPLICIT_TEMPLATES = [
    "The {e} happened because of the {c} .",
    "The {c} led to {e} in the area .",
    "Residents reported {e} due to the {c} .",
    "The {c} resulted in {e} near the station .",
    "The {e} was caused by the {c} .",
    "The {c} continued and therefore {e} followed .",
    "The {e} came as a result of the {c} .",
    "The {e} spread owing to the {c} .",
    "The {c} worsened and consequently {e} followed .",
    "The {e} grew since the {c} began .",
    "The {c} deepened and thus {e} followed .",
    "The {c} can lead to {e} , officials warned .",
    "The {c} intensified and hence {e} emerged .",
    "The {c} hit overnight , so {e} followed by morning .",
]
IMPLICIT_TEMPLATES = [
    "The {c} brought widespread {e} to the region .",
    "The {c} left thousands facing {e} .",
    "Officials blamed the {c} for the {e} .",
    "The {c} was followed by {e} within days .",
]
DISTRACTOR_TEMPLATES = [
    "The {c} and the {e} were both mentioned in the report .",
    "Analysts discussed the {e} long before the {c} began .",
    "A panel compared the {c} with the {e} from last year .",
    "The {e} seemed unrelated to the {c} according to experts .",
]
# Connective present but causality denied: hard negatives.
HEDGED_TEMPLATES = [
    "The mayor denied the {e} came as a result of the {c} .",
    "Experts doubted the {e} was caused by the {c} .",
    "The report rejected claims that the {c} led to {e} .",
    "Critics disputed that the {c} resulted in {e} .",
]
BACKGROUND_SENTENCES = [
    "The committee reviewed the annual budget on Tuesday .",
    "A new library opened near the old market square .",
    "The {t} drew visitors from several nearby towns .",
    "Gardeners planted rows of tulips along the avenue .",
    "The museum extended its evening hours for the season .",
    "Volunteers repainted the fence around the schoolyard .",
    "The {t} featured music from three local bands .",
    "A bakery on the corner introduced a rye loaf .",
    "The council debated the new parking rules at length .",
    "Students rehearsed the spring play in the gymnasium .",
]


@dataclass
class FixturePaths:
    root: Path
    gold_pairs: Path
    gold_sentences: Path
    corpus: Path
    synsets: Path
    verb_classes: Path
    lemma_table: Path
    copa: Path
    connectives: Path
    config: Path


def _true_pairs():
    pairs = []
    for g, (causes, effects) in enumerate(zip(CAUSE_GROUPS, EFFECT_GROUPS)):
        for c in causes + [CAUSE_HYPERNYMS[g]]:
            for e in effects:
                pairs.append((c, e, g))
    return pairs


def _cross_pairs(rng, count):
    out = set()
    groups = list(range(len(CAUSE_GROUPS)))
    while len(out) < count:
        gc = rng.choice(groups)
        ge = rng.choice([g for g in groups if g != gc])
        out.add((rng.choice(CAUSE_GROUPS[gc]), rng.choice(EFFECT_GROUPS[ge])))
    return sorted(out)


def _fill(template, c=None, e=None, t=None):
    text = template
    if c is not None:
        text = text.replace("{c}", c)
    if e is not None:
        text = text.replace("{e}", e)
    if t is not None:
        text = text.replace("{t}", t)
    return text


def _event_indices(text, table, cause, effect):
    _, lemmas = tokenize_and_lemmatize(text, table)
    return lemmas.index(cause), lemmas.index(effect)


def _gold_sentences(rng, table, n_docs=14):
    """Small gold set: n_docs documents x 4 sentences, half causal.

    Negatives mix plain distractors with hedged sentences that carry a
    causal connective but deny the relation, so connective presence alone
    cannot separate the classes.
    """
    records = []
    member_pairs = [(c, e, g)
                    for g, (causes, effects) in enumerate(
                        zip(CAUSE_GROUPS, EFFECT_GROUPS))
                    for c in causes for e in effects]
    for doc in range(n_docs):
        doc_id = f"gd{doc:03d}"
        sent_id = 0
        causal_templates = [rng.choice(EXPLICIT_TEMPLATES)]
        causal_templates.append(rng.choice(
            IMPLICIT_TEMPLATES if doc % 2 == 0 else EXPLICIT_TEMPLATES))
        for template in causal_templates:
            c, e, _ = rng.choice(member_pairs)
            text = _fill(template, c=c, e=e)
            ci, ei = _event_indices(text, table, c, e)
            records.append({
                "doc_id": doc_id, "sent_id": sent_id, "text": text,
                "cause_idx": ci, "effect_idx": ei, "label": "causal",
            })
            sent_id += 1
        for _ in range(2):
            u = rng.random()
            if u < 0.3:
                template = rng.choice(HEDGED_TEMPLATES)
                c, e, _ = rng.choice(member_pairs)
            elif u < 0.7:
                template = rng.choice(DISTRACTOR_TEMPLATES)
                c, e, _ = rng.choice(member_pairs)  # same-group, hard negative
            else:
                template = rng.choice(DISTRACTOR_TEMPLATES)
                c, e = rng.choice(_cross_pairs(rng, 12))
            text = _fill(template, c=c, e=e)
            ci, ei = _event_indices(text, table, c, e)
            records.append({
                "doc_id": doc_id, "sent_id": sent_id, "text": text,
                "cause_idx": ci, "effect_idx": ei, "label": "noncausal",
            })
            sent_id += 1
    return records


def _gold_pairs_tsv(gold_records, table):
    causal_keys = set()
    all_keys = set()
    for rec in gold_records:
        _, lemmas = tokenize_and_lemmatize(rec["text"], table)
        key = (lemmas[rec["cause_idx"]], lemmas[rec["effect_idx"]])
        all_keys.add(key)
        if rec["label"] == "causal":
            causal_keys.add(key)
    lines = []
    for c, e in sorted(causal_keys):
        lines.append(f"{c}\t{e}\tcausal")
    for c, e in sorted(all_keys - causal_keys):
        lines.append(f"{c}\t{e}\tnoncausal")
    return "\n".join(lines) + "\n"


def _corpus(rng, n_sentences):
    records = []
    true_pairs = _true_pairs()
    member_pairs = [(c, e, g) for c, e, g in true_pairs
                    if c not in CAUSE_HYPERNYMS]
    doc, sent = 0, 0
    for i in range(n_sentences):
        u = rng.random()
        if u < 0.30:
            c, e, _ = rng.choice(true_pairs)
            pool = EXPLICIT_TEMPLATES if rng.random() < 0.7 else IMPLICIT_TEMPLATES
            text = _fill(rng.choice(pool), c=c, e=e)
        elif u < 0.44:
            c, e, _ = rng.choice(member_pairs)  # true pair, non-causal phrasing
            text = _fill(rng.choice(DISTRACTOR_TEMPLATES), c=c, e=e)
        elif u < 0.50:
            c, e, _ = rng.choice(member_pairs)  # connective but denied causality
            text = _fill(rng.choice(HEDGED_TEMPLATES), c=c, e=e)
        elif u < 0.54:
            trap = rng.choice(TRAP_SYNONYMS)
            e = rng.choice([x for grp in EFFECT_GROUPS for x in grp])
            text = _fill(rng.choice(DISTRACTOR_TEMPLATES), c=trap, e=e)
        else:
            text = _fill(rng.choice(BACKGROUND_SENTENCES),
                         t=rng.choice(TRAP_SYNONYMS))
        records.append({"doc_id": f"cd{doc:04d}", "sent_id": sent, "text": text})
        sent += 1
        if sent == 5:
            doc, sent = doc + 1, 0
    return records


def _copa_records(rng, count):
    effect_clauses = [
        "The {e} swept the area .",
        "The {e} disrupted daily life .",
        "People faced the {e} for days .",
    ]
    cause_clauses = [
        "The {c} hit the town overnight .",
        "The {c} started near the harbor .",
        "A severe {c} was reported .",
    ]
    wrong_clauses = [
        "The {t} was planned for months .",
        "A {t} entertained the crowd .",
    ]
    records = []
    true_pairs = _true_pairs()
    for _ in range(count):
        c, e, _ = rng.choice(true_pairs)
        cause_text = _fill(rng.choice(cause_clauses), c=c)
        effect_text = _fill(rng.choice(effect_clauses), e=e)
        wrong_text = _fill(rng.choice(wrong_clauses), t=rng.choice(TRAP_SYNONYMS))
        asks_for = "cause" if rng.random() < 0.5 else "effect"
        correct = 1 if rng.random() < 0.5 else 2
        if asks_for == "cause":
            premise, answer = effect_text, cause_text
        else:
            premise, answer = cause_text, effect_text
        rec = {"premise": premise, "asks_for": asks_for, "correct": correct,
               "alt1": answer if correct == 1 else wrong_text,
               "alt2": answer if correct == 2 else wrong_text}
        records.append(rec)
    return records


def _synsets_tsv():
    lines = []
    for g, causes in enumerate(CAUSE_GROUPS):
        for i, c in enumerate(causes):
            syns = [x for x in causes if x != c]
            if i == 0:
                syns.append(TRAP_SYNONYMS[g])
            lines.append(f"{c}\tsyn:{','.join(syns)}\thyp:{CAUSE_HYPERNYMS[g]}")
    for effects in EFFECT_GROUPS:
        for e in effects:
            syns = [x for x in effects if x != e]
            lines.append(f"{e}\tsyn:{','.join(syns)}\thyp:")
    return "\n".join(lines) + "\n"


def _verb_classes_tsv():
    lines = []
    n = len(CAUSE_GROUPS)
    for g, causes in enumerate(CAUSE_GROUPS):
        foreign = CAUSE_GROUPS[(g + 1) % n][0]  # cross-group noise member
        lines.append(f"cls-c{g}\t{','.join(causes + [foreign])}")
    for g, effects in enumerate(EFFECT_GROUPS):
        lines.append(f"cls-e{g}\t{','.join(effects)}")
    return "\n".join(lines) + "\n"


def _config_ini(seed):
    return f"""[paths]
gold_pairs = gold_pairs.tsv
gold_sentences = gold_sentences.jsonl
corpus = corpus.jsonl
synsets = synsets.tsv
verb_classes = verb_classes.tsv
lemma_table = lemmas.tsv
copa = copa.jsonl
connectives = connectives.txt
out_dir = out

[pipeline]
pair_keep_fraction = 0.25
corpus_fraction = 0.5
keep_c = 0.5
keep_nc = 0.1
alpha = 0.5
lambda_interp = 0.5
seed = {seed}
kfold = 3
audit_n = 40

[embedding]
dim = 100
margin = 1.0
learning_rate = 0.05
epochs = 60
negative_strategy = annotated_negatives

[detector]
learning_rate = 0.2
l2_penalty = 1e-4
epochs = 15
beta = 0.1
relabel_threshold = 0.5
"""


def write_fixture_set(root, seed: int = 13,
                      corpus_sentences: int = 1200) -> FixturePaths:
    """Write a complete synthetic fixture set under `root`."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)

    table = dict(LEMMA_TABLE_ROWS)
    gold_records = _gold_sentences(rng, table)
    corpus_records = _corpus(rng, corpus_sentences)
    copa_records = _copa_records(rng, 60)

    paths = FixturePaths(
        root=root,
        gold_pairs=root / "gold_pairs.tsv",
        gold_sentences=root / "gold_sentences.jsonl",
        corpus=root / "corpus.jsonl",
        synsets=root / "synsets.tsv",
        verb_classes=root / "verb_classes.tsv",
        lemma_table=root / "lemmas.tsv",
        copa=root / "copa.jsonl",
        connectives=root / "connectives.txt",
        config=root / "config.ini",
    )
    paths.gold_pairs.write_text(_gold_pairs_tsv(gold_records, table),
                                encoding="utf-8")
    _write_jsonl(paths.gold_sentences, gold_records)
    _write_jsonl(paths.corpus, corpus_records)
    _write_jsonl(paths.copa, copa_records)
    paths.synsets.write_text(_synsets_tsv(), encoding="utf-8")
    paths.verb_classes.write_text(_verb_classes_tsv(), encoding="utf-8")
    paths.lemma_table.write_text(
        "".join(f"{s}\t{l}\n" for s, l in LEMMA_TABLE_ROWS), encoding="utf-8")
    from importlib import resources

    default = (resources.files("knowdis") / "data" /
               "default_connectives.txt").read_text(encoding="utf-8")
    paths.connectives.write_text(default, encoding="utf-8")
    paths.config.write_text(_config_ini(seed), encoding="utf-8")
    return paths


def _write_jsonl(path, records):
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")
