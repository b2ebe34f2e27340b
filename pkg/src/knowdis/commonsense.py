"""Causal-strength statistics and distant-label refinement.

Cause-side/effect-side word co-occurrence counts (from choice-of-
alternatives records and annotated sentences) yield a PMI-style causal
strength per word pair, combining a necessity and a sufficiency ratio.
Each distantly labeled sentence is scored by averaging that strength
across its two spans, partitioned by explicit-connective evidence, and
only the top fractions of each partition are retained.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import _kernels as K
from .annotator import LabeledSentence, LemmaTable, tokenize_and_lemmatize
from .cuts import ceil_count
from .errors import ConfigError, FixtureParseError
from .lexicon import Lemma

log = logging.getLogger(__name__)

TABLE_HEADER = "knowdis-cooc/v1"


@dataclass
class CausePairText:
    cause_tokens: list[Lemma]
    effect_tokens: list[Lemma]
    source: str = "copa"  # copa | annotated


@dataclass
class CSParams:
    alpha: float = 0.5
    lambda_interp: float = 0.5
    epsilon: float = 0.0

    def validate(self) -> "CSParams":
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError("alpha must be in (0, 1]")
        if not 0.0 <= self.lambda_interp <= 1.0:
            raise ConfigError("lambda_interp must be in [0, 1]")
        if self.epsilon < 0.0:
            raise ConfigError("epsilon must be >= 0")
        return self


class CooccurrenceTable:
    """Cause-side x effect-side co-occurrence counts with marginals."""

    def __init__(self):
        self.f: Counter = Counter()
        self.row_sum: Counter = Counter()
        self.col_sum: Counter = Counter()
        self.m = 0
        self.n = 0
        self._compiled = None

    @property
    def vocab(self) -> set[Lemma]:
        return set(self.row_sum) | set(self.col_sum)

    def ingest(self, pair: CausePairText) -> None:
        for i in pair.cause_tokens:
            for j in pair.effect_tokens:
                self.f[(i, j)] += 1
                self.row_sum[i] += 1
                self.col_sum[j] += 1
                self.m += 1
        self.n += 1
        self._compiled = None

    def merge(self, other: "CooccurrenceTable") -> "CooccurrenceTable":
        self.f.update(other.f)
        self.row_sum.update(other.row_sum)
        self.col_sum.update(other.col_sum)
        self.m += other.m
        self.n += other.n
        self._compiled = None
        return self

    def compiled(self) -> "CompiledTable":
        if self._compiled is None:
            self._compiled = CompiledTable(self)
        return self._compiled


class CompiledTable:
    """Integer-id view of a table, shaped for the scoring kernels."""

    def __init__(self, table: CooccurrenceTable):
        self.vocab = sorted(table.vocab)
        self.ids = {lemma: i for i, lemma in enumerate(self.vocab)}
        size = len(self.vocab)
        self.size = size
        keys = np.fromiter(
            (self.ids[i] * size + self.ids[j] for (i, j) in table.f),
            dtype=np.int64, count=len(table.f))
        order = np.argsort(keys, kind="stable")
        self.keys = np.ascontiguousarray(keys[order])
        counts = np.fromiter((float(c) for c in table.f.values()),
                             dtype=np.float64, count=len(table.f))
        self.counts = np.ascontiguousarray(counts[order])
        self.row = np.zeros(size, dtype=np.float64)
        self.col = np.zeros(size, dtype=np.float64)
        for lemma, c in table.row_sum.items():
            self.row[self.ids[lemma]] = float(c)
        for lemma, c in table.col_sum.items():
            self.col[self.ids[lemma]] = float(c)
        self.m = float(table.m)
        self.n = float(table.n)

    def id_of(self, lemma: Lemma) -> int:
        return self.ids.get(lemma, -1)

    def id_array(self, lemmas) -> np.ndarray:
        return np.array([self.id_of(l) for l in lemmas], dtype=np.int64)


def build_table(pairs) -> CooccurrenceTable:
    """Count every (cause-token, effect-token) combination per occurrence."""
    table = CooccurrenceTable()
    for pair in pairs:
        table.ingest(pair)
    return table


def save_table(table: CooccurrenceTable, path) -> None:
    """Persist as `lemma_c<TAB>lemma_e<TAB>count` rows under a header carrying N."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(f"# {TABLE_HEADER} n={table.n}\n")
        for (i, j) in sorted(table.f):
            fh.write(f"{i}\t{j}\t{table.f[(i, j)]}\n")


def load_table(path) -> CooccurrenceTable:
    path = Path(path)
    table = CooccurrenceTable()
    n = None
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                if TABLE_HEADER not in line or "n=" not in line:
                    raise FixtureParseError(path, lineno, "bad table header")
                n = int(line.rsplit("n=", 1)[1])
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise FixtureParseError(path, lineno, "expected 3 tab fields")
            count = int(parts[2])
            table.f[(parts[0], parts[1])] += count
            table.row_sum[parts[0]] += count
            table.col_sum[parts[1]] += count
            table.m += count
    if n is None:
        raise FixtureParseError(path, 0, "missing header row with n=")
    table.n = n
    return table


def extract_copa_pairs(records, table: LemmaTable | None = None) -> list[CausePairText]:
    """Map choice-of-alternatives records onto cause/effect text pairs.

    The correct alternative supplies one side and the premise the other,
    depending on whether the record asks for a cause or an effect; the
    wrong alternative is discarded.
    """
    table = table or {}
    out: list[CausePairText] = []
    for i, rec in enumerate(records, 1):
        try:
            premise = rec["premise"]
            correct = int(rec["correct"])
            asks_for = rec["asks_for"]
            alt = rec["alt1"] if correct == 1 else rec["alt2"] if correct == 2 else None
        except (KeyError, TypeError, ValueError) as exc:
            raise FixtureParseError("<copa>", i, f"bad record: {exc}") from exc
        if alt is None:
            raise FixtureParseError("<copa>", i, f"correct must be 1 or 2, got {correct}")
        if asks_for not in ("cause", "effect"):
            raise FixtureParseError("<copa>", i, f"bad asks_for {asks_for!r}")
        _, premise_lemmas = tokenize_and_lemmatize(premise, table)
        _, alt_lemmas = tokenize_and_lemmatize(alt, table)
        if not premise_lemmas or not alt_lemmas:
            continue
        if asks_for == "cause":
            out.append(CausePairText(alt_lemmas, premise_lemmas, "copa"))
        else:
            out.append(CausePairText(premise_lemmas, alt_lemmas, "copa"))
    return out


def split_at_midpoint(cause_idx: int, effect_idx: int) -> int:
    """Boundary index for the no-connective split between two events.

    Tokens [0, b) form the first segment, [b, n) the second; each event
    token stays inside its own segment.
    """
    lo, hi = sorted((cause_idx, effect_idx))
    return (lo + hi) // 2 + 1


def extract_annotated_pairs(instances) -> list[CausePairText]:
    """Split each causal sentence at the inter-event midpoint.

    The segment containing the cause event becomes the cause-related text,
    the other the effect-related text, regardless of textual order.
    """
    out: list[CausePairText] = []
    for inst in instances:
        lemmas = inst.sentence.lemmas
        b = split_at_midpoint(inst.cause_idx, inst.effect_idx)
        first, second = lemmas[:b], lemmas[b:]
        if inst.cause_idx < b:
            cause_toks, effect_toks = first, second
        else:
            cause_toks, effect_toks = second, first
        if cause_toks and effect_toks:
            out.append(CausePairText(list(cause_toks), list(effect_toks), "annotated"))
    return out


def cs(i: Lemma, j: Lemma, table: CooccurrenceTable, params: CSParams) -> float:
    """Causal strength of word pair (i, j) under the counted statistics."""
    params.validate()
    ct = table.compiled()
    return float(K.pair_cs(ct.id_of(i), ct.id_of(j), ct.size, ct.keys, ct.counts,
                           ct.row, ct.col, ct.m, ct.n,
                           params.alpha, params.lambda_interp, params.epsilon))


@dataclass
class ConnectiveLexicon:
    """Causal connective phrases, matched on lemma sequences."""

    phrases: set[str] = field(default_factory=set)
    lemma_phrases: list[tuple[str, tuple[Lemma, ...]]] = field(default_factory=list)

    @classmethod
    def from_phrases(cls, phrases, table: LemmaTable | None = None):
        table = table or {}
        lemma_phrases = []
        normalized = set()
        for phrase in phrases:
            phrase = " ".join(phrase.lower().split())
            if not phrase:
                continue
            _, lemmas = tokenize_and_lemmatize(phrase, table)
            if not lemmas:
                continue
            normalized.add(phrase)
            lemma_phrases.append((phrase, tuple(lemmas)))
        # longest first so the first hit is the longest match
        lemma_phrases.sort(key=lambda item: (-len(item[1]), item[0]))
        return cls(phrases=normalized, lemma_phrases=lemma_phrases)


def load_connective_lexicon(path, table: LemmaTable | None = None) -> ConnectiveLexicon:
    """One phrase per line; `#` comments and blank lines ignored."""
    phrases = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if line and not line.startswith("#"):
                phrases.append(line)
    return ConnectiveLexicon.from_phrases(phrases, table)


def default_connective_lexicon(table: LemmaTable | None = None) -> ConnectiveLexicon:
    """The bundled connective list."""
    text = (resources.files("knowdis") / "data" / "default_connectives.txt").read_text(
        encoding="utf-8")
    phrases = [l.strip() for l in text.splitlines()
               if l.strip() and not l.startswith("#")]
    return ConnectiveLexicon.from_phrases(phrases, table)


def detect_connective(instance: LabeledSentence,
                      lexicon: ConnectiveLexicon) -> str | None:
    """Longest lexicon phrase between the two events, or None.

    Matches contiguous lemma subsequences strictly inside the inter-event
    window; ties on length resolve to the leftmost occurrence.
    """
    lo, hi = sorted((instance.cause_idx, instance.effect_idx))
    window = instance.sentence.lemmas[lo + 1:hi]
    if not window:
        return None
    for phrase, lemmas in lexicon.lemma_phrases:
        width = len(lemmas)
        if width > len(window):
            continue
        for start in range(len(window) - width + 1):
            if tuple(window[start:start + width]) == lemmas:
                return phrase
    return None


def _connective_span(instance: LabeledSentence, phrase: str,
                     lexicon: ConnectiveLexicon) -> tuple[int, int] | None:
    """Absolute token span [s, e) of the detected connective."""
    lemma_seq = None
    for p, lemmas in lexicon.lemma_phrases:
        if p == phrase:
            lemma_seq = lemmas
            break
    if lemma_seq is None:
        return None
    lo, hi = sorted((instance.cause_idx, instance.effect_idx))
    window = instance.sentence.lemmas[lo + 1:hi]
    width = len(lemma_seq)
    for start in range(len(window) - width + 1):
        if tuple(window[start:start + width]) == lemma_seq:
            return lo + 1 + start, lo + 1 + start + width
    return None


def score_sentence(instance: LabeledSentence, table: CooccurrenceTable,
                   params: CSParams,
                   lexicon: ConnectiveLexicon | None = None) -> float:
    """Average causal strength across the sentence's two spans.

    The sentence splits at the detected connective (its tokens excluded
    from both spans) or, failing that, at the inter-event midpoint; the
    cause-containing span supplies the first index of the double sum.
    Stores the score (and connective) on the instance.
    """
    params.validate()
    lemmas = instance.sentence.lemmas
    connective = detect_connective(instance, lexicon) if lexicon else None
    instance.connective = connective

    if connective is not None:
        s, e = _connective_span(instance, connective, lexicon)
        left, right = lemmas[:s], lemmas[e:]
        cause_in_left = instance.cause_idx < s
    else:
        b = split_at_midpoint(instance.cause_idx, instance.effect_idx)
        left, right = lemmas[:b], lemmas[b:]
        cause_in_left = instance.cause_idx < b

    sp1, sp2 = (left, right) if cause_in_left else (right, left)
    if not sp1 or not sp2:
        log.warning("empty span for %s:%s; scoring 0",
                    instance.sentence.doc_id, instance.sentence.sent_id)
        instance.score_warning = True
        instance.cs_score = 0.0
        return 0.0

    ct = table.compiled()
    score = float(K.span_score(
        ct.id_array(sp1), ct.id_array(sp2), ct.size, ct.keys, ct.counts,
        ct.row, ct.col, ct.m, ct.n,
        params.alpha, params.lambda_interp, params.epsilon))
    instance.cs_score = score
    return score


def partition_and_keep(scored, keep_c: float = 0.50, keep_nc: float = 0.10):
    """Retain the top fractions of the connective/no-connective partitions.

    Within each partition instances sort by descending score (ties by
    document, sentence, pair); the first ceil(fraction * size) survive.
    Returns (kept, counts) with kept in canonical dataset order.
    """
    with_conn = [i for i in scored if i.connective is not None]
    without = [i for i in scored if i.connective is None]

    def keep_top(items, fraction):
        items = sorted(items, key=lambda i: (-(i.cs_score or 0.0),) + i.sort_key())
        return items[:ceil_count(fraction, len(items))]

    kept = keep_top(with_conn, keep_c) + keep_top(without, keep_nc)
    kept.sort(key=LabeledSentence.sort_key)
    counts = {
        "scored": len(scored),
        "with_connective": len(with_conn),
        "without_connective": len(without),
        "kept_with_connective": ceil_count(keep_c, len(with_conn)),
        "kept_without_connective": ceil_count(keep_nc, len(without)),
        "kept": len(kept),
    }
    return kept, counts
