"""Corpus streaming, sampling, and distant annotation.

Sentences are tokenized and lemmatized, sampled with a per-sentence
seeded hash (stable under any scan order or worker count), and every
sentence containing both lemmas of a known causal pair becomes one
training instance per matched pair.
"""

from __future__ import annotations

import hashlib
import string
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .cuts import check_fraction
from .errors import FixtureParseError
from .lexicon import EventPair, Lemma, normalize_lemma
from .manifest import records_hash

MAX_SENTENCE_TOKENS = 128

_EDGE_CHARS = string.punctuation + string.whitespace
_VOWELS = "aeiou"
# Letters whose doubling is usually part of the base form (kill, miss, buzz).
_KEEP_DOUBLED = "lsz"

LemmaTable = dict  # surface form -> lemma


@dataclass
class SentenceRecord:
    doc_id: str
    sent_id: int
    text: str
    tokens: list[str] = field(default_factory=list)
    lemmas: list[Lemma] = field(default_factory=list)

    def to_record(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "sent_id": self.sent_id,
            "text": self.text,
            "tokens": list(self.tokens),
            "lemmas": list(self.lemmas),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "SentenceRecord":
        return cls(rec["doc_id"], int(rec["sent_id"]), rec["text"],
                   list(rec.get("tokens", [])), list(rec.get("lemmas", [])))


@dataclass
class LabeledSentence:
    sentence: SentenceRecord
    cause_idx: int
    effect_idx: int
    pair: EventPair
    pair_source: str = "gold"  # gold | extracted
    orientation: str = "cause_first"  # cause_first | effect_first
    connective: str | None = None
    cs_score: float | None = None
    score_warning: bool = False

    def sort_key(self):
        return (self.sentence.doc_id, self.sentence.sent_id,
                self.pair.cause, self.pair.effect)

    def to_record(self) -> dict:
        rec = self.sentence.to_record()
        rec.update({
            "cause_idx": self.cause_idx,
            "effect_idx": self.effect_idx,
            "pair": self.pair.to_record(),
            "pair_source": self.pair_source,
            "orientation": self.orientation,
            "connective": self.connective,
            "cs_score": self.cs_score,
            "score_warning": self.score_warning,
        })
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "LabeledSentence":
        return cls(
            sentence=SentenceRecord.from_record(rec),
            cause_idx=int(rec["cause_idx"]),
            effect_idx=int(rec["effect_idx"]),
            pair=EventPair.from_record(rec["pair"]),
            pair_source=rec.get("pair_source", "gold"),
            orientation=rec.get("orientation", "cause_first"),
            connective=rec.get("connective"),
            cs_score=rec.get("cs_score"),
            score_warning=bool(rec.get("score_warning", False)),
        )


def load_lemma_table(path) -> LemmaTable:
    """Parse a `surface<TAB>lemma` TSV into a lookup table."""
    table: LemmaTable = {}
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise FixtureParseError(path, lineno, "expected surface<TAB>lemma")
            surface = parts[0].strip().lower()
            lemma = normalize_lemma(parts[1])
            if not surface or not lemma:
                raise FixtureParseError(path, lineno, "empty surface or lemma")
            table[surface] = lemma
    return table


def _strip_suffix(word: str) -> str:
    """Suffix-strip fallback: -ies/-es/-s/-ed/-ing, undoing doubled consonants."""
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith("es") and len(word) > 4:
        return word[:-2]
    if word.endswith("s") and not word.endswith("ss") and len(word) > 3:
        return word[:-1]
    stem = None
    if word.endswith("ed") and len(word) > 4:
        stem = word[:-2]
    elif word.endswith("ing") and len(word) > 5:
        stem = word[:-3]
    if stem is None:
        return word
    if (len(stem) >= 3 and stem[-1] == stem[-2]
            and stem[-1] not in _VOWELS and stem[-1] not in _KEEP_DOUBLED):
        stem = stem[:-1]
    return stem


def lemmatize_token(token: str, table: LemmaTable) -> Lemma:
    word = token.lower()
    if word in table:
        return table[word]
    return _strip_suffix(word)


def tokenize_and_lemmatize(text: str, table: LemmaTable) -> tuple[list[str], list[Lemma]]:
    """Whitespace tokens with edge punctuation stripped, plus parallel lemmas."""
    tokens: list[str] = []
    lemmas: list[Lemma] = []
    for raw in text.split():
        token = raw.strip(_EDGE_CHARS)
        if not token:
            continue
        tokens.append(token)
        lemmas.append(lemmatize_token(token, table))
    return tokens, lemmas


def keep_sentence(seed: int, doc_id: str, sent_id: int, fraction: float) -> bool:
    """Seeded Bernoulli draw keyed only by (seed, doc_id, sent_id)."""
    if fraction >= 1.0:
        return True
    payload = f"{seed}\x1f{doc_id}\x1f{sent_id}".encode("utf-8")
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    u = int.from_bytes(digest, "big") / 2.0 ** 64
    return u < fraction


def sample_corpus(corpus, fraction: float, seed: int):
    """Yield sentences retained independently with probability `fraction`.

    Deterministic for a fixed seed and independent of scan order: the
    decision for a sentence depends only on (seed, doc_id, sent_id).
    """
    check_fraction(fraction, "corpus fraction")
    for rec in corpus:
        if keep_sentence(seed, str(rec["doc_id"]), int(rec["sent_id"]), fraction):
            yield rec


class PairIndex:
    """Pairs indexed by cause lemma for O(1) per-sentence matching."""

    def __init__(self, pairs, sources=None):
        self.by_cause: dict[Lemma, list[EventPair]] = {}
        self.sources = sources or {}
        for pair in sorted(pairs):
            self.by_cause.setdefault(pair.cause, []).append(pair)

    def source_of(self, pair: EventPair) -> str:
        return self.sources.get(pair.key(), "gold" if pair.provenance == "gold"
                                else "extracted")

    @classmethod
    def from_pair_sets(cls, gold_causal, extracted):
        """Union of gold causal and extracted pairs; gold wins on overlap."""
        sources = {}
        merged: dict[tuple, EventPair] = {}
        for pair in sorted(extracted):
            merged[pair.key()] = pair
            sources[pair.key()] = "extracted"
        for pair in sorted(gold_causal):
            merged[pair.key()] = pair
            sources[pair.key()] = "gold"
        return cls(merged.values(), sources)


def annotate(sentence: SentenceRecord, index: PairIndex) -> list[LabeledSentence]:
    """Emit one instance per pair whose lemmas both occur at distinct positions.

    The first occurrence of each lemma anchors the event; for self-pairs the
    effect takes the second occurrence. Both textual orders match, with the
    orientation recorded.
    """
    occurrences: dict[Lemma, list[int]] = {}
    for idx, lemma in enumerate(sentence.lemmas):
        occurrences.setdefault(lemma, []).append(idx)

    out: list[LabeledSentence] = []
    for cause in sorted(occurrences):
        for pair in index.by_cause.get(cause, ()):
            effect_positions = occurrences.get(pair.effect)
            if not effect_positions:
                continue
            cause_idx = occurrences[cause][0]
            if pair.effect == cause:
                if len(effect_positions) < 2:
                    continue
                effect_idx = effect_positions[1]
            else:
                effect_idx = effect_positions[0]
            if cause_idx == effect_idx:
                continue
            out.append(LabeledSentence(
                sentence=sentence,
                cause_idx=cause_idx,
                effect_idx=effect_idx,
                pair=pair,
                pair_source=index.source_of(pair),
                orientation="cause_first" if cause_idx < effect_idx else "effect_first",
            ))
    return out


def _annotate_chunk(args):
    chunk, pairs_payload, table, fraction, seed, max_tokens = args
    index = PairIndex(pairs_payload[0], pairs_payload[1])
    out = []
    for rec in chunk:
        doc_id, sent_id = str(rec["doc_id"]), int(rec["sent_id"])
        if not keep_sentence(seed, doc_id, sent_id, fraction):
            continue
        tokens, lemmas = tokenize_and_lemmatize(rec.get("text", ""), table)
        if not tokens or len(tokens) > max_tokens:
            continue
        sentence = SentenceRecord(doc_id, sent_id, rec.get("text", ""), tokens, lemmas)
        out.extend(annotate(sentence, index))
    return out


def build_dn(corpus, index: PairIndex, table: LemmaTable, fraction: float,
             seed: int, workers: int = 1,
             max_tokens: int = MAX_SENTENCE_TOKENS):
    """Sample, tokenize, and annotate a corpus stream into distant data.

    Returns (instances, counts): instances canonically sorted by
    (doc_id, sent_id, pair); counts cover sampling and per-source totals.
    The instance set is identical for any worker count.
    """
    check_fraction(fraction, "corpus fraction")
    pairs_payload = (
        [p for ps in index.by_cause.values() for p in ps], dict(index.sources))

    instances: list[LabeledSentence] = []
    if workers <= 1:
        instances = _annotate_chunk(
            (list(corpus), pairs_payload, table, fraction, seed, max_tokens))
    else:
        chunks = _chunked(list(corpus), 256)
        jobs = [(chunk, pairs_payload, table, fraction, seed, max_tokens)
                for chunk in chunks]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_annotate_chunk, jobs):
                instances.extend(part)

    instances.sort(key=LabeledSentence.sort_key)
    counts = {
        "instances": len(instances),
        "from_gold_pairs": sum(1 for i in instances if i.pair_source == "gold"),
        "from_extracted_pairs": sum(
            1 for i in instances if i.pair_source == "extracted"),
    }
    return instances, counts


def _chunked(items, size):
    return [items[i:i + size] for i in range(0, len(items), size)]


def dataset_hash(instances) -> str:
    return records_hash(inst.to_record() for inst in instances)
