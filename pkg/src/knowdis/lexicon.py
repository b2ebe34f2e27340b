"""Lexical knowledge fixtures and causal event-pair expansion.

Gold (cause, effect) lemma pairs are expanded into candidate pairs by
combining each side's synonym/hypernym group (synset fixture) and its
verb-class co-members (verb-class fixture), taking the cross product of
the two groups minus the original pair.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from pathlib import Path

from .errors import FixtureParseError

Lemma = str

PROVENANCES = ("gold", "wordnet", "verbnet", "both")
LABELS = ("causal", "noncausal")

_STRIP_CHARS = string.punctuation + string.whitespace


def normalize_lemma(text: str) -> Lemma:
    """Lowercase and strip edge punctuation; empty result stays empty."""
    return text.strip(_STRIP_CHARS).lower()


def head_word(phrase: str) -> Lemma:
    """Head word of an event phrase: its last whitespace token, normalized."""
    parts = phrase.split()
    return normalize_lemma(parts[-1]) if parts else ""


@dataclass(frozen=True, order=True)
class EventPair:
    cause: Lemma
    effect: Lemma
    provenance: str = "gold"
    label: str = "causal"

    def __post_init__(self):
        if not self.cause or not self.effect:
            raise ValueError("event pair lemmas must be non-empty")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"bad provenance {self.provenance!r}")
        if self.label not in LABELS:
            raise ValueError(f"bad label {self.label!r}")

    def key(self) -> tuple[Lemma, Lemma]:
        return (self.cause, self.effect)

    def to_record(self) -> dict:
        return {
            "cause": self.cause,
            "effect": self.effect,
            "provenance": self.provenance,
            "label": self.label,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "EventPair":
        return cls(rec["cause"], rec["effect"], rec["provenance"], rec["label"])


@dataclass
class SynsetIndex:
    """Per-lemma synonym and hypernym sets; absent lemmas look up empty."""

    synonyms: dict[Lemma, set[Lemma]] = field(default_factory=dict)
    hypernyms: dict[Lemma, set[Lemma]] = field(default_factory=dict)

    def group(self, lemma: Lemma) -> set[Lemma]:
        """The expansion group of `lemma`: itself plus synonyms and hypernyms."""
        out = {lemma}
        out |= self.synonyms.get(lemma, set())
        out |= self.hypernyms.get(lemma, set())
        return out

    def add(self, lemma: Lemma, synonyms=(), hypernyms=()):
        self.synonyms.setdefault(lemma, set()).update(
            s for s in synonyms if s != lemma)
        self.hypernyms.setdefault(lemma, set()).update(
            h for h in hypernyms if h != lemma)


@dataclass
class VerbClassIndex:
    """Bidirectional lemma <-> verb-class membership maps."""

    classes: dict[Lemma, set[str]] = field(default_factory=dict)
    members: dict[str, set[Lemma]] = field(default_factory=dict)

    def add(self, class_id: str, lemmas):
        bucket = self.members.setdefault(class_id, set())
        for lemma in lemmas:
            bucket.add(lemma)
            self.classes.setdefault(lemma, set()).add(class_id)

    def group(self, lemma: Lemma) -> set[Lemma]:
        """Union of all co-members of `lemma`'s classes, including itself."""
        out = {lemma}
        for class_id in self.classes.get(lemma, ()):
            out |= self.members[class_id]
        return out


def _split_csv(text: str) -> list[Lemma]:
    out = []
    for part in text.split(","):
        lemma = normalize_lemma(part)
        if lemma:
            out.append(lemma)
    return out


def load_synset_index(path) -> SynsetIndex:
    """Parse a `lemma<TAB>syn:a,b<TAB>hyp:c,d` fixture; duplicates merge by union."""
    index = SynsetIndex()
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise FixtureParseError(path, lineno, "expected 3 tab-separated fields")
            lemma = normalize_lemma(parts[0])
            if not lemma:
                raise FixtureParseError(path, lineno, "empty lemma")
            if not parts[1].startswith("syn:") or not parts[2].startswith("hyp:"):
                raise FixtureParseError(path, lineno, "expected syn:/hyp: prefixes")
            index.add(lemma, _split_csv(parts[1][4:]), _split_csv(parts[2][4:]))
    return index


def load_verbclass_index(path) -> VerbClassIndex:
    """Parse a `classid<TAB>member1,member2,...` fixture."""
    index = VerbClassIndex()
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise FixtureParseError(path, lineno, "expected 2 tab-separated fields")
            class_id = parts[0].strip().lower()
            if not class_id:
                raise FixtureParseError(path, lineno, "empty class id")
            index.add(class_id, _split_csv(parts[1]))
    return index


def load_gold_pairs(path) -> set[EventPair]:
    """Parse `cause<TAB>effect<TAB>causal|noncausal` gold pairs.

    Multi-word events reduce to their head word. Duplicate (cause, effect)
    rows must agree on the label.
    """
    pairs: dict[tuple[Lemma, Lemma], EventPair] = {}
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise FixtureParseError(path, lineno, "expected 3 tab-separated fields")
            cause, effect = head_word(parts[0]), head_word(parts[1])
            label = parts[2].strip().lower()
            if not cause or not effect:
                raise FixtureParseError(path, lineno, "empty event lemma")
            if label not in LABELS:
                raise FixtureParseError(path, lineno, f"bad label {parts[2]!r}")
            pair = EventPair(cause, effect, "gold", label)
            old = pairs.get(pair.key())
            if old is not None and old.label != label:
                raise FixtureParseError(path, lineno, "conflicting labels for pair")
            pairs[pair.key()] = pair
    return set(pairs.values())


def _cross_minus_original(pair: EventPair, group_c, group_e, provenance):
    out = set()
    for c in group_c:
        for e in group_e:
            if (c, e) == pair.key():
                continue
            out.add(EventPair(c, e, provenance, "causal"))
    return out


def expand_wordnet(pair: EventPair, index: SynsetIndex) -> set[EventPair]:
    """Cross product of the two synonym/hypernym groups, minus the original."""
    return _cross_minus_original(
        pair, index.group(pair.cause), index.group(pair.effect), "wordnet")


def expand_verbnet(pair: EventPair, index: VerbClassIndex) -> set[EventPair]:
    """Cross product of the two verb-class member groups, minus the original."""
    return _cross_minus_original(
        pair, index.group(pair.cause), index.group(pair.effect), "verbnet")


def expand_all(gold: set[EventPair], syn: SynsetIndex,
               vn: VerbClassIndex) -> set[EventPair]:
    """Expand every causal gold pair through both indices.

    Deduplicates on (cause, effect); a pair produced by both sources gets
    provenance "both". Pairs whose (cause, effect) already appears in the
    gold set are excluded.
    """
    gold_keys = {p.key() for p in gold}
    found: dict[tuple[Lemma, Lemma], str] = {}
    for pair in gold:
        if pair.label != "causal":
            continue
        for expanded in expand_wordnet(pair, syn):
            if expanded.key() in gold_keys:
                continue
            prev = found.get(expanded.key())
            found[expanded.key()] = "both" if prev in ("verbnet", "both") else "wordnet"
        for expanded in expand_verbnet(pair, vn):
            if expanded.key() in gold_keys:
                continue
            prev = found.get(expanded.key())
            found[expanded.key()] = "both" if prev in ("wordnet", "both") else "verbnet"
    return {EventPair(c, e, prov, "causal") for (c, e), prov in found.items()}
