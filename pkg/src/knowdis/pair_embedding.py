"""Translation-embedding scorer for candidate causal pairs.

A single learned relation vector translates cause vectors toward effect
vectors; margin-based SGD pushes causal pairs to small distances and
non-causal pairs to large ones. Candidates are ranked by ascending
distance and the top fraction is kept.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from math import sqrt
from pathlib import Path

import numpy as np

from . import _kernels as K
from .cuts import ceil_count, check_fraction
from .errors import ConfigError, FixtureParseError, MissingEmbeddingError
from .lexicon import EventPair, Lemma

log = logging.getLogger(__name__)

EMBEDDING_FORMAT = "knowdis-embedding/v1"
RELATION_ROW = "__relation__"

NEGATIVE_STRATEGIES = ("annotated_negatives", "corruption")


@dataclass
class MarginConfig:
    margin: float = 1.0
    learning_rate: float = 0.01
    epochs: int = 100
    seed: int = 0
    negative_strategy: str = "annotated_negatives"
    dim: int = 100
    zero_relation: bool = False

    def validate(self) -> "MarginConfig":
        if self.margin <= 0:
            raise ConfigError("margin must be positive")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.dim < 1:
            raise ConfigError("dim must be >= 1")
        if self.negative_strategy not in NEGATIVE_STRATEGIES:
            raise ConfigError(f"bad negative_strategy {self.negative_strategy!r}")
        return self


@dataclass
class EmbeddingSpace:
    dim: int
    entity: dict[Lemma, np.ndarray] = field(default_factory=dict)
    relation: np.ndarray | None = None

    def __post_init__(self):
        if self.relation is None:
            self.relation = np.zeros(self.dim, dtype=np.float64)

    def vector(self, lemma: Lemma) -> np.ndarray:
        try:
            return self.entity[lemma]
        except KeyError:
            raise MissingEmbeddingError(lemma) from None

    def has(self, pair: EventPair) -> bool:
        return pair.cause in self.entity and pair.effect in self.entity


def distance(space: EmbeddingSpace, pair: EventPair) -> float:
    """Euclidean length of v(cause) + relation - v(effect).

    Accumulates the squared sum left-to-right like the training kernels
    so scores are reproducible to the bit.
    """
    vc = space.vector(pair.cause)
    ve = space.vector(pair.effect)
    rel = space.relation
    s = 0.0
    for k in range(space.dim):
        d = float(vc[k]) + float(rel[k]) - float(ve[k])
        s += d * d
    return sqrt(s)


def hinge_term_loss(space: EmbeddingSpace, pos: EventPair, neg: EventPair,
                    margin: float) -> float:
    """Single-term margin loss [margin + d(pos) - d(neg)]+."""
    return max(0.0, margin + distance(space, pos) - distance(space, neg))


def hinge_term_grad(space: EmbeddingSpace, pos: EventPair, neg: EventPair,
                    margin: float):
    """Analytic gradient of the single-term margin loss.

    Returns (entity_grads, relation_grad) where entity_grads maps lemma to
    a dim-vector; both are zero when the hinge is inactive. This is the
    same gradient the SGD kernels apply.
    """
    grads: dict[Lemma, np.ndarray] = {}
    g_rel = np.zeros(space.dim, dtype=np.float64)
    if hinge_term_loss(space, pos, neg, margin) <= 0.0:
        return grads, g_rel

    def accumulate(pair: EventPair, sign: float):
        vc, ve = space.vector(pair.cause), space.vector(pair.effect)
        diff = vc + space.relation - ve
        norm = float(np.sqrt(np.dot(diff, diff)))
        if norm <= 1e-12:
            return
        unit = diff / norm
        grads[pair.cause] = grads.get(pair.cause, 0.0) + sign * unit
        grads[pair.effect] = grads.get(pair.effect, 0.0) - sign * unit
        g_rel[:] += sign * unit

    accumulate(pos, 1.0)
    accumulate(neg, -1.0)
    return grads, g_rel


def _entity_vocab(pairs) -> list[Lemma]:
    vocab = set()
    for pair in pairs:
        vocab.add(pair.cause)
        vocab.add(pair.effect)
    return sorted(vocab)


def train(positives: set[EventPair], negatives: set[EventPair],
          config: MarginConfig, extra_lemmas=()) -> EmbeddingSpace:
    """Fit an embedding space by margin-based SGD.

    Every epoch renormalizes entity vectors to unit norm, then takes one
    stochastic step per positive pair against a sampled negative. With
    the `annotated_negatives` strategy negatives come from the given
    non-causal set; with `corruption` one side of the positive is replaced
    by a random vocabulary lemma. `extra_lemmas` are given (random unit)
    vectors too, so downstream candidates stay scoreable.

    Deterministic for a fixed seed; bit-identical across kernel backends.
    """
    config.validate()
    if not positives:
        raise ConfigError("positives must be non-empty")
    if any(p.label != "causal" for p in positives):
        raise ConfigError("positives must all be labeled causal")
    if any(n.label != "noncausal" for n in negatives):
        raise ConfigError("negatives must all be labeled noncausal")
    if config.negative_strategy == "annotated_negatives" and not negatives:
        raise ConfigError("annotated_negatives strategy needs a non-empty negative set")

    pos_list = sorted(positives)
    neg_list = sorted(negatives)
    vocab = sorted(set(_entity_vocab(pos_list) + _entity_vocab(neg_list))
                   | set(extra_lemmas))
    index = {lemma: i for i, lemma in enumerate(vocab)}
    n_ent, dim = len(vocab), config.dim

    rng = np.random.default_rng(config.seed)
    bound = 6.0 / sqrt(dim)
    ent = rng.uniform(-bound, bound, size=(n_ent, dim))
    if config.zero_relation:
        rel = np.zeros(dim, dtype=np.float64)
    else:
        rel = rng.uniform(-bound, bound, size=dim)
        K.renormalize_rows(rel.reshape(1, dim))

    pos_idx = np.array(
        [[index[p.cause], index[p.effect]] for p in pos_list], dtype=np.int64)
    neg_idx = np.array(
        [[index[n.cause], index[n.effect]] for n in neg_list], dtype=np.int64)
    pos_keys = {p.key() for p in pos_list}

    update_relation = not config.zero_relation
    for _ in range(config.epochs):
        K.renormalize_rows(ent)
        order = rng.permutation(len(pos_list))
        if config.negative_strategy == "annotated_negatives":
            picks = rng.integers(0, len(neg_list), size=len(pos_list))
            neg_batch = neg_idx[picks]
        else:
            neg_batch = _corrupt(pos_idx[order], vocab, pos_keys, rng)
        K.transe_epoch(ent, rel, np.ascontiguousarray(pos_idx[order]),
                       np.ascontiguousarray(neg_batch),
                       float(config.margin), float(config.learning_rate),
                       update_relation)

    entity = {lemma: ent[i].copy() for lemma, i in index.items()}
    return EmbeddingSpace(dim=dim, entity=entity, relation=rel)


def _corrupt(pos_batch, vocab, pos_keys, rng):
    """Corrupt one side of each positive with a random lemma.

    Re-draws (bounded) when the corruption lands on a known positive.
    """
    n_ent = len(vocab)
    out = np.empty_like(pos_batch)
    for t in range(pos_batch.shape[0]):
        c, e = int(pos_batch[t, 0]), int(pos_batch[t, 1])
        for _ in range(16):
            side = int(rng.integers(0, 2))
            repl = int(rng.integers(0, n_ent))
            cand = (repl, e) if side == 0 else (c, repl)
            if cand != (c, e) and (vocab[cand[0]], vocab[cand[1]]) not in pos_keys:
                break
        out[t, 0], out[t, 1] = cand
    return out


def rank_candidates(space: EmbeddingSpace,
                    candidates: set[EventPair]) -> list[tuple[EventPair, float]]:
    """Sort candidates by ascending distance; ties break lexicographically.

    Candidates with unembedded lemmas are dropped (count logged).
    """
    scored = []
    dropped = 0
    for pair in candidates:
        if not space.has(pair):
            dropped += 1
            continue
        scored.append((pair, distance(space, pair)))
    if dropped:
        log.warning("dropped %d candidate pairs with unembedded lemmas", dropped)
    scored.sort(key=lambda item: (item[1], item[0].cause, item[0].effect))
    return scored


def filter_top(ranked: list[tuple[EventPair, float]],
               fraction: float = 0.10) -> set[EventPair]:
    """Keep the first ceil(fraction * n) ranked pairs."""
    check_fraction(fraction)
    keep = ceil_count(fraction, len(ranked))
    return {pair for pair, _ in ranked[:keep]}


def save_space(space: EmbeddingSpace, path) -> None:
    """Persist as `lemma<TAB>v1,...,vdim` rows plus one relation row.

    Floats are written with repr so the file round-trips bit-exactly.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(f"# {EMBEDDING_FORMAT} dim={space.dim}\n")
        fh.write(RELATION_ROW + "\t" + _fmt_row(space.relation) + "\n")
        for lemma in sorted(space.entity):
            fh.write(lemma + "\t" + _fmt_row(space.entity[lemma]) + "\n")


def _fmt_row(vec) -> str:
    return ",".join(repr(float(v)) for v in vec)


def load_space(path) -> EmbeddingSpace:
    path = Path(path)
    dim = None
    relation = None
    entity: dict[Lemma, np.ndarray] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                if EMBEDDING_FORMAT not in line or "dim=" not in line:
                    raise FixtureParseError(path, lineno, "bad embedding header")
                dim = int(line.rsplit("dim=", 1)[1])
                continue
            name, _, values = line.partition("\t")
            if not values:
                raise FixtureParseError(path, lineno, "expected lemma<TAB>values")
            vec = np.array([float(v) for v in values.split(",")], dtype=np.float64)
            if dim is not None and vec.shape[0] != dim:
                raise FixtureParseError(path, lineno, "vector length != header dim")
            if name == RELATION_ROW:
                relation = vec
            else:
                entity[name] = vec
    if dim is None or relation is None:
        raise FixtureParseError(path, 0, "missing header or relation row")
    return EmbeddingSpace(dim=dim, entity=entity, relation=relation)
