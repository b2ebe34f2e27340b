"""Sparse-feature causality classifier with relabeling and annealing.

A hashed sparse feature vector (pair identity, event lemmas, connective,
orientation, distance and score buckets, context bags) feeds an
L2-regularized logistic model trained by SGD. A gold-trained model
relabels distant data, and the annealed schedule admits the retained
distant instances gradually, highest-confidence first.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from math import exp, log
from pathlib import Path

import numpy as np

from .annotator import LabeledSentence
from .cuts import ramp_floor_count
from .errors import ConfigError, TrainingError

MODEL_FORMAT = "knowdis-detector/v1"

_DIST_BUCKETS = ((1, "1"), (3, "2-3"), (7, "4-7"))
_CONTEXT_WINDOW = 3


@dataclass
class TrainConfig:
    learning_rate: float = 0.1
    l2_penalty: float = 1e-4
    epochs: int = 20
    seed: int = 0
    beta: float = 0.1
    relabel_threshold: float = 0.5

    def validate(self) -> "TrainConfig":
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.l2_penalty < 0:
            raise ConfigError("l2_penalty must be >= 0")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if not 0.0 < self.beta <= 1.0:
            raise ConfigError("beta must be in (0, 1]")
        if not 0.0 < self.relabel_threshold < 1.0:
            raise ConfigError("relabel_threshold must be in (0, 1)")
        return self


@dataclass
class DetectorModel:
    weights: dict[int, float]
    bias: float
    hash_seed: int
    cs_bucket_edges: tuple[float, float, float]

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "format": MODEL_FORMAT,
            "weights": {str(k): v for k, v in sorted(self.weights.items())},
            "bias": self.bias,
            "hash_seed": self.hash_seed,
            "cs_bucket_edges": list(self.cs_bucket_edges),
        }
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")

    @classmethod
    def load(cls, path) -> "DetectorModel":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("format") != MODEL_FORMAT:
            raise ConfigError(f"unsupported model format in {path}")
        return cls(
            weights={int(k): float(v) for k, v in payload["weights"].items()},
            bias=float(payload["bias"]),
            hash_seed=int(payload["hash_seed"]),
            cs_bucket_edges=tuple(payload["cs_bucket_edges"]),
        )


def feature_id(name: str, hash_seed: int) -> int:
    """Stable 62-bit id for a feature string under a fixed seed."""
    key = int(hash_seed).to_bytes(8, "little", signed=True)
    digest = hashlib.blake2b(name.encode("utf-8"), digest_size=8, key=key).digest()
    return int.from_bytes(digest, "big") & ((1 << 62) - 1)


def cs_quartile_edges(instances) -> tuple[float, float, float]:
    """Quartile boundaries of the available scores (0s when none exist)."""
    values = sorted(i.cs_score for i in instances if i.cs_score is not None)
    if not values:
        return (0.0, 0.0, 0.0)
    q = np.quantile(np.array(values, dtype=np.float64), [0.25, 0.5, 0.75])
    return (float(q[0]), float(q[1]), float(q[2]))


def _distance_bucket(gap: int) -> str:
    for limit, name in _DIST_BUCKETS:
        if gap <= limit:
            return name
    return "8+"


def _cs_bucket(score: float, edges) -> str:
    for k, edge in enumerate(edges):
        if score <= edge:
            return f"q{k + 1}"
    return "q4"


def featurize(instance: LabeledSentence, cs_bucket_edges,
              hash_seed: int) -> dict[int, float]:
    """Deterministic sparse feature vector for one instance."""
    lemmas = instance.sentence.lemmas
    cause, effect = instance.pair.cause, instance.pair.effect
    names = [
        f"pair={cause}|{effect}",
        f"cause={cause}",
        f"effect={effect}",
        f"conn={instance.connective if instance.connective is not None else 'NONE'}",
        f"orient={instance.orientation}",
        f"dist={_distance_bucket(abs(instance.cause_idx - instance.effect_idx))}",
    ]
    if instance.cs_score is not None:
        names.append(f"cs={_cs_bucket(instance.cs_score, cs_bucket_edges)}")
    for center, tag in ((instance.cause_idx, "ctxc"), (instance.effect_idx, "ctxe")):
        lo = max(0, center - _CONTEXT_WINDOW)
        hi = min(len(lemmas), center + _CONTEXT_WINDOW + 1)
        for k in range(lo, hi):
            if k != center:
                names.append(f"{tag}={lemmas[k]}")
    vec: dict[int, float] = {}
    for name in names:
        fid = feature_id(name, hash_seed)
        vec[fid] = vec.get(fid, 0.0) + 1.0
    return vec


def sigmoid(z: float) -> float:
    """Logistic function, clamped so outputs stay strictly inside (0, 1)."""
    z = max(-30.0, min(30.0, z))
    return 1.0 / (1.0 + exp(-z))


def raw_score(model: DetectorModel, features: dict[int, float]) -> float:
    s = model.bias
    for fid, value in features.items():
        w = model.weights.get(fid)
        if w is not None:
            s += w * value
    return s


def predict(model: DetectorModel, instance: LabeledSentence) -> float:
    """Probability that the instance expresses the causal relation."""
    return sigmoid(raw_score(
        model, featurize(instance, model.cs_bucket_edges, model.hash_seed)))


def target_of(instance: LabeledSentence) -> float:
    return 1.0 if instance.pair.label == "causal" else 0.0


def instance_loss(weights, bias, features, y, l2) -> float:
    """Per-instance regularized log-loss (L2 over the active weights)."""
    z = bias
    for fid, value in features.items():
        z += weights.get(fid, 0.0) * value
    p = sigmoid(z)
    p = max(min(p, 1.0 - 1e-15), 1e-15)
    loss = -(y * log(p) + (1.0 - y) * log(1.0 - p))
    for fid in features:
        w = weights.get(fid, 0.0)
        loss += 0.5 * l2 * w * w
    return loss


def instance_grad(weights, bias, features, y, l2):
    """Analytic gradient of `instance_loss`: (per-feature grads, bias grad)."""
    z = bias
    for fid, value in features.items():
        z += weights.get(fid, 0.0) * value
    p = sigmoid(z)
    g = p - y
    grads = {fid: g * value + l2 * weights.get(fid, 0.0)
             for fid, value in features.items()}
    return grads, g


def _sgd(featurized, config: TrainConfig, data_for_epoch) -> tuple[dict, float]:
    """Shared SGD loop; `data_for_epoch(e)` yields index lists per epoch."""
    weights: dict[int, float] = {}
    bias = 0.0
    for epoch in range(1, config.epochs + 1):
        indices = data_for_epoch(epoch)
        rng = random.Random(config.seed * 1_000_003 + epoch)
        rng.shuffle(indices)
        for idx in indices:
            features, y = featurized[idx]
            grads, g_bias = instance_grad(weights, bias, features, y,
                                          config.l2_penalty)
            for fid, grad in grads.items():
                weights[fid] = weights.get(fid, 0.0) - config.learning_rate * grad
            bias -= config.learning_rate * g_bias
    return weights, bias


def _prepare(data, config: TrainConfig):
    edges = cs_quartile_edges(data)
    featurized = [(featurize(inst, edges, config.seed), target_of(inst))
                  for inst in data]
    return edges, featurized


def _check_both_classes(data, who: str):
    labels = {inst.pair.label for inst in data}
    if labels != {"causal", "noncausal"}:
        raise TrainingError(f"{who} needs both classes, got {sorted(labels)}")


def train_plain(data, config: TrainConfig) -> DetectorModel:
    """Fit the logistic model on the full dataset every epoch."""
    config.validate()
    _check_both_classes(data, "train_plain")
    edges, featurized = _prepare(data, config)
    all_indices = list(range(len(featurized)))
    weights, bias = _sgd(featurized, config, lambda epoch: list(all_indices))
    return DetectorModel(weights=weights, bias=bias, hash_seed=config.seed,
                         cs_bucket_edges=edges)


def relabel(model: DetectorModel, d_r, threshold: float = 0.5):
    """Self-training pass: keep instances the gold model still calls causal.

    Returns (kept, counts); kept instances retain their positive label.
    """
    kept = [inst for inst in d_r if predict(model, inst) >= threshold]
    counts = {"input": len(d_r), "kept": len(kept),
              "dropped": len(d_r) - len(kept)}
    return kept, counts


def anneal_count(epoch: int, beta: float, total: int) -> int:
    """floor(min(1, (epoch - 1) * beta) * total): 0 at epoch 1, then a ramp."""
    if epoch < 1:
        raise ConfigError("epoch must be >= 1")
    if not 0.0 < beta <= 1.0:
        raise ConfigError("beta must be in (0, 1]")
    return ramp_floor_count(epoch - 1, beta, total)


def train_annealed(gold, d_rr, config: TrainConfig) -> DetectorModel:
    """Train on gold data plus a growing prefix of the distant data.

    Epoch e sees gold plus the first `anneal_count(e)` distant instances
    (ordered by descending score so the most confident enter first).
    With no distant data this is weight-identical to `train_plain(gold)`.
    """
    config.validate()
    _check_both_classes(gold, "train_annealed")
    ordered = sorted(d_rr, key=lambda i: (-(i.cs_score or 0.0),) + i.sort_key())
    data = list(gold) + ordered
    edges, featurized = _prepare(data, config)
    n_gold = len(gold)

    def data_for_epoch(epoch: int):
        admitted = anneal_count(epoch, config.beta, len(ordered))
        return list(range(n_gold + admitted))

    weights, bias = _sgd(featurized, config, data_for_epoch)
    return DetectorModel(weights=weights, bias=bias, hash_seed=config.seed,
                         cs_bucket_edges=edges)
