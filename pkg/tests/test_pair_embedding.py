"""Translation-embedding scorer: distances, training, ranking, persistence."""

import math

import numpy as np
import pytest

from knowdis.errors import ConfigError, MissingEmbeddingError
from knowdis.lexicon import EventPair
from knowdis.pair_embedding import (EmbeddingSpace, MarginConfig, distance,
                                    filter_top, hinge_term_grad,
                                    hinge_term_loss, load_space,
                                    rank_candidates, save_space, train)


def space_from(entity, relation=None):
    dim = len(next(iter(entity.values())))
    ent = {k: np.array(v, dtype=np.float64) for k, v in entity.items()}
    rel = (np.array(relation, dtype=np.float64)
           if relation is not None else np.zeros(dim))
    return EmbeddingSpace(dim=dim, entity=ent, relation=rel)


class TestDistance:
    def test_identity_is_zero(self):
        space = space_from({"a": [1.0, 2.0], "b": [1.0, 2.0]})
        assert distance(space, EventPair("a", "b")) == 0.0

    def test_unit_norm(self):
        space = space_from({"a": [1.0, 0.0], "b": [0.0, 0.0]})
        assert distance(space, EventPair("a", "b")) == 1.0

    def test_matches_brute_force_norm(self):
        # independent oracle: explicit sqrt of summed squares
        rng = np.random.default_rng(42)
        vc, ve, rel = rng.normal(size=5), rng.normal(size=5), rng.normal(size=5)
        space = space_from({"c": vc, "e": ve}, rel)
        expected = math.sqrt(sum((float(vc[k]) + float(rel[k]) - float(ve[k])) ** 2
                                 for k in range(5)))
        assert distance(space, EventPair("c", "e")) == pytest.approx(expected, rel=1e-15)

    def test_unknown_lemma_raises_with_name(self):
        space = space_from({"a": [0.0]})
        with pytest.raises(MissingEmbeddingError) as err:
            distance(space, EventPair("a", "missing"))
        assert "missing" in str(err.value)

    def test_nonnegative(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            space = space_from({"a": rng.normal(size=4), "b": rng.normal(size=4)},
                               rng.normal(size=4))
            assert distance(space, EventPair("a", "b")) >= 0.0


def fd_gradient(space, pos, neg, margin, lemma, h=1e-6):
    """Central finite differences of the hinge term w.r.t. one entity vector."""
    base = space.entity[lemma]
    grad = np.zeros_like(base)
    for k in range(len(base)):
        orig = base[k]
        base[k] = orig + h
        up = hinge_term_loss(space, pos, neg, margin)
        base[k] = orig - h
        down = hinge_term_loss(space, pos, neg, margin)
        base[k] = orig
        grad[k] = (up - down) / (2 * h)
    return grad


class TestHingeGradient:
    def test_initial_loss_equals_margin_for_identical_vectors(self):
        space = space_from({"pc": [0.3, 0.1], "pe": [0.2, 0.5],
                            "nc": [0.3, 0.1], "ne": [0.2, 0.5]})
        loss = hinge_term_loss(space, EventPair("pc", "pe"),
                               EventPair("nc", "ne", label="noncausal"), 1.5)
        assert loss == pytest.approx(1.5)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        checked = 0
        for trial in range(80):
            entity = {name: rng.normal(size=4)
                      for name in ("pc", "pe", "nc", "ne")}
            space = space_from(entity, rng.normal(size=4))
            pos = EventPair("pc", "pe")
            neg = EventPair("nc", "ne", label="noncausal")
            margin = float(rng.uniform(0.5, 2.0))
            if hinge_term_loss(space, pos, neg, margin) <= 1e-3:
                continue  # keep away from the hinge kink
            grads, _ = hinge_term_grad(space, pos, neg, margin)
            for lemma in entity:
                numeric = fd_gradient(space, pos, neg, margin, lemma)
                analytic = grads.get(lemma, np.zeros(4))
                assert np.allclose(analytic, numeric, rtol=1e-5, atol=1e-7)
            checked += 1
        assert checked >= 50

    def test_inactive_hinge_zero_gradient(self):
        space = space_from({"pc": [0.0, 0.0], "pe": [0.0, 0.0],
                            "nc": [9.0, 0.0], "ne": [0.0, 0.0]})
        grads, g_rel = hinge_term_grad(
            space, EventPair("pc", "pe"), EventPair("nc", "ne", label="noncausal"), 1.0)
        assert grads == {} and (g_rel == 0).all()


def toy_training_sets(rng_seed=0):
    """Two cause groups mapping to two effect groups; causal = aligned."""
    causes_a = [f"ca{i}" for i in range(4)]
    causes_b = [f"cb{i}" for i in range(4)]
    effects_x = [f"ex{i}" for i in range(4)]
    effects_y = [f"ey{i}" for i in range(4)]
    pos = {EventPair(c, e) for c in causes_a for e in effects_x}
    pos |= {EventPair(c, e) for c in causes_b for e in effects_y}
    neg = {EventPair(c, e, label="noncausal") for c in causes_a for e in effects_y}
    neg |= {EventPair(c, e, label="noncausal") for c in causes_b for e in effects_x}
    return pos, neg


class TestTrain:
    def test_requires_positives(self):
        with pytest.raises(ConfigError):
            train(set(), set(), MarginConfig(dim=4, epochs=1))

    def test_requires_negatives_for_annotated_strategy(self):
        with pytest.raises(ConfigError):
            train({EventPair("a", "b")}, set(), MarginConfig(dim=4, epochs=1))

    def test_separates_toy_sets(self):
        pos, neg = toy_training_sets()
        pos_train = set(sorted(pos)[:20])
        neg_train = set(sorted(neg)[:20])
        config = MarginConfig(dim=16, epochs=80, learning_rate=0.05, seed=3)
        space = train(pos_train, neg_train, config)
        mean_pos = np.mean([distance(space, p) for p in sorted(pos_train)])
        mean_neg = np.mean([distance(space, n) for n in sorted(neg_train)])
        assert mean_pos < mean_neg

    def test_bit_reproducible(self):
        pos, neg = toy_training_sets()
        config = MarginConfig(dim=8, epochs=20, seed=5)
        s1 = train(pos, neg, config)
        s2 = train(pos, neg, config)
        assert (s1.relation == s2.relation).all()
        for lemma in s1.entity:
            assert (s1.entity[lemma] == s2.entity[lemma]).all()

    def test_corruption_strategy_runs_without_negatives(self):
        pos, _ = toy_training_sets()
        config = MarginConfig(dim=8, epochs=10, seed=1,
                              negative_strategy="corruption")
        space = train(pos, set(), config)
        assert set(space.entity) >= {p.cause for p in pos}

    def test_extra_lemmas_are_embedded(self):
        pos, neg = toy_training_sets()
        space = train(pos, neg, MarginConfig(dim=8, epochs=2, seed=1),
                      extra_lemmas=["sparkle"])
        assert "sparkle" in space.entity

    def test_zero_relation_option(self):
        pos, neg = toy_training_sets()
        space = train(pos, neg, MarginConfig(dim=8, epochs=5, seed=1,
                                             zero_relation=True))
        assert (space.relation == 0).all()


class TestRanking:
    def test_sorted_ascending(self):
        space = space_from({"a": [0.5], "b": [0.2], "c": [0.9], "z": [0.0]})
        ranked = rank_candidates(
            space, {EventPair("a", "z"), EventPair("b", "z"), EventPair("c", "z")})
        assert [p.cause for p, _ in ranked] == ["b", "a", "c"]

    def test_tie_breaks_lexicographic(self):
        space = space_from({"a": [1.0], "b": [1.0], "z": [0.0]})
        ranked = rank_candidates(space, {EventPair("b", "z"), EventPair("a", "z")})
        assert [p.cause for p, _ in ranked] == ["a", "b"]

    def test_scaling_preserves_order(self):
        rng = np.random.default_rng(9)
        entity = {f"l{i}": rng.normal(size=4) for i in range(8)}
        rel = rng.normal(size=4)
        space = space_from(entity, rel)
        doubled = space_from({k: 2 * v for k, v in space.entity.items()},
                             2 * rel)
        cands = {EventPair(f"l{i}", f"l{j}")
                 for i in range(4) for j in range(4, 8)}
        order_a = [p.key() for p, _ in rank_candidates(space, cands)]
        order_b = [p.key() for p, _ in rank_candidates(doubled, cands)]
        assert order_a == order_b

    def test_unembeddable_dropped(self):
        space = space_from({"a": [0.1], "z": [0.0]})
        ranked = rank_candidates(space, {EventPair("a", "z"), EventPair("ghost", "z")})
        assert len(ranked) == 1


class TestFilterTop:
    def test_ten_percent_of_twenty(self):
        ranked = [(EventPair(f"c{i:02d}", "e"), i * 0.1) for i in range(20)]
        kept = filter_top(ranked, 0.10)
        assert kept == {ranked[0][0], ranked[1][0]}

    def test_ceiling_of_half(self):
        ranked = [(EventPair(f"c{i}", "e"), float(i)) for i in range(5)]
        assert len(filter_top(ranked, 0.10)) == 1

    def test_full_fraction(self):
        ranked = [(EventPair(f"c{i}", "e"), float(i)) for i in range(5)]
        assert len(filter_top(ranked, 1.0)) == 5

    def test_bad_fraction(self):
        with pytest.raises(ConfigError):
            filter_top([], 0.0)


class TestPersistence:
    def test_round_trip_exact(self, tmp_path):
        pos, neg = toy_training_sets()
        space = train(pos, neg, MarginConfig(dim=6, epochs=5, seed=2))
        path = tmp_path / "emb.tsv"
        save_space(space, path)
        loaded = load_space(path)
        assert loaded.dim == space.dim
        assert (loaded.relation == space.relation).all()
        assert set(loaded.entity) == set(space.entity)
        for lemma in space.entity:
            assert (loaded.entity[lemma] == space.entity[lemma]).all()
