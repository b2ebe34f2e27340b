import pytest

from knowdis.annotator import LabeledSentence, SentenceRecord
from knowdis.lexicon import EventPair


def make_instance(lemmas, cause_idx, effect_idx, label="causal",
                  doc_id="d0", sent_id=0, provenance="gold",
                  pair_source="gold", tokens=None):
    """Labeled sentence straight from a lemma list (tokens default to lemmas)."""
    tokens = list(tokens) if tokens is not None else list(lemmas)
    sentence = SentenceRecord(doc_id, sent_id, " ".join(tokens),
                              tokens, list(lemmas))
    pair = EventPair(lemmas[cause_idx], lemmas[effect_idx], provenance, label)
    return LabeledSentence(
        sentence=sentence, cause_idx=cause_idx, effect_idx=effect_idx,
        pair=pair, pair_source=pair_source,
        orientation="cause_first" if cause_idx < effect_idx else "effect_first")


@pytest.fixture
def tmp_fixture_dir(tmp_path):
    return tmp_path
