"""Checks that need a real pretrained NSP checkpoint.

These skip when no checkpoint can be loaded (offline sandboxes without a
model cache); point NSP_SERVICE_TEST_MODEL at a local checkpoint directory
or a cached hub id to enable them.
"""

import os

import pytest

MODEL_ID = os.environ.get("NSP_SERVICE_TEST_MODEL", "bert-base-uncased")

COHERENT = ("i can bake you a cake for your birthday", "Oh, I would really appreciate that.")
SHUFFLED = ("i can bake you a cake for your birthday", "that. appreciate would really Oh, I")


@pytest.fixture(scope="module")
def scorer():
    from nsp_service.scoring import TransformerNspScorer

    try:
        return TransformerNspScorer(MODEL_ID, deterministic=True)
    except Exception as e:
        pytest.skip(f"pretrained checkpoint {MODEL_ID!r} unavailable in this environment: {e}")


def test_coherent_pair_beats_shuffled_control(scorer):
    p_coherent, p_shuffled = scorer.score_batch([COHERENT, SHUFFLED])
    assert 0.0 <= p_coherent <= 1.0 and 0.0 <= p_shuffled <= 1.0
    assert p_coherent > p_shuffled


def test_deterministic_repeat(scorer):
    first = scorer.score_batch([COHERENT])
    second = scorer.score_batch([COHERENT])
    assert first == second
