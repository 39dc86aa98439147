import hashlib
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parents[2]


class FakeScorer:
    """Deterministic stand-in: a stable per-pair pseudo-probability."""

    model_id = "fake-scorer"

    def score_batch(self, pairs):
        out = []
        for statement, response in pairs:
            digest = hashlib.sha256(
                (statement + "\x00" + response).encode("utf-8")
            ).hexdigest()
            out.append(0.01 + (int(digest[:8], 16) % 9_800) / 10_000)
        return out


@pytest.fixture
def fake_scorer():
    return FakeScorer()


@pytest.fixture
def shared_key_fixture() -> Path:
    return REPO_ROOT / "tests" / "data" / "nsp_keys.json"


@pytest.fixture
def single_turn_csv() -> Path:
    return REPO_ROOT / "tests" / "data" / "single_turn_sample.csv"


@pytest.fixture
def multi_turn_jsonl() -> Path:
    return REPO_ROOT / "tests" / "data" / "multi_turn_sample.jsonl"
