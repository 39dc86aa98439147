import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def single_turn_csv() -> Path:
    return DATA_DIR / "single_turn_sample.csv"


@pytest.fixture
def multi_turn_jsonl() -> Path:
    return DATA_DIR / "multi_turn_sample.jsonl"
