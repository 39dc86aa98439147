import json
import subprocess
import sys
from pathlib import Path

import pytest

from nsp_service.precompute import precompute, read_dataset_pairs

pytest.importorskip("fluidity", reason="round-trip checks need the pipeline package")


def normalize_fixture(csv_path, tmp_path) -> Path:
    """Produce a normalized dataset via the pipeline CLI (external interface)."""
    out = tmp_path / "dataset.jsonl"
    result = subprocess.run(
        [sys.executable, "-m", "fluidity", "ingest", "--input", str(csv_path),
         "--kind", "single", "--output", str(out)],
        capture_output=True, text=True,
    )
    assert result.returncode == 0, result.stderr
    return out


def normalize_multi(jsonl_path, tmp_path) -> Path:
    out = tmp_path / "dataset_multi.jsonl"
    result = subprocess.run(
        [sys.executable, "-m", "fluidity", "ingest", "--input", str(jsonl_path),
         "--kind", "multi", "--output", str(out)],
        capture_output=True, text=True,
    )
    assert result.returncode == 0, result.stderr
    return out


class TestReadDatasetPairs:
    def test_single_turn_pairs(self, single_turn_csv, tmp_path):
        dataset = normalize_fixture(single_turn_csv, tmp_path)
        pairs = read_dataset_pairs(dataset)
        assert len(pairs) == 4
        assert pairs[0][0].startswith("ahahah")

    def test_multi_turn_pair_enumeration_matches_pipeline(self, multi_turn_jsonl, tmp_path):
        from fluidity.corpus import load_multi_turn
        from fluidity.features import scoring_pairs

        dataset = normalize_multi(multi_turn_jsonl, tmp_path)
        ours = read_dataset_pairs(dataset)
        expected = []
        for conversation in load_multi_turn(multi_turn_jsonl):
            expected.extend(scoring_pairs(conversation))
        assert ours == expected


class TestPrecompute:
    def test_round_trip_zero_misses(self, single_turn_csv, tmp_path, fake_scorer):
        from fluidity.corpus import load_single_turn
        from fluidity.nsp import load_score_file

        dataset = normalize_fixture(single_turn_csv, tmp_path)
        scores = tmp_path / "scores.jsonl"
        count = precompute(dataset, scores, fake_scorer)
        assert count == 4

        backend = load_score_file(scores)
        for item in load_single_turn(single_turn_csv):
            result = backend.score(item.statement, item.response)  # no misses
            assert 0.0 <= result.probability <= 1.0

    def test_full_feature_extraction_has_no_misses(self, single_turn_csv, tmp_path, fake_scorer):
        dataset = normalize_fixture(single_turn_csv, tmp_path)
        scores = tmp_path / "scores.jsonl"
        precompute(dataset, scores, fake_scorer)
        result = subprocess.run(
            [sys.executable, "-m", "fluidity", "features", "--dataset", str(dataset),
             "--output", str(tmp_path / "features.jsonl"), "--nsp", f"file:{scores}"],
            capture_output=True, text=True,
        )
        assert result.returncode == 0, result.stderr

    def test_multi_turn_round_trip(self, multi_turn_jsonl, tmp_path, fake_scorer):
        dataset = normalize_multi(multi_turn_jsonl, tmp_path)
        scores = tmp_path / "scores.jsonl"
        precompute(dataset, scores, fake_scorer)
        result = subprocess.run(
            [sys.executable, "-m", "fluidity", "features", "--dataset", str(dataset),
             "--output", str(tmp_path / "features.jsonl"), "--nsp", f"file:{scores}"],
            capture_output=True, text=True,
        )
        assert result.returncode == 0, result.stderr

    def test_deterministic_rerun_byte_identical(self, single_turn_csv, tmp_path, fake_scorer):
        dataset = normalize_fixture(single_turn_csv, tmp_path)
        scores = tmp_path / "scores.jsonl"
        precompute(dataset, scores, fake_scorer)
        first = scores.read_bytes()
        precompute(dataset, scores, fake_scorer)
        assert scores.read_bytes() == first

    def test_empty_dataset_writes_header_only(self, tmp_path, fake_scorer):
        dataset = tmp_path / "empty.jsonl"
        dataset.write_text(json.dumps({"schema": "fluidity/dataset-v1", "kind": "single"}) + "\n")
        scores = tmp_path / "scores.jsonl"
        count = precompute(dataset, scores, fake_scorer)
        assert count == 0
        lines = scores.read_text().strip().splitlines()
        assert len(lines) == 1
        header = json.loads(lines[0])
        assert header["schema"] == "fluidity/nsp-scores-v1"
        assert header["entries"] == 0

    def test_duplicate_pairs_deduped(self, tmp_path, fake_scorer):
        dataset = tmp_path / "dup.jsonl"
        rows = [
            {"schema": "fluidity/dataset-v1", "kind": "single"},
            {"id": "0", "statement": "a", "response": "b", "ratings": [3] * 5,
             "mean_rating": 3.0},
            {"id": "1", "statement": "a", "response": "b", "ratings": [4] * 5,
             "mean_rating": 4.0},
        ]
        dataset.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        scores = tmp_path / "scores.jsonl"
        assert precompute(dataset, scores, fake_scorer) == 1
