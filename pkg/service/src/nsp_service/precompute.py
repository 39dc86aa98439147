"""Batch score precompute: normalized dataset in, score file out.

Reads the pipeline's normalized dataset format (header record with
``schema: fluidity/dataset-v1`` and ``kind``), enumerates the documented
statement/response pairs, and writes the score-file format the pipeline's
file backend loads:

    {"schema": "fluidity/nsp-scores-v1", ...}                    (header)
    {"key": hex, "statement": str, "response": str, "p_next": float}

Pair enumeration contract: single-turn yields the (statement, response)
pair; multi-turn yields one pair per agent turn with the immediately
preceding utterance's text as statement ("" when the agent opens).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

from .keys import pair_key
from .scoring import Pair, Scorer

DATASET_SCHEMA = "fluidity/dataset-v1"
SCORE_FILE_SCHEMA = "fluidity/nsp-scores-v1"


def read_dataset_pairs(path: str | Path) -> list[Pair]:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("schema") != DATASET_SCHEMA:
            raise ValueError(f"{path}: not a {DATASET_SCHEMA} file")
        kind = header.get("kind")
        if kind not in ("single", "multi"):
            raise ValueError(f"{path}: unknown dataset kind {kind!r}")
        pairs: list[Pair] = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            if kind == "single":
                pairs.append((record["statement"], record["response"]))
            else:
                turns = record["turns"]
                for i, turn in enumerate(turns):
                    if turn["speaker"] == "agent":
                        previous = turns[i - 1]["text"] if i > 0 else ""
                        pairs.append((previous, turn["text"]))
    return pairs


def precompute(
    dataset_path: str | Path,
    output_path: str | Path,
    scorer: Scorer,
    batch_size: int = 64,
) -> int:
    """Score every pair in the dataset; returns the number of entries written.

    Pairs that canonicalize identically are scored once.  Distinct pairs
    hashing to the same key (which sha256 makes practically impossible)
    abort with an error rather than silently overwriting.
    """
    pairs = read_dataset_pairs(dataset_path)

    unique: dict[str, Pair] = {}
    for statement, response in pairs:
        key = pair_key(statement, response)
        if key in unique:
            prior = unique[key]
            same_canonical = (
                " ".join(prior[0].split()) == " ".join(statement.split())
                and " ".join(prior[1].split()) == " ".join(response.split())
            )
            if not same_canonical:
                raise ValueError(f"key collision on {key}")
            continue
        unique[key] = (statement, response)

    keys = list(unique)
    scores: dict[str, float] = {}
    for start in range(0, len(keys), batch_size):
        chunk = keys[start : start + batch_size]
        for key, p in zip(chunk, scorer.score_batch([unique[k] for k in chunk])):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"scorer produced p_next {p} outside [0, 1]")
            scores[key] = p

    header = {
        "schema": SCORE_FILE_SCHEMA,
        "entries": len(keys),
        "model": scorer.model_id,
    }
    lines = [json.dumps(header, ensure_ascii=False)]
    for key in keys:
        statement, response = unique[key]
        lines.append(
            json.dumps(
                {"key": key, "statement": statement, "response": response,
                 "p_next": scores[key]},
                ensure_ascii=False,
            )
        )
    Path(output_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return len(keys)
