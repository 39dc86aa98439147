"""Transformer NSP scoring.

p_next is the softmax probability of the "is next sentence" class (index 0
of the NSP head's logits).  Inference is serialized behind a lock; batch
results stay order-aligned with the request.
"""

from __future__ import annotations

import threading
from typing import Protocol, Sequence

Pair = tuple[str, str]


class Scorer(Protocol):
    model_id: str

    def score_batch(self, pairs: Sequence[Pair]) -> list[float]: ...


class TransformerNspScorer:
    def __init__(self, model_id: str, device: str = "cpu", deterministic: bool = True):
        import torch
        from transformers import AutoTokenizer, BertForNextSentencePrediction

        if deterministic:
            torch.manual_seed(0)
        self.model_id = model_id
        self.tokenizer = AutoTokenizer.from_pretrained(model_id)
        self.model = BertForNextSentencePrediction.from_pretrained(model_id)
        self.model.eval()
        self.device = torch.device(
            "cuda" if device == "accelerator" and torch.cuda.is_available() else "cpu"
        )
        self.model.to(self.device)
        self._lock = threading.Lock()

    def score_batch(self, pairs: Sequence[Pair]) -> list[float]:
        if not pairs:
            return []
        import torch

        statements = [s for s, _ in pairs]
        responses = [r for _, r in pairs]
        with self._lock, torch.no_grad():
            encoded = self.tokenizer(
                statements,
                responses,
                return_tensors="pt",
                padding=True,
                truncation=True,
                max_length=512,
            ).to(self.device)
            logits = self.model(**encoded).logits
            probabilities = torch.softmax(logits, dim=-1)[:, 0]
        return [float(p) for p in probabilities]
