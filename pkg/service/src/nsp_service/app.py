"""HTTP surface: POST /v1/nsp and GET /v1/health.

Wire format (matching the pipeline's remote-backend protocol):

    POST /v1/nsp  {"pairs": [{"statement": str, "response": str}, ...]}
        -> 200    {"results": [{"p_next": float}, ...]}   (order-aligned)
        -> 413    when the batch exceeds the configured maximum
    GET /v1/health -> 200
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .config import ServiceConfig
from .scoring import Scorer, TransformerNspScorer


class PairIn(BaseModel):
    statement: str
    response: str


class ScoreRequest(BaseModel):
    pairs: list[PairIn]


class ScoreOut(BaseModel):
    p_next: float


class ScoreResponse(BaseModel):
    results: list[ScoreOut]


def create_app(config: ServiceConfig, scorer: Scorer | None = None) -> FastAPI:
    if scorer is None:
        scorer = TransformerNspScorer(
            config.model, device=config.device, deterministic=config.deterministic
        )

    app = FastAPI(title="nsp-service")
    app.state.config = config
    app.state.scorer = scorer

    @app.get("/v1/health")
    def health() -> dict:
        return {"status": "ok", "model": scorer.model_id}

    @app.post("/v1/nsp", response_model=ScoreResponse)
    def score(request: ScoreRequest) -> ScoreResponse:
        if len(request.pairs) > config.max_batch:
            raise HTTPException(
                status_code=413,
                detail=f"batch of {len(request.pairs)} exceeds max_batch={config.max_batch}",
            )
        probabilities = scorer.score_batch(
            [(pair.statement, pair.response) for pair in request.pairs]
        )
        return ScoreResponse(results=[ScoreOut(p_next=p) for p in probabilities])

    return app
