"""HTTP surface: POST /api/query, GET /api/health, and static serving of
the built web UI.

Request bodies are validated by hand so the error contract stays exact:
400 for malformed input or an unknown strategy, 422 for k < 1, 503 with a
stage name when a provider or generator is unreachable.
"""

from __future__ import annotations

import logging
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .engine import Engine, empty_health
from .errors import EmbeddingFailure, GenerationFailure, ProviderMismatch, ZeroVector
from .retrieval import STRATEGIES

logger = logging.getLogger(__name__)


def _error(status: int, message: str, stage: str | None = None) -> JSONResponse:
    body: dict = {"error": message}
    if stage is not None:
        body["stage"] = stage
    return JSONResponse(body, status_code=status)


def create_app(engine: Engine | None, static_dir: str | Path | None = None) -> FastAPI:
    """Build the service; ``engine`` may be None (health reports no_index)."""
    app = FastAPI(title="labrag", docs_url=None, redoc_url=None)
    app.state.engine = engine

    @app.get("/api/health")
    def health() -> JSONResponse:
        eng: Engine | None = app.state.engine
        return JSONResponse(eng.health() if eng is not None else empty_health())

    @app.post("/api/query")
    async def query(request: Request) -> JSONResponse:
        eng: Engine | None = app.state.engine
        try:
            body = await request.json()
        except Exception:
            return _error(400, "request body is not valid JSON")
        if not isinstance(body, dict):
            return _error(400, "request body must be a JSON object")

        question = body.get("question")
        if not isinstance(question, str) or not question.strip():
            return _error(400, "field 'question' must be a non-empty string")

        strategy = body.get("strategy")
        if strategy is not None:
            if not isinstance(strategy, str) or strategy not in STRATEGIES:
                return _error(400, f"unknown strategy {strategy!r}; expected one of {list(STRATEGIES)}")

        k = body.get("k")
        if k is not None:
            if isinstance(k, bool) or not isinstance(k, int):
                return _error(400, "field 'k' must be an integer")
            if k < 1:
                return _error(422, "field 'k' must be >= 1")

        generate = body.get("generate")
        if generate is not None and not isinstance(generate, bool):
            return _error(400, "field 'generate' must be a boolean")

        if eng is None:
            return _error(503, "no index loaded", stage="index")
        try:
            payload = eng.query(question, strategy=strategy, k=k, generate=generate)
        except (EmbeddingFailure, ProviderMismatch) as exc:
            return _error(503, str(exc), stage="embed")
        except GenerationFailure as exc:
            return _error(503, str(exc), stage="generate")
        except ZeroVector as exc:
            return _error(400, str(exc))
        return JSONResponse(payload)

    if static_dir:
        static_path = Path(static_dir)
        if static_path.is_dir():
            app.mount("/", StaticFiles(directory=str(static_path), html=True), name="ui")
        else:
            logger.warning("static dir %s does not exist; UI not mounted", static_path)
    return app
