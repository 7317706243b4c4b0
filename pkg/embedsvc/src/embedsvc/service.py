"""HTTP embedding service.

Exposes a text encoder over two endpoints:

    GET  /health -> {"status": "ok", "model_id": ..., "dim": ...}
    POST /embed  {"texts": [...]} -> {"model_id": ..., "dim": ..., "vectors": [[...]]}

The encoder loads in a background thread at startup; both endpoints
answer 503 until it is ready. /embed rejects empty or over-cap batches
with 400 and non-string entries with 422. Every response carries an
X-API-Version header naming the protocol revision.
"""

from __future__ import annotations

import threading
from contextlib import asynccontextmanager
from dataclasses import dataclass
from typing import Callable

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .encoders import DEFAULT_SENTENCE_MODEL, Encoder, build_encoder

API_VERSION = "v1"
DEFAULT_BATCH_CAP = 256


@dataclass(frozen=True, slots=True)
class ServiceConfig:
    """Startup configuration for the service."""

    backend: str = "sentence"
    model_id: str | None = None
    batch_cap: int = DEFAULT_BATCH_CAP

    def __post_init__(self) -> None:
        if self.backend not in ("sentence", "hashing"):
            raise ValueError(f"unknown encoder backend {self.backend!r}")
        if self.batch_cap < 1:
            raise ValueError("batch_cap must be >= 1")

    @property
    def configured_model_id(self) -> str:
        if self.model_id is not None:
            return self.model_id
        return DEFAULT_SENTENCE_MODEL if self.backend == "sentence" \
            else "hashing-v1"


class EmbedRequest(BaseModel):
    texts: list[str]


def create_app(config: ServiceConfig | None = None,
               encoder_factory: Callable[[], Encoder] | None = None) -> FastAPI:
    """Build the application.

    encoder_factory overrides how the encoder is constructed; tests use
    it to inject stubs or block the load to observe the 503 window. The
    factory runs on a background thread, so a slow model download never
    stalls startup.
    """
    cfg = config if config is not None else ServiceConfig()
    factory = encoder_factory if encoder_factory is not None \
        else lambda: build_encoder(cfg.backend, cfg.model_id)

    state: dict[str, object] = {"encoder": None, "error": None}
    ready = threading.Event()
    infer_lock = threading.Lock()

    def load() -> None:
        try:
            state["encoder"] = factory()
        except Exception as exc:
            state["error"] = exc
        finally:
            ready.set()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        thread = threading.Thread(target=load, name="encoder-loader",
                                  daemon=True)
        thread.start()
        yield

    app = FastAPI(lifespan=lifespan, docs_url=None, redoc_url=None,
                  openapi_url=None)

    @app.middleware("http")
    async def stamp_api_version(request: Request, call_next) -> Response:
        response = await call_next(request)
        response.headers["X-API-Version"] = API_VERSION
        return response

    def unavailable() -> JSONResponse | None:
        if state["encoder"] is not None:
            return None
        if state["error"] is not None:
            return JSONResponse(
                status_code=503,
                content={"status": "error",
                         "detail": f"encoder failed to load: {state['error']}"},
            )
        return JSONResponse(
            status_code=503,
            content={"status": "loading",
                     "model_id": cfg.configured_model_id},
        )

    @app.get("/health")
    def health() -> JSONResponse:
        waiting = unavailable()
        if waiting is not None:
            return waiting
        encoder = state["encoder"]
        return JSONResponse({"status": "ok", "model_id": encoder.model_id,
                             "dim": encoder.dim})

    @app.post("/embed")
    def embed(body: EmbedRequest) -> JSONResponse:
        waiting = unavailable()
        if waiting is not None:
            return waiting
        if not body.texts:
            return JSONResponse(status_code=400,
                                content={"detail": "texts must be non-empty"})
        if len(body.texts) > cfg.batch_cap:
            return JSONResponse(
                status_code=400,
                content={"detail": f"batch of {len(body.texts)} exceeds "
                                   f"cap {cfg.batch_cap}"},
            )
        encoder = state["encoder"]
        with infer_lock:
            vectors = encoder.encode(body.texts)
        return JSONResponse({"model_id": encoder.model_id,
                             "dim": encoder.dim, "vectors": vectors})

    app.state.loader_ready = ready
    return app
