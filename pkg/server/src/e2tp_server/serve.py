"""HTTP service implementing the generation wire protocol.

POST /generate with {"inputs": [...], "max_new_tokens": int, "decoding":
"greedy"} returns {"outputs": [...]} order-aligned. The service answers 503
until the checkpoint is loaded, 400 on malformed bodies, and 413 when a batch
exceeds the configured cap. Requests are served one at a time from a single
model instance; greedy decoding keeps identical bodies yielding identical
responses.
"""

from __future__ import annotations

import threading
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .model import greedy_generate, load_checkpoint

DEFAULT_MAX_BATCH = 64


def create_app(model_dir: str, *, max_batch: int = DEFAULT_MAX_BATCH) -> FastAPI:
    state: dict = {"model": None, "tokenizer": None}
    ready = threading.Event()
    generate_lock = threading.Lock()

    def load() -> None:
        # checkpoint materialization must never overlap a generate call
        with generate_lock:
            model, tokenizer = load_checkpoint(model_dir)
            state["model"], state["tokenizer"] = model, tokenizer
        ready.set()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        threading.Thread(target=load, daemon=True).start()
        yield

    app = FastAPI(lifespan=lifespan)

    @app.get("/health")
    def health():
        return {"ready": ready.is_set()}

    @app.post("/generate")
    async def generate(request: Request):
        if not ready.is_set():
            return JSONResponse({"error": "model not ready"}, status_code=503)
        try:
            body = await request.json()
        except Exception:
            return JSONResponse({"error": "body is not valid JSON"}, status_code=400)
        if not isinstance(body, dict):
            return JSONResponse({"error": "body must be a JSON object"}, status_code=400)
        inputs = body.get("inputs")
        if not isinstance(inputs, list) or not inputs or not all(isinstance(x, str) for x in inputs):
            return JSONResponse({"error": "inputs must be a non-empty list of strings"}, status_code=400)
        max_new_tokens = body.get("max_new_tokens", 128)
        if not isinstance(max_new_tokens, int) or max_new_tokens < 1:
            return JSONResponse({"error": "max_new_tokens must be a positive integer"}, status_code=400)
        decoding = body.get("decoding", "greedy")
        if decoding != "greedy":
            return JSONResponse({"error": f"unsupported decoding {decoding!r}"}, status_code=400)
        if len(inputs) > max_batch:
            return JSONResponse(
                {"error": f"batch of {len(inputs)} exceeds the cap of {max_batch}"}, status_code=413
            )
        with generate_lock:
            outputs = greedy_generate(state["model"], state["tokenizer"], inputs, max_new_tokens)
        return {"outputs": outputs}

    return app


def serve(model_dir: str, port: int, host: str = "127.0.0.1", *, max_batch: int = DEFAULT_MAX_BATCH) -> None:
    """Run the service until interrupted."""
    import uvicorn

    uvicorn.run(create_app(model_dir, max_batch=max_batch), host=host, port=port, log_level="warning")
