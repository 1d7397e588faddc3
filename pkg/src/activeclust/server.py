"""Annotation HTTP service: exposes the pending label queue, accepts label
submissions, and reports run progress to the browser UI."""

from __future__ import annotations

import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .errors import ContractError
from .oracles import QueueOracle


class AnnotationSession:
    """Shared state between the engine thread and the HTTP handlers."""

    def __init__(self, queue: QueueOracle, n_star: int, strategy: str, dataset: str):
        self.queue = queue
        self._lock = threading.Lock()
        self._status = {
            "iteration": 0,
            "labeled_total": 0,
            "budget": n_star,
            "discovered": 0,
            "labeling_stopped": False,
            "relations": [],
            "history": [],
        }
        self.strategy = strategy
        self.dataset = dataset
        self.done = False
        self.error: str | None = None

    def update(self, payload: dict) -> None:
        with self._lock:
            self._status = payload

    def status(self) -> dict:
        with self._lock:
            out = dict(self._status)
        out.update({
            "strategy": self.strategy,
            "dataset": self.dataset,
            "done": self.done,
            "pending": len(self.queue.pending_view()),
            "error": self.error,
        })
        return out

    def relations_view(self) -> list[dict]:
        """Engine-confirmed relations plus names submitted but not yet folded in."""
        status = self.status()
        seen = {r["name"] for r in status["relations"]}
        out = list(status["relations"])
        with self.queue._cond:
            fresh = sorted(set(self.queue._answers.values()) - seen)
        out.extend({"name": name, "first_seen": status["iteration"]} for name in fresh)
        return out


def create_app(session: AnnotationSession, frontend_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="activeclust annotation API")

    @app.get("/api/session")
    def get_session():
        return session.status()

    @app.get("/api/pending")
    def get_pending():
        return {"pending": session.queue.pending_view()}

    @app.post("/api/label")
    async def post_label(request: Request):
        try:
            body = await request.json()
        except Exception:
            return JSONResponse({"error": "body must be JSON"}, status_code=400)
        if not isinstance(body, dict) or "id" not in body or "relation" not in body:
            return JSONResponse(
                {"error": "body must be {\"id\": int, \"relation\": str}"}, status_code=400
            )
        try:
            instance_id = int(body["id"])
            relation = str(body["relation"])
        except (TypeError, ValueError):
            return JSONResponse({"error": "id must be an int and relation a string"}, status_code=400)
        try:
            status = session.queue.submit(instance_id, relation)
        except ContractError as exc:
            return JSONResponse({"error": str(exc)}, status_code=409)
        return {"status": status, "id": instance_id, "relation": relation.strip()}

    @app.get("/api/relations")
    def get_relations():
        return {"relations": session.relations_view()}

    @app.get("/api/metrics")
    def get_metrics():
        return {"history": session.status()["history"]}

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True), name="ui")
    return app


def run_with_server(
    config,
    ds,
    strategy: str,
    out_dir,
    bind: str = "127.0.0.1:8000",
    frontend_dir: str | Path | None = None,
    queue_timeout: float | None = None,
    resume_from: str | Path | None = None,
):
    """Drive the engine in a worker thread while serving the annotation API."""
    import uvicorn

    from .engine import run_loop

    queue = QueueOracle(timeout=queue_timeout)
    session = AnnotationSession(queue, config.N_star, strategy, ds.name)
    app = create_app(session, frontend_dir)

    host, _, port = bind.partition(":")
    server = uvicorn.Server(uvicorn.Config(app, host=host or "127.0.0.1",
                                           port=int(port or 8000), log_level="warning"))
    holder: dict = {}

    def work():
        try:
            holder["result"] = run_loop(
                config, ds, queue, strategy=strategy, out_dir=out_dir,
                status_cb=session.update, resume_from=resume_from,
            )
        except Exception as exc:  # surface engine failures to the UI, then stop
            session.error = str(exc)
        finally:
            session.done = True
            server.should_exit = True

    worker = threading.Thread(target=work, daemon=True)
    worker.start()
    server.run()
    worker.join()
    return holder.get("result")
