"""HTTP layer of the listening-test service.

All state lives in ExperimentStore; endpoints serialize access through one
lock (per-participant traffic is sequential by protocol anyway). Workbench
errors map to 404/409/422 with a JSON body naming the error class.
"""

import threading

from fastapi import Body, FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse

from ..errors import (
    AlreadyPlayed,
    DuplicateVote,
    InvalidVote,
    NotEnrolled,
    NotPlayedYet,
    OutOfOrder,
    OutOfRange,
    SeevalError,
    ValidationError,
)
from .store import ExperimentStore

_STATUS = {
    ValidationError: 422,
    InvalidVote: 422,
    OutOfRange: 422,
    NotEnrolled: 404,
    AlreadyPlayed: 409,
    OutOfOrder: 409,
    NotPlayedYet: 409,
    DuplicateVote: 409,
}


def create_app(data_dir) -> FastAPI:
    app = FastAPI(title="listening-test service")
    store = ExperimentStore(data_dir)
    lock = threading.RLock()
    app.state.store = store

    @app.exception_handler(SeevalError)
    async def _handle(request: Request, exc: SeevalError):
        status = _STATUS.get(type(exc), 500)
        payload = {"error": type(exc).__name__, "detail": str(exc)}
        if isinstance(exc, ValidationError):
            payload["violations"] = exc.violations
        return JSONResponse(status_code=status, content=payload)

    @app.post("/experiments", status_code=201)
    def create_experiment(definition: dict = Body(...)):
        with lock:
            experiment_id = store.create_experiment(definition)
        return {"experiment_id": experiment_id}

    @app.post("/experiments/{experiment_id}/enroll")
    def enroll(experiment_id: str):
        with lock:
            return store.enroll(experiment_id)

    @app.get("/participants/{token}/next")
    def next_presentation(token: str):
        with lock:
            return store.next_presentation(token)

    @app.post("/participants/{token}/played")
    def mark_played(token: str, body: dict = Body(...)):
        with lock:
            return store.mark_played(token, str(body.get("presentation_ref", "")))

    @app.post("/participants/{token}/vote")
    def submit_vote(token: str, body: dict = Body(...)):
        with lock:
            return store.submit_vote(
                token, str(body.get("presentation_ref", "")), body.get("vote")
            )

    @app.post("/participants/{token}/level")
    def set_level(token: str, body: dict = Body(...)):
        offset = body.get("offset_db")
        if not isinstance(offset, (int, float)) or isinstance(offset, bool):
            raise OutOfRange(f"offset_db must be a number, got {offset!r}")
        with lock:
            return store.set_level(token, float(offset))

    @app.get("/experiments/{experiment_id}/export")
    def export(experiment_id: str):
        with lock:
            return store.export(experiment_id)

    @app.get("/audio/{ref}")
    def audio(ref: str):
        with lock:
            path = store.fetch_audio(ref)
        return FileResponse(path, media_type="audio/wav")

    return app
