"""HTTP review service over a curation store.

JSON over HTTP with an explicit schema version header on every response.
Handlers run concurrently but every mutation goes through the store's lock,
so decisions apply exactly once; the second decision on an id gets a 409.
A built review UI can be mounted as static files under /ui.
"""

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field, ValidationError

from .errors import AlreadyDecided, UnknownDialogue, ValidationFailed
from .loop import RATING_DIMENSIONS, CurationStore

SCHEMA_VERSION = "1"
SCHEMA_HEADER = "X-Schema-Version"


class RatingsBody(BaseModel):
    informativeness: int = Field(ge=0, le=3)
    understanding: int = Field(ge=0, le=3)
    helpfulness: int = Field(ge=0, le=3)
    consistency: int = Field(ge=0, le=3)
    coherence: int = Field(ge=0, le=3)

    def as_dict(self) -> dict[str, int]:
        return {dim: getattr(self, dim) for dim in RATING_DIMENSIONS}


class DecisionBody(BaseModel):
    action: str
    reviewer: str = "anonymous"
    edited: dict | None = None
    reason: str | None = None
    ratings: RatingsBody | None = None


class RateBody(BaseModel):
    reviewer: str = "anonymous"
    ratings: RatingsBody


def create_app(store: CurationStore, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="escorpus review service")

    @app.middleware("http")
    async def add_schema_header(request: Request, call_next):
        response = await call_next(request)
        response.headers[SCHEMA_HEADER] = SCHEMA_VERSION
        return response

    def error(status: int, message: str, **extra) -> JSONResponse:
        return JSONResponse({"error": message, **extra}, status_code=status)

    @app.get("/queue")
    def queue(request: Request):
        params = request.query_params
        try:
            limit = int(params["limit"]) if "limit" in params else None
            offset = int(params.get("offset", "0"))
        except ValueError:
            return error(400, "limit and offset must be integers")
        if (limit is not None and limit < 0) or offset < 0:
            return error(400, "limit and offset must be non-negative")
        scenario = params.get("scenario")
        items = store.pending_items(scenario)
        total = len(items)
        window = items[offset: offset + limit if limit is not None else None]
        return {
            "total": total,
            "offset": offset,
            "items": [
                {
                    "id": dialogue_id,
                    "scenario": item.scenario,
                    "enqueued_seq": item.enqueued_seq,
                    "issues": item.issues,
                    "duplicate_score": item.duplicate_score,
                    "dialogue": item.record,
                }
                for dialogue_id, item in window
            ],
        }

    @app.get("/dialogues/{dialogue_id}")
    def dialogue_state(dialogue_id: str):
        with store.lock:
            status = store.statuses.get(dialogue_id)
            if status is None:
                return error(404, f"unknown dialogue {dialogue_id!r}")
            item = store.staged.get(dialogue_id)
            dialogue = store.get_dialogue(dialogue_id)
            record = item.record if item is not None else None
            if record is None and dialogue is not None:
                from .corpus import dialogue_to_record

                record = dialogue_to_record(dialogue)
            decision = store.decisions.get(dialogue_id)
        return {"id": dialogue_id, "status": status.value,
                "dialogue": record, "decision": decision}

    @app.post("/dialogues/{dialogue_id}/decision")
    async def decide(dialogue_id: str, request: Request):
        try:
            body = DecisionBody.model_validate(await request.json())
        except (ValidationError, ValueError) as exc:
            return error(422, f"malformed decision body: {exc}")
        if body.action not in ("Approve", "Reject", "ApproveWithEdits"):
            return error(400, f"unknown action {body.action!r}")
        if body.action == "ApproveWithEdits" and body.edited is None:
            return error(422, "ApproveWithEdits requires an edited dialogue")
        try:
            status = store.decide(
                dialogue_id,
                body.action,
                reviewer=body.reviewer,
                edited_record=body.edited,
                reason=body.reason,
                ratings=body.ratings.as_dict() if body.ratings else None,
            )
        except UnknownDialogue:
            return error(404, f"unknown dialogue {dialogue_id!r}")
        except AlreadyDecided as exc:
            return error(409, str(exc))
        except ValidationFailed as exc:
            issues = []
            if exc.report is not None:
                issues = [
                    {"code": i.code, "severity": i.severity.value,
                     "message": i.message, "location": i.location}
                    for i in exc.report.issues
                ]
            return error(422, str(exc), issues=issues)
        except ValueError as exc:
            return error(422, str(exc))
        return {"id": dialogue_id, "status": status.value}

    @app.post("/dialogues/{dialogue_id}/ratings")
    async def rate(dialogue_id: str, request: Request):
        try:
            body = RateBody.model_validate(await request.json())
        except (ValidationError, ValueError) as exc:
            return error(422, f"malformed ratings body: {exc}")
        try:
            store.rate(dialogue_id, body.reviewer, body.ratings.as_dict())
        except UnknownDialogue:
            return error(404, f"unknown dialogue {dialogue_id!r}")
        return {"id": dialogue_id, "rated": True}

    @app.get("/stats")
    def stats():
        return store.review_stats()

    @app.get("/strategies")
    def strategies():
        return {
            "strategies": [
                {"name": s.name, "abbreviation": s.abbreviation,
                 "definition": s.definition, "example": s.example}
                for s in store.strategies
            ]
        }

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def run_server(store: CurationStore, port: int = 8321,
               host: str = "127.0.0.1", ui_dir: str | Path | None = None) -> None:
    import uvicorn

    uvicorn.run(create_app(store, ui_dir), host=host, port=port, log_level="warning")
