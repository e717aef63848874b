"""HTTP/JSON API over the review store."""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .review import HumanDecision, ItemStatus, ReviewError, ReviewStore

__all__ = ["create_app", "serve"]

# HTTP status per error code; anything unlisted is a 400.
_HTTP_STATUS = {
    "UNKNOWN_ITEM": 404,
    "UNKNOWN_TABLE": 404,
    "NOT_CLAIM_HOLDER": 409,
    "ALREADY_CLAIMED": 409,
    "NOT_ESCALATED": 409,
    "NOT_EXPERT": 403,
}


class ClaimBody(BaseModel):
    annotator_id: str


class LabelBody(BaseModel):
    annotator_id: str
    decision: str


class ResolveBody(BaseModel):
    expert_id: str
    decision: str


def _decision(value: str) -> HumanDecision:
    try:
        return HumanDecision(value)
    except ValueError:
        raise ReviewError("BAD_DECISION", f"decision must be one of SOE, NON_SOE, UNKNOWN; got {value!r}")


def create_app(store: ReviewStore, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="review-service")

    @app.exception_handler(ReviewError)
    async def review_error_handler(request: Request, exc: ReviewError):
        return JSONResponse(
            status_code=_HTTP_STATUS.get(exc.code, 400),
            content={"code": exc.code, "message": str(exc)},
        )

    @app.get("/queue")
    def get_queue(status: str | None = None):
        status_filter = None
        if status is not None:
            try:
                status_filter = ItemStatus(status)
            except ValueError:
                raise ReviewError("BAD_STATUS", f"unknown status {status!r}")
        return {"items": [item.to_record() for item in store.queue(status_filter)]}

    @app.get("/stats")
    def get_stats():
        return store.stats()

    @app.get("/export/human-labels")
    def export_labels():
        return {"labels": store.export_human_labels()}

    @app.get("/items/{table_id}")
    def get_item(table_id: str):
        return store.get(table_id).to_record()

    @app.post("/items/{table_id}/claim")
    def claim_item(table_id: str, body: ClaimBody):
        item = store.claim(body.annotator_id, table_id)
        return item.to_record()

    @app.post("/items/{table_id}/label")
    def label_item(table_id: str, body: LabelBody):
        item = store.submit_label(body.annotator_id, table_id, _decision(body.decision))
        return item.to_record()

    @app.post("/items/{table_id}/resolve")
    def resolve_item(table_id: str, body: ResolveBody):
        item = store.expert_resolve(body.expert_id, table_id, _decision(body.decision))
        return item.to_record()

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def serve(store: ReviewStore, host: str = "127.0.0.1", port: int = 8321,
          ui_dir: str | Path | None = None) -> None:
    import uvicorn

    uvicorn.run(create_app(store, ui_dir=ui_dir), host=host, port=port, log_level="warning")
