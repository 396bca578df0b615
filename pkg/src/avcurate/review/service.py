"""REST API for the review loop, plus static serving of the web UI bundle."""

from __future__ import annotations

from pathlib import Path
from typing import Literal

from fastapi import FastAPI, Header, HTTPException, Query
from fastapi.responses import PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel
import json

from .store import ReviewStore, UnknownSampleError, VerdictError


class VerdictBody(BaseModel):
    action: Literal["accept", "reject", "edit"]
    edited_text: str | None = None
    reviewer: str | None = None


class ImportBody(BaseModel):
    records: list[dict]


def create_app(store: ReviewStore, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="avcurate review service")

    @app.get("/stats")
    def stats() -> dict:
        return store.stats()

    @app.get("/items")
    def list_items(
        status: str | None = Query(default=None),
        page: int = Query(default=1, ge=1),
        page_size: int = Query(default=50, ge=1, le=500),
    ) -> dict:
        try:
            return store.list_items(status=status, page=page, page_size=page_size)
        except VerdictError as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.get("/items/{sample_id}")
    def get_item(sample_id: str) -> dict:
        try:
            return store.get(sample_id).to_dict()
        except UnknownSampleError:
            raise HTTPException(status_code=404, detail=f"unknown sample_id {sample_id!r}")

    @app.post("/items/{sample_id}/verdict")
    def verdict(
        sample_id: str,
        body: VerdictBody,
        x_reviewer: str | None = Header(default=None),
    ) -> dict:
        try:
            item = store.verdict(
                sample_id,
                body.action,
                edited_text=body.edited_text,
                reviewer=body.reviewer or x_reviewer,
            )
        except UnknownSampleError:
            raise HTTPException(status_code=404, detail=f"unknown sample_id {sample_id!r}")
        except VerdictError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return item.to_dict()

    @app.post("/import")
    def import_records(body: ImportBody) -> dict:
        return store.import_records(body.records)

    @app.get("/export", response_class=PlainTextResponse)
    def export(status: str = Query(default="accepted,edited")) -> str:
        statuses = tuple(s.strip() for s in status.split(",") if s.strip())
        rows = store.export(statuses)
        return "".join(json.dumps(r, ensure_ascii=False, separators=(",", ":")) + "\n" for r in rows)

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def serve(store_path: str | Path, port: int = 8777, host: str = "127.0.0.1",
          ui_dir: str | Path | None = None) -> None:
    import uvicorn

    app = create_app(ReviewStore(store_path), ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
