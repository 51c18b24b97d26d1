"""HTTP front end for the evaluation arena.

JSON endpoints (all under ``/api/v1``):

* ``GET  /session/{annotator}/next-match`` — next blinded match, or an
  empty-queue marker.
* ``POST /annotations`` — submit Left/Right answers for a served match.
* ``GET  /leaderboard?criterion=&query_type=&genre=`` — raw and scaled ELO.
* ``GET  /iaa?criterion=&metric=`` — inter-annotator agreement report.
* ``GET  /audio/{clip_id}`` — WAV bytes for a blinded clip id
  (``{match_id}.left`` / ``{match_id}.right``).
* ``POST /admin/schedule`` — append a scheduling round.

The data directory comes from the ``ARENA_DATA_DIR`` environment variable
unless given explicitly. When a UI bundle directory is supplied (or
``ARENA_UI_DIR`` is set) it is served statically at the root path.
"""

from __future__ import annotations

import os
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import agreement
from .errors import (
    ArenaError,
    ConflictError,
    EmptySampleError,
    InvalidArgumentError,
    NotFoundError,
    UndefinedKappaError,
)
from .judgments import Criterion, QueryType
from .prompts import EvalQuery
from .ratings import EloConfig, leaderboard_rows
from .store import ArenaStore, ScheduleConfig

DATA_DIR_ENV = "ARENA_DATA_DIR"
UI_DIR_ENV = "ARENA_UI_DIR"


class AnnotationBody(BaseModel):
    match_id: str
    annotator_id: str
    answers: dict[str, str]
    timestamp_ms: int | None = None
    amendment: bool = False


class ScheduleBody(BaseModel):
    genre: str
    allowed_pairs: list[tuple[str, str]]
    queries_per_type: int
    phase: int
    annotators_per_match: int
    seed: int
    queries: list[dict] = Field(default_factory=list)


def _parse_criterion(token: str) -> Criterion:
    try:
        return Criterion.parse(token)
    except InvalidArgumentError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from None


def _parse_query_type(token: str | None) -> QueryType | None:
    if token is None or token == "" or token.lower() == "all":
        return None
    try:
        return QueryType.parse(token)
    except InvalidArgumentError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from None


def create_app(
    data_dir: str | Path | None = None, ui_dir: str | Path | None = None
) -> FastAPI:
    """Build the arena application over one data directory."""
    if data_dir is None:
        data_dir = os.environ.get(DATA_DIR_ENV)
    if data_dir is None:
        raise InvalidArgumentError(
            f"no data directory: pass data_dir or set {DATA_DIR_ENV}"
        )
    store = ArenaStore(data_dir)
    app = FastAPI(title="music-arena", version="0.1.0")
    app.state.store = store

    @app.exception_handler(ArenaError)
    async def _arena_error(request, exc: ArenaError):
        status = 400
        if isinstance(exc, NotFoundError):
            status = 404
        elif isinstance(exc, ConflictError):
            status = 409
        elif isinstance(exc, (InvalidArgumentError, EmptySampleError, UndefinedKappaError)):
            status = 422
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    @app.get("/api/v1/session/{annotator_id}/next-match")
    def next_match(annotator_id: str):
        view = store.next_match(annotator_id)
        if view is None:
            return {"match": None, "done": True}
        return {"match": view.to_json(), "done": False}

    @app.post("/api/v1/annotations", status_code=201)
    def submit_annotation(body: AnnotationBody):
        annotation = store.submit_left_right(
            match_id=body.match_id,
            annotator_id=body.annotator_id,
            answers=body.answers,
            timestamp_ms=body.timestamp_ms,
            amendment=body.amendment,
        )
        return {"status": "recorded", "match_id": annotation.match_id}

    @app.get("/api/v1/leaderboard")
    def leaderboard(
        criterion: str = Query(...),
        query_type: str | None = Query(None),
        genre: str | None = Query(None),
        k_factor: float = Query(15.0),
        initial_rating: float = Query(1500.0),
    ):
        crit = _parse_criterion(criterion)
        qtype = _parse_query_type(query_type)
        board = store.leaderboard(
            crit,
            query_type=qtype,
            genre=genre or None,
            cfg=EloConfig(k_factor=k_factor, initial_rating=initial_rating),
        )
        rows = leaderboard_rows(board)
        return {
            "criterion": crit.value,
            "query_type": qtype.value if qtype else "all",
            "genre": genre or "all",
            "rows": [
                {
                    "system": system,
                    "raw_elo": raw,
                    "scaled_elo": scaled,
                    "match_count": count,
                }
                for system, _, _, raw, scaled, count in rows
            ],
        }

    @app.get("/api/v1/iaa")
    def iaa(criterion: str = Query(...), metric: str = Query(agreement.DISTANCE)):
        crit = _parse_criterion(criterion)
        report = store.iaa_report(crit, metric)
        return {
            "criterion": report.criterion,
            "kind": report.kind,
            "p_o_mean": report.p_o_mean,
            "p_e": report.p_e,
            "kappa": report.kappa,
            "n_items": report.n_items,
            "n_excluded": report.n_excluded,
        }

    @app.get("/api/v1/audio/{clip_id}")
    def audio(clip_id: str):
        match_id, dot, side = clip_id.rpartition(".")
        if not dot:
            raise HTTPException(status_code=422, detail="clip id must be <match>.<side>")
        path = store.audio_path(match_id, side)
        if not path.exists():
            raise HTTPException(status_code=404, detail=f"no audio for clip {clip_id!r}")
        return FileResponse(path, media_type="audio/wav")

    @app.post("/api/v1/admin/schedule", status_code=201)
    def schedule(body: ScheduleBody):
        cfg = ScheduleConfig(
            genre=body.genre,
            allowed_pairs=tuple((a, b) for a, b in body.allowed_pairs),
            queries_per_type=body.queries_per_type,
            phase=body.phase,
            annotators_per_match=body.annotators_per_match,
        )
        queries = [EvalQuery.from_json(rec) for rec in body.queries]
        matches = store.schedule(cfg, queries, seed=body.seed)
        return {"scheduled": len(matches), "phase": body.phase}

    if ui_dir is None:
        ui_dir = os.environ.get(UI_DIR_ENV)
    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
