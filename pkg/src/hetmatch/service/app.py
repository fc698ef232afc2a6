"""FastAPI application exposing the matcher and the judging loop."""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Query, Response
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from .. import simnet
from ..errors import ConfigError, EmptyDataset, HetmatchError, NotFound
from .schemas import (
    ConfigOut,
    DocumentOut,
    DocumentSummary,
    LabelAck,
    LabelIn,
    MatchResult,
    PairAssignmentOut,
    TrainReportOut,
    TrainRequest,
)
from .state import AppState, TrainingBusy


def _config_out(cfg) -> ConfigOut:
    return ConfigOut(**simnet.config_to_dict(cfg))


def create_app(state: AppState, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="hetmatch", version="0.1.0")
    app.state.matcher = state

    @app.exception_handler(HetmatchError)
    async def _domain_error(_request, exc: HetmatchError):
        if isinstance(exc, NotFound):
            code = 404
        elif isinstance(exc, EmptyDataset):
            code = 422
        elif isinstance(exc, ConfigError):
            code = 400
        else:
            code = 500
        return JSONResponse(status_code=code, content={"detail": str(exc)})

    @app.exception_handler(TrainingBusy)
    async def _busy(_request, exc: TrainingBusy):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.get("/api/match/{a_id}", response_model=list[MatchResult])
    def match(a_id: str, k: int = Query(default=3, ge=1)):
        return [
            MatchResult(b_id=b_id, score=score)
            for b_id, score in state.recommend(a_id, k)
        ]

    @app.get("/api/pairs/next", response_model=PairAssignmentOut)
    def next_pair(judge: str = Query(min_length=1)):
        assignment = state.next_pair(judge)
        if assignment is None:
            return Response(status_code=204)
        a_id, b_id, score = assignment
        return PairAssignmentOut(
            a_id=a_id,
            b_id=b_id,
            a_components=state.corpus_a.docs[a_id].components,
            b_components=state.corpus_b.docs[b_id].components,
            score=score,
        )

    @app.post("/api/labels", response_model=LabelAck, status_code=201)
    def submit_label(label: LabelIn):
        record = state.submit_label(label.judge, label.a_id, label.b_id, label.rating)
        return LabelAck(
            judge=record.judge_id,
            a_id=record.a_id,
            b_id=record.b_id,
            rating=record.rating,
            ts=record.timestamp,
        )

    @app.get("/api/labels")
    def list_labels():
        return PlainTextResponse(
            state.labels_text(), media_type="application/x-ndjson"
        )

    @app.get("/api/config", response_model=ConfigOut)
    def get_config():
        return _config_out(state.config)

    @app.post("/api/train", response_model=TrainReportOut)
    def run_training(request: TrainRequest):
        report = state.run_training(request.mode, request.params)
        return TrainReportOut(
            mode=report.mode,
            best_accuracy=report.best_accuracy,
            best_loss=report.best_loss,
            iterations=report.iterations,
            wall_time_s=report.wall_time_s,
            loss_trajectory=report.loss_trajectory,
            accuracy_trajectory=report.accuracy_trajectory,
            best_config=_config_out(report.best_config),
        )

    @app.get("/api/docs/{doc_id}", response_model=DocumentOut)
    def get_document(doc_id: str):
        doc = state.get_document(doc_id)
        return DocumentOut(id=doc.id, doctype=doc.doctype, components=doc.components)

    @app.get("/api/documents", response_model=list[DocumentSummary])
    def list_documents(side: str = Query(default="a", pattern="^[ab]$")):
        corpus = state.corpus_a if side == "a" else state.corpus_b
        out = []
        for doc_id in sorted(corpus.docs):
            doc = corpus.docs[doc_id]
            preview = doc.components.get("title") or next(
                iter(doc.components.values()), ""
            )
            out.append(
                DocumentSummary(id=doc.id, doctype=doc.doctype, preview=preview[:120])
            )
        return out

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    else:

        @app.get("/")
        def root():
            return {
                "service": "hetmatch",
                "endpoints": "/api/match/{a_id}, /api/pairs/next, /api/labels, "
                "/api/config, /api/train, /api/docs/{id}, /api/documents",
            }

    return app
