"""HTTP service exposing a fitted model for operator review and feedback.

Endpoints (all JSON, versioned under /api):

* ``GET /api/scores?from&to&smoothing``: aggregated and per-sensor residual
  series over a row range, per-timestamp convention (window ending at t).
* ``GET /api/window/{start}``: one window's full residual breakdown plus the
  raw sensor slice for plotting.
* ``POST /api/feedback``: apply an operator relabel; optimistic concurrency on
  the model version (409 on mismatch), 422 when the window is not longer than
  the pairing lag delta.
* ``POST /api/rollback``: make an earlier snapshot active.
* ``GET /api/model``: hyper-parameters, per-sensor set cardinalities, history.

Every response carries the model version it was computed under; readers never
observe a half-applied update because feedback application is serialized and
swaps the active model reference atomically.
"""

from __future__ import annotations

import logging
import threading
from collections import OrderedDict

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .frame import SensorFrame, apply_scaler
from .incremental import FeedbackEvent, ModelStore
from .residuals import ScoreResult, WindowSpec, score_frame, smooth_max

logger = logging.getLogger(__name__)


class FeedbackBody(BaseModel):
    window: tuple[int, int]
    verdict: str
    version: int
    zeta: float | None = None
    note: str = ""
    submitted_at: str = ""


class RollbackBody(BaseModel):
    version: int


class _ScoreCache:
    """Keeps the latest fully scored results, keyed by model version."""

    def __init__(self, maxsize: int = 4) -> None:
        self._entries: OrderedDict[int, ScoreResult] = OrderedDict()
        self._maxsize = maxsize
        self._lock = threading.Lock()

    def get(self, version: int) -> ScoreResult | None:
        with self._lock:
            if version in self._entries:
                self._entries.move_to_end(version)
                return self._entries[version]
        return None

    def put(self, version: int, result: ScoreResult) -> None:
        with self._lock:
            self._entries[version] = result
            self._entries.move_to_end(version)
            while len(self._entries) > self._maxsize:
                self._entries.popitem(last=False)


def create_app(
    store: ModelStore,
    frame: SensorFrame,
    windows: WindowSpec,
    eps: float,
    zero_width: str = "raise",
) -> FastAPI:
    """Build the service around a snapshot store and a loaded raw frame."""

    app = FastAPI(title="qwatch feedback service")
    cache = _ScoreCache()
    write_lock = threading.Lock()

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors())})

    def scores_for_active() -> tuple[int, ScoreResult]:
        model = store.active
        cached = cache.get(model.version)
        if cached is None:
            scaled = apply_scaler(frame, model.scaler)
            cached = score_frame(
                model,
                scaled,
                WindowSpec(windows.n_pred, 1),
                eps,
                zero_width=zero_width,
            )
            cache.put(model.version, cached)
            logger.info("scored frame under version %d", model.version)
        return model.version, cached

    @app.get("/api/scores")
    def get_scores(
        from_row: int = Query(0, alias="from"),
        to_row: int | None = Query(None, alias="to"),
        smoothing: int = 1,
    ):
        version, result = scores_for_active()
        length = len(frame)
        to_row = length if to_row is None else min(to_row, length)
        if not 0 <= from_row < to_row:
            raise HTTPException(422, f"bad range [{from_row}, {to_row})")
        if smoothing < 1:
            raise HTTPException(422, "smoothing must be >= 1")
        aggregated = result.per_timestamp(length)
        if smoothing > 1:
            aggregated = smooth_max(aggregated, smoothing)
        sensors = result.sensor_series(length)
        sl = slice(from_row, to_row)
        return {
            "version": version,
            "from": from_row,
            "to": to_row,
            "n_pred": windows.n_pred,
            "smoothing": smoothing,
            "timestamps": frame.timestamps[sl].tolist(),
            "aggregated": aggregated[sl].tolist(),
            "labels": frame.labels[sl].tolist() if frame.labels is not None else None,
            "per_sensor": {
                name: {kind: series[sl].tolist() for kind, series in kinds.items()}
                for name, kinds in sensors.items()
            },
        }

    @app.get("/api/window/{start}")
    def get_window(start: int):
        version, result = scores_for_active()
        starts = result.window_starts
        pos = int(np.searchsorted(starts, start))
        if pos >= len(starts) or starts[pos] != start:
            raise HTTPException(422, f"no window starts at row {start}")
        report = result[pos]
        model = store.active
        norm = result.normalizers
        nb = np.maximum(norm.max_bound, 1e-12)
        nc = np.maximum(norm.max_conf, 1e-12)
        normalized = {
            "r_trans": report.r_trans.tolist(),
            "r_bound": (report.r_bound / nb).tolist(),
            "r_conf": (report.r_conf / nc).tolist(),
        }
        kinds = ("r_trans", "r_bound", "r_conf")
        per_kind = np.array([normalized[k] for k in kinds])  # (3, n_sensors)
        k_best, s_best = np.unravel_index(np.argmax(per_kind), per_kind.shape)
        sl = slice(start, start + windows.n_pred)
        return {
            "version": version,
            "window_start": start,
            "n_pred": windows.n_pred,
            "sensors": list(report.sensors),
            "r_trans": report.r_trans.tolist(),
            "r_bound": report.r_bound.tolist(),
            "r_conf": report.r_conf.tolist(),
            "normalized": normalized,
            "aggregated": report.aggregated,
            "dominant": {
                "sensor": report.sensors[int(s_best)],
                "residual": kinds[int(k_best)],
                "value": float(per_kind[k_best, s_best]),
            },
            "delta": model.hyper.delta,
            "slice": {
                "timestamps": frame.timestamps[sl].tolist(),
                "values": {
                    name: frame.values[sl, i].tolist()
                    for i, name in enumerate(frame.sensor_names)
                },
                "labels": frame.labels[sl].tolist() if frame.labels is not None else None,
            },
        }

    @app.post("/api/feedback")
    def post_feedback(body: FeedbackBody):
        with write_lock:
            model = store.active
            if body.version != model.version:
                raise HTTPException(
                    409,
                    f"feedback submitted against version {body.version}, "
                    f"active is {model.version}",
                )
            start, end = body.window
            if end - start <= model.hyper.delta:
                raise HTTPException(
                    422,
                    f"window of length {end - start} must exceed delta = "
                    f"{model.hyper.delta}",
                )
            try:
                event = FeedbackEvent(
                    window=(start, end),
                    verdict=body.verdict,
                    zeta=body.zeta,
                    note=body.note,
                    submitted_at=body.submitted_at,
                )
            except ValueError as exc:
                raise HTTPException(400, str(exc)) from None
            updated = store.apply(frame, event)
        return {"new_version": updated.version}

    @app.post("/api/rollback")
    def post_rollback(body: RollbackBody):
        with write_lock:
            try:
                restored = store.rollback(body.version)
            except Exception as exc:
                raise HTTPException(400, str(exc)) from None
        return {"active_version": restored.version}

    @app.get("/api/model")
    def get_model():
        model = store.active
        return {
            "version": model.version,
            "versions": store.versions(),
            "hyper": {
                "n_q": model.hyper.n_q,
                "delta": model.hyper.delta,
                "eta": model.hyper.eta,
                "n_w": model.hyper.n_w,
            },
            "n_pred": windows.n_pred,
            "eps": eps,
            "train_range": list(model.train_range),
            "frame_length": len(frame),
            "sensors": {
                name: {
                    "transitions": len(normality.transitions),
                    "boxes": len(normality.bounds),
                    "representative_vectors": int(
                        sum(len(r) for r in normality.representatives.values())
                    ),
                }
                for name, normality in zip(model.sensor_names, model.sensors)
            },
            "journal": store.history()[1:],
        }

    return app


def mount_static(app: FastAPI, directory) -> None:
    """Host built UI assets (if any) next to the API."""
    from fastapi.staticfiles import StaticFiles

    app.mount("/", StaticFiles(directory=str(directory), html=True), name="ui")
