"""Detection metrics and the benchmark evaluation protocol.

Scores are compared against per-timestamp binary labels. The ROC area uses the
rank (Mann-Whitney) formulation with ties counted 1/2; the partial area is
restricted to a maximum false-positive rate and rescaled with the standardized
(McClish) map so a random classifier scores 0.5 and a perfect one 1.0; F1 is
maximized over all distinct-score thresholds (predict positive at score >=
threshold), a convention echoed in the emitted tables.
"""

from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .frame import SensorFrame
from .model import HyperParams, fit
from .residuals import WindowSpec, score_frame, smooth_max

logger = logging.getLogger(__name__)


def _check_classes(scores: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be equal-length 1D arrays")
    n_pos = int((labels == 1).sum())
    if n_pos == 0 or n_pos == len(labels):
        raise ValueError("both classes must be present")
    return scores, labels


def roc_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Probability a random positive outscores a random negative (ties 1/2)."""
    scores, labels = _check_classes(scores, labels)
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    ranks = rankdata(scores)
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def _roc_points(scores: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """ROC step points from the strictest threshold down, starting at (0, 0)."""
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    tps = np.cumsum(sorted_labels == 1)
    fps = np.arange(1, len(scores) + 1) - tps
    # keep the last index of each distinct-score run
    last = np.r_[sorted_scores[1:] != sorted_scores[:-1], True]
    n_pos = tps[-1]
    n_neg = fps[-1]
    fpr = np.r_[0.0, fps[last] / n_neg]
    tpr = np.r_[0.0, tps[last] / n_pos]
    return fpr, tpr


def partial_auc(
    scores: np.ndarray,
    labels: np.ndarray,
    max_fpr: float = 0.1,
    standardize: bool = True,
) -> float:
    """Trapezoidal ROC area restricted to fpr <= max_fpr, rescaled so that
    random = 0.5 and perfect = 1.0 (set standardize=False for the raw area)."""
    if not 0.0 < max_fpr <= 1.0:
        raise ValueError(f"max_fpr must lie in ]0, 1], got {max_fpr}")
    scores, labels = _check_classes(scores, labels)
    fpr, tpr = _roc_points(scores, labels)
    area = 0.0
    for k in range(1, len(fpr)):
        f0, f1 = fpr[k - 1], fpr[k]
        t0, t1 = tpr[k - 1], tpr[k]
        if f1 <= max_fpr:
            area += (f1 - f0) * (t0 + t1) / 2.0
        else:
            if f0 < max_fpr:
                frac = (max_fpr - f0) / (f1 - f0)
                t_cut = t0 + frac * (t1 - t0)
                area += (max_fpr - f0) * (t0 + t_cut) / 2.0
            break
    if not standardize:
        return float(area)
    a_min = max_fpr * max_fpr / 2.0
    return float(0.5 * (1.0 + (area - a_min) / (max_fpr - a_min)))


def best_f1(scores: np.ndarray, labels: np.ndarray) -> tuple[float, float]:
    """Max F1 over all distinct-score thresholds; returns (f1, threshold)."""
    scores, labels = _check_classes(scores, labels)
    thresholds = np.unique(scores)  # ascending
    sorted_scores = np.sort(scores)
    sorted_pos = np.sort(scores[labels == 1])
    n_pos = len(sorted_pos)
    # counts of samples with score >= threshold
    total_ge = len(scores) - np.searchsorted(sorted_scores, thresholds, side="left")
    pos_ge = n_pos - np.searchsorted(sorted_pos, thresholds, side="left")
    tp = pos_ge.astype(float)
    fp = total_ge - pos_ge
    fn = n_pos - pos_ge
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(tp + fp > 0, tp / (tp + fp), 0.0)
        recall = np.where(tp + fn > 0, tp / (tp + fn), 0.0)
        f1 = np.where(tp > 0, 2 * precision * recall / (precision + recall), 0.0)
    best = int(np.argmax(f1))
    return float(f1[best]), float(thresholds[best])


@dataclass(frozen=True)
class MetricReport:
    """Metrics of one scored series at one smoothing window."""

    smoothing: int
    roc_auc: float
    pauc: float
    f1: float
    threshold: float
    config: dict = field(default_factory=dict)


def metrics_for_series(
    scores: np.ndarray,
    labels: np.ndarray,
    smoothing: int = 1,
    config: dict | None = None,
) -> MetricReport:
    smoothed = smooth_max(scores, smoothing) if smoothing > 1 else np.asarray(scores, float)
    f1, threshold = best_f1(smoothed, labels)
    return MetricReport(
        smoothing=smoothing,
        roc_auc=roc_auc(smoothed, labels),
        pauc=partial_auc(smoothed, labels),
        f1=f1,
        threshold=threshold,
        config=dict(config or {}),
    )


def evaluate_scores(
    scores: np.ndarray,
    labels: np.ndarray,
    smoothing: list[int] | None = None,
    config: dict | None = None,
) -> list[MetricReport]:
    """Metrics on the raw series and on each smoothed variant."""
    windows = [1] + [s for s in (smoothing or []) if s > 1]
    seen: list[int] = []
    reports = []
    for s in windows:
        if s in seen:
            continue
        seen.append(s)
        reports.append(metrics_for_series(scores, labels, s, config))
    return reports


def evaluate_run(
    model,
    frame: SensorFrame,
    windows: WindowSpec,
    smoothing: list[int] | None = None,
    eps: float = 1.0,
    rtrans_norm: str = "eq20",
    zero_width: str = "raise",
) -> list[MetricReport]:
    """Score a labeled raw frame end-to-end and report metrics.

    The per-timestamp series inherits, at each timestamp, the aggregated score
    of the stride-1 window ending there. Default smoothing sweep: 500, 1000,
    5000 on top of the raw series.
    """
    if frame.labels is None:
        raise ValueError("frame carries no labels")
    if smoothing is None:
        smoothing = [500, 1000, 5000]
    scaled = SensorFrame(
        frame.sensor_names,
        frame.timestamps,
        (frame.values - model.scaler.center) / model.scaler.spread,
        frame.labels,
        frame.intervals,
    )
    result = score_frame(
        model,
        scaled,
        WindowSpec(windows.n_pred, 1),
        eps,
        rtrans_norm=rtrans_norm,
        zero_width=zero_width,
    )
    series = result.per_timestamp(len(frame))
    config = {"n_pred": windows.n_pred, "eps": eps}
    return evaluate_scores(series, frame.labels, smoothing, config)


# ---------------------------------------------------------------------------
# hyper-parameter sweep


def _run_grid_point(args: tuple) -> dict:
    index, point, frame, train_range, defaults = args
    point = dict(point)
    if "epsilon" in point:  # accept the CLI flag spelling in grid files
        point["eps"] = point.pop("epsilon")
    merged = {**defaults, **point}
    row = {"index": index, **{k: merged[k] for k in sorted(merged)}}
    started = time.perf_counter()
    try:
        hyper = HyperParams(
            n_q=int(merged["n_q"]),
            delta=int(merged["delta"]),
            eta=float(merged["eta"]),
            n_w=int(merged["n_w"]) if merged.get("n_w") else None,
        )
        model = fit(frame, train_range, hyper)
        reports = evaluate_run(
            model,
            frame,
            WindowSpec(int(merged["n_pred"])),
            smoothing=[],
            eps=float(merged["eps"]),
        )
        raw = reports[0]
        row.update(
            {
                "status": "ok",
                "roc_auc": raw.roc_auc,
                "pauc": raw.pauc,
                "f1": raw.f1,
                "error": "",
            }
        )
    except Exception as exc:  # a failed grid point is recorded, not fatal
        logger.warning("grid point %d failed: %s", index, exc)
        row.update(
            {"status": "failed", "roc_auc": "", "pauc": "", "f1": "", "error": str(exc)}
        )
    row["runtime_s"] = time.perf_counter() - started
    return row


def sweep(
    grid: list[dict],
    frame: SensorFrame,
    train_range: tuple[int, int],
    defaults: dict | None = None,
    out: str | Path | None = None,
    jobs: int = 1,
) -> list[dict]:
    """Fit + score + evaluate every grid point; returns one row per point.

    Rows are ordered by grid index regardless of execution order; failed
    points carry status "failed" and an error message. When `out` is given the
    rows are written as CSV.
    """
    if not grid:
        raise ValueError("empty grid")
    base = {"n_q": 8, "delta": 20, "eta": 0.95, "eps": 1.0, "n_pred": 100, "n_w": None}
    base.update(defaults or {})
    tasks = [(i, point, frame, train_range, base) for i, point in enumerate(grid)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_grid_point, tasks))
    else:
        rows = [_run_grid_point(task) for task in tasks]
    rows.sort(key=lambda r: r["index"])
    if out is not None:
        write_sweep_csv(rows, out)
    return rows


def write_sweep_csv(rows: list[dict], path: str | Path) -> None:
    columns = list(rows[0].keys())
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def summarize_sweep(rows: list[dict]) -> str:
    """Mean +/- std (max) text summary of the successful sweep rows."""
    ok = [r for r in rows if r.get("status") == "ok"]
    lines = [f"{len(ok)}/{len(rows)} grid points succeeded"]
    for metric in ("roc_auc", "pauc", "f1"):
        vals = np.array([float(r[metric]) for r in ok]) if ok else np.array([])
        if len(vals) == 0:
            lines.append(f"{metric}: n/a")
        else:
            lines.append(
                f"{metric}: {vals.mean():.3f} +/- {vals.std():.3f} ({vals.max():.3f})"
            )
    return "\n".join(lines)
