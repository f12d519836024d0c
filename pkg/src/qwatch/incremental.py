"""Operator-feedback model updates.

Two directions exist. A `normal` verdict on a window widens the model: its
transitions join the known set, bounds are widened by componentwise min/max,
and its (greedily filtered) configuration vectors join the representative sets,
which are then re-filtered so the pairwise low-correlation invariant survives
the union. An `anomalous` verdict shrinks the model: stored representatives
whose absolute correlation with the window's filtered configurations reaches
the tolerance `zeta` are forgotten, bounds of the touched transitions are
recomputed from the surviving representatives, and transitions whose
representative set empties are dropped entirely.

The scaler and quantizers are frozen: updates touch only the normality
parameter sets. `ModelStore` adds snapshot persistence, an append-only journal
and deterministic replay on top of the pure update functions.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import SchemaError
from .frame import SensorFrame
from .model import (
    NormalityModel,
    SensorNormality,
    TransitionPair,
    code_to_pair,
    configuration_matrix,
    greedy_low_correlation_filter,
    load_model,
    max_abs_corr_to_set,
    save_model,
    to_dict,
    transition_codes,
)
from .quantize import quantize_series

logger = logging.getLogger(__name__)

VERDICTS = ("normal", "anomalous")


@dataclass(frozen=True)
class FeedbackEvent:
    """One operator relabel: a window, a verdict, and for `anomalous` the
    correlation tolerance zeta in ]0, 1[."""

    window: tuple[int, int]
    verdict: str
    zeta: float | None = None
    note: str = ""
    submitted_at: str = ""

    def __post_init__(self) -> None:
        if self.verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}, got {self.verdict!r}")
        if self.verdict == "anomalous":
            if self.zeta is None or not 0.0 < self.zeta < 1.0:
                raise ValueError(
                    f"anomalous feedback needs zeta in ]0, 1[, got {self.zeta}"
                )
        elif self.zeta is not None:
            raise ValueError("zeta is only meaningful for anomalous feedback")
        s, e = self.window
        if e <= s:
            raise ValueError(f"empty feedback window {self.window}")


def _window_sets(
    model: NormalityModel, frame: SensorFrame, t_new: tuple[int, int], sensor: int
) -> tuple[set[TransitionPair], dict[TransitionPair, np.ndarray]]:
    """Transitions visited in [s, e) and, per transition, the configuration
    matrix of its timestamps with defined vectors (chronological)."""
    s, e = t_new
    delta = model.hyper.delta
    n_q = model.hyper.n_q
    scaled = (frame.values - model.scaler.center) / model.scaler.spread
    levels = quantize_series(model.quantizers[sensor], scaled[s:e, sensor])
    codes = transition_codes(levels, delta, n_q)
    stamps = np.arange(s, e - delta)
    visited = {code_to_pair(c, n_q) for c in np.unique(codes)}
    config = configuration_matrix(scaled, sensor, delta)
    usable = stamps >= delta - 1
    members: dict[TransitionPair, np.ndarray] = {}
    u_codes = codes[usable]
    u_stamps = stamps[usable]
    order = np.argsort(u_codes, kind="stable")
    u_codes = u_codes[order]
    u_stamps = u_stamps[order]
    starts = np.flatnonzero(np.r_[True, u_codes[1:] != u_codes[:-1]]) if len(u_codes) else []
    for g, start in enumerate(starts):
        stop = starts[g + 1] if g + 1 < len(starts) else len(u_codes)
        members[code_to_pair(u_codes[start], n_q)] = config[u_stamps[start:stop]]
    return visited, members


def _validate_t_new(model: NormalityModel, frame: SensorFrame, t_new: tuple[int, int]) -> None:
    s, e = t_new
    if not 0 <= s < e <= len(frame):
        raise ValueError(f"window {t_new} outside frame of length {len(frame)}")
    if e - s <= model.hyper.delta:
        raise ValueError(
            f"feedback window of length {e - s} must exceed delta = {model.hyper.delta}"
        )


def il_increase(
    model: NormalityModel,
    frame: SensorFrame,
    t_new: tuple[int, int],
    new_version: int | None = None,
) -> NormalityModel:
    """Widen the normality parameters with a window relabeled as normal."""
    _validate_t_new(model, frame, t_new)
    eta = model.hyper.eta
    updated_sensors = []
    for i, normality in enumerate(model.sensors):
        visited, members = _window_sets(model, frame, t_new, i)
        transitions = frozenset(normality.transitions | visited)
        bounds = dict(normality.bounds)
        reps = dict(normality.representatives)
        for pair, block in members.items():
            new_lo = block.min(axis=0)
            new_hi = block.max(axis=0)
            if pair in bounds:
                old_lo, old_hi = bounds[pair]
                new_lo = np.minimum(old_lo, new_lo)
                new_hi = np.maximum(old_hi, new_hi)
            new_lo.setflags(write=False)
            new_hi.setflags(write=False)
            bounds[pair] = (new_lo, new_hi)
            fresh = greedy_low_correlation_filter(block, eta)
            if pair in reps:
                merged = np.vstack([reps[pair], fresh])
                fresh = greedy_low_correlation_filter(merged, eta)
            fresh.setflags(write=False)
            reps[pair] = fresh
        updated_sensors.append(SensorNormality(transitions, bounds, reps))
    version = model.version + 1 if new_version is None else new_version
    return replace(model, sensors=tuple(updated_sensors), version=version)


def il_reduce(
    model: NormalityModel,
    frame: SensorFrame,
    t_new: tuple[int, int],
    zeta: float,
    new_version: int | None = None,
    against: str = "filtered",
) -> NormalityModel:
    """Shrink the normality parameters after an undetected-anomaly relabel.

    `against` selects what stored representatives are correlated with: the
    window's greedily filtered configuration sets ("filtered", the default) or
    the raw per-transition configuration sets ("raw").

    Transitions seen only in the window are never memorized; transitions whose
    stored representative set empties are dropped from all three parameter
    sets. Transitions that are known but carry no stored representatives (their
    only training visits predate the first defined configuration vector) are
    left untouched.
    """
    if not 0.0 < zeta < 1.0:
        raise ValueError(f"zeta must lie in ]0, 1[, got {zeta}")
    if against not in ("filtered", "raw"):
        raise ValueError(f"against must be 'filtered' or 'raw', got {against!r}")
    _validate_t_new(model, frame, t_new)
    eta = model.hyper.eta
    updated_sensors = []
    for i, normality in enumerate(model.sensors):
        _, members = _window_sets(model, frame, t_new, i)
        transitions = set(normality.transitions)
        bounds = dict(normality.bounds)
        reps = dict(normality.representatives)
        for pair, block in members.items():
            if pair not in reps:
                continue
            probe = greedy_low_correlation_filter(block, eta) if against == "filtered" else block
            stored = reps[pair]
            keep = max_abs_corr_to_set(stored, probe) < zeta
            if keep.all():
                continue
            if not keep.any():
                transitions.discard(pair)
                del reps[pair]
                bounds.pop(pair, None)
                continue
            surviving = stored[keep].copy()
            surviving.setflags(write=False)
            reps[pair] = surviving
            lo = surviving.min(axis=0)
            hi = surviving.max(axis=0)
            lo.setflags(write=False)
            hi.setflags(write=False)
            bounds[pair] = (lo, hi)
        updated_sensors.append(SensorNormality(frozenset(transitions), bounds, reps))
    version = model.version + 1 if new_version is None else new_version
    return replace(model, sensors=tuple(updated_sensors), version=version)


def apply_feedback(
    model: NormalityModel,
    frame: SensorFrame,
    event: FeedbackEvent,
    new_version: int | None = None,
) -> NormalityModel:
    """Dispatch one feedback event to the matching update."""
    if event.verdict == "normal":
        return il_increase(model, frame, event.window, new_version=new_version)
    return il_reduce(model, frame, event.window, event.zeta, new_version=new_version)


# ---------------------------------------------------------------------------
# snapshot store and journal


class ModelStore:
    """Versioned snapshots plus an append-only feedback journal.

    Layout inside `state_dir`: one `model-v<N>.json` snapshot per version and a
    `journal.jsonl` with one record per feedback or rollback. The active
    version can move backward on rollback; fresh versions always take the next
    unused number, so the counter increases across the whole history.
    """

    def __init__(self, state_dir: str | Path) -> None:
        self.state_dir = Path(state_dir)
        self.state_dir.mkdir(parents=True, exist_ok=True)
        self._active: NormalityModel | None = None

    # -- paths ---------------------------------------------------------------

    def snapshot_path(self, version: int) -> Path:
        return self.state_dir / f"model-v{version}.json"

    @property
    def journal_path(self) -> Path:
        return self.state_dir / "journal.jsonl"

    # -- state ---------------------------------------------------------------

    def versions(self) -> list[int]:
        return sorted(
            int(p.stem.split("-v")[1]) for p in self.state_dir.glob("model-v*.json")
        )

    def initialize(self, model: NormalityModel) -> None:
        """Store the freshly fitted model as the active snapshot."""
        save_model(model, self.snapshot_path(model.version))
        self._active = model

    @property
    def active(self) -> NormalityModel:
        if self._active is None:
            versions = self.versions()
            if not versions:
                raise SchemaError(f"{self.state_dir}: no snapshots")
            active_version = versions[-1]
            for record in self._journal_records():
                if record["type"] == "rollback":
                    active_version = record["target_version"]
                else:
                    active_version = record["result_version"]
            self._active = load_model(self.snapshot_path(active_version))
        return self._active

    def _next_version(self) -> int:
        versions = self.versions()
        return (versions[-1] + 1) if versions else 1

    def _journal_records(self) -> list[dict]:
        if not self.journal_path.exists():
            return []
        records = []
        for line in self.journal_path.read_text().splitlines():
            if line.strip():
                records.append(json.loads(line))
        return records

    def _append_journal(self, record: dict) -> None:
        with self.journal_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    # -- operations ------------------------------------------------------------

    def apply(self, frame: SensorFrame, event: FeedbackEvent) -> NormalityModel:
        """Apply feedback to the active model; persist snapshot and journal."""
        current = self.active
        version = self._next_version()
        updated = apply_feedback(current, frame, event, new_version=version)
        save_model(updated, self.snapshot_path(version))
        self._append_journal(
            {
                "seq": len(self._journal_records()) + 1,
                "type": "feedback",
                "event": {
                    "window": list(event.window),
                    "verdict": event.verdict,
                    "zeta": event.zeta,
                    "note": event.note,
                    "submitted_at": event.submitted_at,
                },
                "base_version": current.version,
                "result_version": version,
            }
        )
        self._active = updated
        logger.info(
            "feedback %s on window %s: version %d -> %d",
            event.verdict,
            event.window,
            current.version,
            version,
        )
        return updated

    def rollback(self, version: int) -> NormalityModel:
        """Make an earlier snapshot the active model."""
        path = self.snapshot_path(version)
        if not path.exists():
            raise SchemaError(f"no snapshot for version {version}")
        self._append_journal(
            {
                "seq": len(self._journal_records()) + 1,
                "type": "rollback",
                "target_version": version,
            }
        )
        self._active = load_model(path)
        return self._active

    def replay(self, frame: SensorFrame) -> NormalityModel:
        """Recompute the active model from the version-1 snapshot and journal."""
        base = load_model(self.snapshot_path(1))
        produced: dict[int, NormalityModel] = {1: base}
        current = base
        for record in self._journal_records():
            if record["type"] == "rollback":
                target = record["target_version"]
                if target not in produced:
                    raise SchemaError(f"journal rolls back to unseen version {target}")
                current = produced[target]
                continue
            payload = record["event"]
            event = FeedbackEvent(
                window=tuple(payload["window"]),
                verdict=payload["verdict"],
                zeta=payload["zeta"],
                note=payload.get("note", ""),
                submitted_at=payload.get("submitted_at", ""),
            )
            if record["base_version"] != current.version:
                raise SchemaError(
                    f"journal record {record['seq']} applied to version "
                    f"{record['base_version']}, replay reached {current.version}"
                )
            current = apply_feedback(
                current, frame, event, new_version=record["result_version"]
            )
            produced[current.version] = current
        return current

    def history(self) -> list[dict]:
        """Journal records plus the list of stored snapshot versions."""
        return [
            {"versions": self.versions(), "active": self.active.version},
            *self._journal_records(),
        ]


def models_equal(a: NormalityModel, b: NormalityModel) -> bool:
    """Structural equality including version and hyper-parameters."""
    return to_dict(a) == to_dict(b)
