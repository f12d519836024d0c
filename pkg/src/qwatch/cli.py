"""Command-line pipeline: generate, fit, score, feedback, evaluate, sweep, serve.

Every command is a thin wrapper over the library with explicit paths and a
`--seed` for all randomness. A config file (INI, one section per command,
key = value) may supply defaults; explicit flags override it. Validation
problems exit with code 1, runtime failures with code 2, both with a
machine-readable JSON error on stderr. Set QW_LOG=DEBUG|INFO|WARNING for
logging verbosity.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import evaluate as ev
from .errors import QwatchError, SchemaError
from .frame import apply_scaler, load_csv, save_csv
from .incremental import FeedbackEvent, ModelStore, apply_feedback
from .model import HyperParams, fit, load_model, save_model
from .residuals import WindowSpec, load_scores_csv, score_frame
from .simulate import EtcConfig, LorentzConfig, config_metadata, generate_etc, generate_lorentz

logger = logging.getLogger("qwatch")


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as validation errors (exit 1)."""

    def error(self, message: str):
        raise ValueError(message)

# dest -> caster, for config-file values (everything else stays a string)
_CASTS = {
    "seed": int,
    "train_start": int,
    "train_end": int,
    "n_q": int,
    "delta": int,
    "eta": float,
    "n_w": int,
    "epsilon": float,
    "n_pred": int,
    "stride": int,
    "zeta": float,
    "jobs": int,
    "port": int,
    "steps_per_interval": int,
    "run_seconds": float,
    "warmup_steps": int,
    "fault_factor": float,
    "smoothing": str,
}


def _setup_logging() -> None:
    level = os.environ.get("QW_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _fail(kind: str, exc: BaseException, code: int) -> int:
    payload = {"error": type(exc).__name__, "kind": kind, "message": str(exc)}
    print(json.dumps(payload), file=sys.stderr)
    return code


def _parse_smoothing(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _require(args: argparse.Namespace, *names: str) -> None:
    for name in names:
        if getattr(args, name) is None:
            flag = "--" + name.replace("_", "-")
            raise ValueError(f"the following arguments are required: {flag}")


def _apply_config(parser: argparse.ArgumentParser, argv: list[str], command: str) -> argparse.Namespace:
    """Two-pass parse: config-file values become defaults, flags override."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    if known.config:
        cfg = configparser.ConfigParser()
        read = cfg.read(known.config)
        if not read:
            raise FileNotFoundError(known.config)
        if cfg.has_section(command):
            defaults = {}
            for key, value in cfg.items(command):
                dest = key.replace("-", "_")
                cast = _CASTS.get(dest, str)
                defaults[dest] = cast(value)
            parser.set_defaults(**defaults)
    return parser.parse_args(argv)


# ---------------------------------------------------------------------------
# commands


def cmd_generate(argv: list[str]) -> int:
    parser = _Parser(prog="qwatch generate")
    parser.add_argument("benchmark", choices=["lorentz", "etc"])
    parser.add_argument("--config", help="INI config file")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", help="output CSV path")
    parser.add_argument("--steps-per-interval", type=int, default=None,
                        help="samples per interval (lorentz)")
    parser.add_argument("--warmup-steps", type=int, default=None, help="lorentz warm-up")
    parser.add_argument("--run-seconds", type=float, default=None,
                        help="seconds per run (etc)")
    parser.add_argument("--fault-factor", type=float, default=None,
                        help="detuning factor for etc faults")
    args = _apply_config(parser, argv, "generate")
    _require(args, "out")
    if args.benchmark == "lorentz":
        kwargs = {}
        if args.steps_per_interval is not None:
            kwargs["steps_per_interval"] = args.steps_per_interval
        if args.warmup_steps is not None:
            kwargs["warmup_steps"] = args.warmup_steps
        config = LorentzConfig(**kwargs)
        frame = generate_lorentz(config, seed=args.seed)
    else:
        kwargs = {}
        if args.run_seconds is not None:
            kwargs["run_seconds"] = args.run_seconds
        if args.fault_factor is not None:
            kwargs["fault_factor"] = args.fault_factor
        config = EtcConfig(**kwargs)
        frame = generate_etc(config, seed=args.seed)
    save_csv(frame, args.out, metadata={
        "benchmark": args.benchmark,
        "seed": args.seed,
        "config": config_metadata(config),
    })
    print(f"wrote {len(frame)} rows x {frame.n_sensors} sensors to {args.out}")
    return 0


def cmd_fit(argv: list[str]) -> int:
    parser = _Parser(prog="qwatch fit")
    parser.add_argument("--config")
    parser.add_argument("--data")
    parser.add_argument("--train-start", type=int, default=0)
    parser.add_argument("--train-end", type=int)
    parser.add_argument("--n-q", type=int, default=8, help="quantization levels")
    parser.add_argument("--delta", type=int, default=20, help="transition pairing lag")
    parser.add_argument("--eta", type=float, default=0.95,
                        help="representative correlation cutoff, in ]0, 1[")
    parser.add_argument("--n-w", type=int, default=None,
                        help="optional K-Means cap on representatives per transition")
    parser.add_argument("--scaler", choices=["standard", "minmax"], default="standard")
    parser.add_argument("--bounds", choices=["minmax", "percentile"], default="minmax")
    parser.add_argument("--out")
    args = _apply_config(parser, argv, "fit")
    _require(args, "data", "train_end", "out")
    frame = load_csv(args.data)
    hyper = HyperParams(n_q=args.n_q, delta=args.delta, eta=args.eta, n_w=args.n_w)
    model = fit(frame, (args.train_start, args.train_end), hyper,
                scaler_kind=args.scaler, bounds_mode=args.bounds)
    save_model(model, args.out)
    print(f"fit version {model.version} on rows [{args.train_start}, {args.train_end}) "
          f"-> {args.out}")
    return 0


def cmd_score(argv: list[str]) -> int:
    parser = _Parser(prog="qwatch score")
    parser.add_argument("--config")
    parser.add_argument("--model")
    parser.add_argument("--data")
    parser.add_argument("--n-pred", type=int, default=100, help="window length")
    parser.add_argument("--stride", type=int, default=1)
    parser.add_argument("--epsilon", type=float, default=1.0,
                        help="bound-distance tolerance")
    parser.add_argument("--rtrans-norm", choices=["eq20", "raw_count"], default="eq20")
    parser.add_argument("--zero-width", choices=["raise", "skip"], default="raise")
    parser.add_argument("--out")
    args = _apply_config(parser, argv, "score")
    _require(args, "model", "data", "out")
    model = load_model(args.model)
    frame = load_csv(args.data)
    scaled = apply_scaler(frame, model.scaler)
    result = score_frame(model, scaled, WindowSpec(args.n_pred, args.stride),
                         eps=args.epsilon, rtrans_norm=args.rtrans_norm,
                         zero_width=args.zero_width)
    result.to_csv(args.out)
    print(f"scored {len(result)} windows -> {args.out}")
    return 0


def cmd_feedback(argv: list[str]) -> int:
    parser = _Parser(prog="qwatch feedback")
    parser.add_argument("--config")
    parser.add_argument("--model", help="model snapshot (single-shot mode)")
    parser.add_argument("--data")
    parser.add_argument("--event", help="JSON file with window/verdict/zeta/note")
    parser.add_argument("--state-dir", help="snapshot store directory (journaled mode)")
    parser.add_argument("--replay", action="store_true",
                        help="replay the journal from version 1 and verify")
    parser.add_argument("--out", help="updated snapshot path (single-shot mode)")
    args = _apply_config(parser, argv, "feedback")
    _require(args, "data")
    frame = load_csv(args.data)
    if args.state_dir:
        store = ModelStore(args.state_dir)
        if args.replay:
            replayed = store.replay(frame)
            active = store.active
            if replayed != active:
                raise QwatchError("journal replay does not reproduce the active model")
            print(f"replay ok: version {active.version}")
            return 0
        if not args.event:
            raise ValueError("--event is required unless --replay is given")
        event = _load_event(args.event)
        updated = store.apply(frame, event)
        print(f"version {updated.version} active in {args.state_dir}")
        return 0
    if not (args.model and args.event and args.out):
        raise ValueError("single-shot mode needs --model, --event and --out")
    model = load_model(args.model)
    event = _load_event(args.event)
    updated = apply_feedback(model, frame, event)
    save_model(updated, args.out)
    print(f"version {updated.version} -> {args.out}")
    return 0


def _load_event(path: str) -> FeedbackEvent:
    payload = json.loads(Path(path).read_text())
    try:
        return FeedbackEvent(
            window=tuple(payload["window"]),
            verdict=payload["verdict"],
            zeta=payload.get("zeta"),
            note=payload.get("note", ""),
            submitted_at=payload.get("submitted_at", ""),
        )
    except KeyError as exc:
        raise SchemaError(f"{path}: missing field {exc}") from None


def cmd_evaluate(argv: list[str]) -> int:
    parser = _Parser(prog="qwatch evaluate")
    parser.add_argument("--config")
    parser.add_argument("--data", help="labeled CSV")
    parser.add_argument("--model", help="model snapshot (end-to-end mode)")
    parser.add_argument("--scores", help="score CSV or per-timestamp CSV (external)")
    parser.add_argument("--n-pred", type=int, default=100)
    parser.add_argument("--epsilon", type=float, default=1.0)
    parser.add_argument("--zero-width", choices=["raise", "skip"], default="raise")
    parser.add_argument("--smoothing", default="500,1000,5000",
                        help="comma-separated smoothing windows")
    parser.add_argument("--out", help="metrics CSV path")
    args = _apply_config(parser, argv, "evaluate")
    _require(args, "data")
    frame = load_csv(args.data)
    if frame.labels is None:
        raise ValueError(f"{args.data} carries no label column")
    smoothing = _parse_smoothing(args.smoothing)
    if args.model and args.scores:
        raise ValueError("pass either --model or --scores, not both")
    if args.model:
        model = load_model(args.model)
        reports = ev.evaluate_run(model, frame, WindowSpec(args.n_pred),
                                  smoothing=smoothing, eps=args.epsilon,
                                  zero_width=args.zero_width)
    elif args.scores:
        series = _series_from_scores(args.scores, len(frame))
        reports = ev.evaluate_scores(series, frame.labels, smoothing)
    else:
        raise ValueError("one of --model or --scores is required")
    rows = [
        {"smoothing": r.smoothing, "roc_auc": r.roc_auc, "pauc": r.pauc,
         "f1": r.f1, "threshold": r.threshold}
        for r in reports
    ]
    for row in rows:
        print(f"smoothing={row['smoothing']}: roc_auc={row['roc_auc']:.4f} "
              f"pauc={row['pauc']:.4f} f1={row['f1']:.4f} (F1 threshold is "
              f"best-over-thresholds)")
    if args.out:
        import csv as _csv

        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = _csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
    return 0


def _series_from_scores(path: str, length: int) -> np.ndarray:
    """Per-timestamp series from a window-score CSV or a plain (timestamp, score)
    CSV produced by an external detector."""
    import csv as _csv

    with open(path, newline="", encoding="utf-8") as fh:
        header = next(_csv.reader(fh))
    if "window_start" in header:
        starts, aggs, stride = load_scores_csv(path)
        if stride != 1:
            raise ValueError("per-timestamp evaluation needs stride-1 scores")
        n_pred = length - len(aggs) + 1
        out = np.empty(length)
        out[: n_pred - 1] = aggs[0]
        out[n_pred - 1 :] = aggs
        return out
    if "score" in header:
        scores = []
        with open(path, newline="", encoding="utf-8") as fh:
            for row in _csv.DictReader(fh):
                scores.append(float(row["score"]))
        if len(scores) != length:
            raise ValueError(f"{path}: {len(scores)} scores for {length} rows")
        return np.array(scores)
    raise SchemaError(f"{path}: unrecognized score file (header {header})")


def cmd_sweep(argv: list[str]) -> int:
    parser = _Parser(prog="qwatch sweep")
    parser.add_argument("--config")
    parser.add_argument("--data")
    parser.add_argument("--train-start", type=int, default=0)
    parser.add_argument("--train-end", type=int)
    parser.add_argument("--grid",
                        help="grid file: INI (one section per point) or JSON list")
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--out")
    args = _apply_config(parser, argv, "sweep")
    _require(args, "data", "train_end", "grid", "out")
    frame = load_csv(args.data)
    grid = _load_grid(args.grid)
    rows = ev.sweep(grid, frame, (args.train_start, args.train_end),
                    out=args.out, jobs=args.jobs)
    print(ev.summarize_sweep(rows))
    return 0


def _load_grid(path: str) -> list[dict]:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(path)
    if p.suffix == ".json":
        grid = json.loads(p.read_text())
        if not isinstance(grid, list):
            raise SchemaError(f"{path}: JSON grid must be a list of objects")
        return grid
    cfg = configparser.ConfigParser()
    cfg.read(path)
    grid = []
    for section in cfg.sections():
        point = {}
        for key, value in cfg.items(section):
            dest = key.replace("-", "_")
            point[dest] = _CASTS.get(dest, float)(value)
        grid.append(point)
    if not grid:
        raise SchemaError(f"{path}: grid file has no sections")
    return grid


def cmd_serve(argv: list[str]) -> int:
    parser = _Parser(prog="qwatch serve")
    parser.add_argument("--config")
    parser.add_argument("--model")
    parser.add_argument("--data")
    parser.add_argument("--port", type=int, default=8765)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--n-pred", type=int, default=100)
    parser.add_argument("--epsilon", type=float, default=1.0)
    parser.add_argument("--state-dir", default=None,
                        help="snapshot/journal directory (default: alongside model)")
    parser.add_argument("--ui-dir", default=None, help="static UI assets to host")
    args = _apply_config(parser, argv, "serve")
    _require(args, "model", "data")
    import uvicorn

    from .service import create_app, mount_static

    model = load_model(args.model)
    frame = load_csv(args.data)
    state_dir = args.state_dir or (Path(args.model).parent / "qwatch-state")
    store = ModelStore(state_dir)
    if not store.versions():
        store.initialize(model)
    app = create_app(store, frame, WindowSpec(args.n_pred), args.epsilon)
    ui_dir = args.ui_dir
    if ui_dir and Path(ui_dir).is_dir():
        mount_static(app, ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "fit": cmd_fit,
    "score": cmd_score,
    "feedback": cmd_feedback,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "serve": cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ("-h", "--help"):
        print("usage: qwatch {generate,fit,score,feedback,evaluate,sweep,serve} ...")
        print(__doc__)
        return 0
    command = argv[0]
    if command not in COMMANDS:
        print(json.dumps({"error": "UnknownCommand", "kind": "validation",
                          "message": f"unknown command {command!r}"}), file=sys.stderr)
        return 1
    try:
        return COMMANDS[command](argv[1:])
    except (ValueError, KeyError, FileNotFoundError, SchemaError) as exc:
        return _fail("validation", exc, 1)
    except QwatchError as exc:
        return _fail("runtime", exc, 2)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        logger.exception("unhandled failure")
        return _fail("runtime", exc, 2)


if __name__ == "__main__":
    sys.exit(main())
