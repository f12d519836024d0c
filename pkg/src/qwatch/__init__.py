"""Unsupervised anomaly detection for multivariate industrial time-series.

The library fits a per-sensor normality model out of quantized transitions of
scaled sensor values, scores sliding windows with three complementary
residuals (novel transitions, out-of-box excursions, decorrelation from stored
representative configurations) and supports operator-feedback incremental
updates, synthetic fault-injection benchmarks, and a metrics harness.
"""

from .errors import QwatchError, SchemaError, ZeroWidthIntervalError
from .evaluate import (
    MetricReport,
    best_f1,
    evaluate_run,
    evaluate_scores,
    metrics_for_series,
    partial_auc,
    roc_auc,
    summarize_sweep,
    sweep,
)
from .frame import (
    Interval,
    Scaler,
    SensorFrame,
    apply_scaler,
    fit_scaler,
    invert_scaler,
    load_csv,
    save_csv,
)
from .incremental import (
    FeedbackEvent,
    ModelStore,
    apply_feedback,
    il_increase,
    il_reduce,
    models_equal,
)
from .model import (
    ConfigurationVector,
    HyperParams,
    NormalityModel,
    SensorNormality,
    TransitionPair,
    abs_corr,
    compute_transitions,
    extract_configuration,
    fit,
    kmeans_reduce,
    load_model,
    representative_scalar_count,
    save_model,
)
from .quantize import Quantizer, fit_quantizer, quantize, quantize_series
from .residuals import (
    ResidualReport,
    ScoreResult,
    TrainNormalizers,
    WindowSpec,
    interval_distance,
    r_bound,
    r_conf,
    r_trans,
    score_frame,
    smooth_max,
    training_normalizers,
)
from .simulate import (
    EtcConfig,
    LorentzConfig,
    generate_etc,
    generate_lorentz,
    rk4_step,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationVector",
    "EtcConfig",
    "FeedbackEvent",
    "HyperParams",
    "Interval",
    "LorentzConfig",
    "MetricReport",
    "ModelStore",
    "NormalityModel",
    "QwatchError",
    "Quantizer",
    "ResidualReport",
    "Scaler",
    "SchemaError",
    "ScoreResult",
    "SensorFrame",
    "SensorNormality",
    "TrainNormalizers",
    "TransitionPair",
    "WindowSpec",
    "ZeroWidthIntervalError",
    "abs_corr",
    "apply_feedback",
    "apply_scaler",
    "best_f1",
    "compute_transitions",
    "evaluate_run",
    "evaluate_scores",
    "extract_configuration",
    "fit",
    "fit_quantizer",
    "fit_scaler",
    "generate_etc",
    "generate_lorentz",
    "il_increase",
    "il_reduce",
    "interval_distance",
    "invert_scaler",
    "kmeans_reduce",
    "load_csv",
    "load_model",
    "metrics_for_series",
    "models_equal",
    "representative_scalar_count",
    "partial_auc",
    "quantize",
    "quantize_series",
    "r_bound",
    "r_conf",
    "r_trans",
    "rk4_step",
    "roc_auc",
    "save_csv",
    "save_model",
    "score_frame",
    "smooth_max",
    "summarize_sweep",
    "sweep",
    "training_normalizers",
]
