"""End-to-end composition, cross-validation and interpretability."""

from .config import COMBINERS, PipelineConfig
from .scoring import (
    MIN_CHILDREN,
    TrainedModels,
    combiner_rows,
    split_children,
    window_scores,
    evaluate_sessions,
    train_pipeline,
    predict_sems,
)
from .crossval import (
    CV_REPORT_HEADER,
    SWEEP_HEADER,
    COMPARISON_HEADER,
    ARCHITECTURE_GRID,
    SweepRow,
    holdout_count,
    run_cv,
    write_cv_report,
    write_comparison_table,
    architecture_sweep,
    write_sweep_table,
)
from .interpretability import (
    SVR_FEATURES,
    svr_input_importance,
    train_attention,
    combined_ranking,
    write_importance,
    write_svr_importance,
    write_combined_ranking,
)
from .traces import TraceResult, dump_trace
from .bundle import (
    BUNDLE_FORMAT,
    BUNDLE_VERSION,
    bundle_to_dict,
    bundle_from_dict,
    save_bundle,
    load_bundle,
)

__all__ = [
    "COMBINERS",
    "PipelineConfig",
    "MIN_CHILDREN",
    "TrainedModels",
    "combiner_rows",
    "split_children",
    "window_scores",
    "evaluate_sessions",
    "train_pipeline",
    "predict_sems",
    "CV_REPORT_HEADER",
    "SWEEP_HEADER",
    "COMPARISON_HEADER",
    "ARCHITECTURE_GRID",
    "SweepRow",
    "holdout_count",
    "run_cv",
    "write_cv_report",
    "write_comparison_table",
    "architecture_sweep",
    "write_sweep_table",
    "SVR_FEATURES",
    "svr_input_importance",
    "train_attention",
    "combined_ranking",
    "write_importance",
    "write_svr_importance",
    "write_combined_ranking",
    "TraceResult",
    "dump_trace",
    "BUNDLE_FORMAT",
    "BUNDLE_VERSION",
    "bundle_to_dict",
    "bundle_from_dict",
    "save_bundle",
    "load_bundle",
]
