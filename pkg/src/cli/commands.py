"""Command implementations behind main.py.

Every command writes its artifacts into `out_dir` atomically and finishes
with `run_manifest.json`, which records the resolved configuration, the
inputs, the artifact checksums and the wall-clock duration.
"""

import json
import logging
import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

from ..config import RunConfig
from ..evaluation import metrics_rows
from ..models import (
    ChildMeta,
    Gender,
    RunManifest,
    ScorePrediction,
    WritingSession,
)
from ..parsers import MANIFEST_NAME, CohortParser
from ..pipeline import (
    ARCHITECTURE_GRID,
    architecture_sweep,
    combined_ranking,
    dump_trace,
    load_bundle,
    predict_sems,
    run_cv,
    save_bundle,
    svr_input_importance,
    train_attention,
    train_pipeline,
    write_combined_ranking,
    write_cv_report,
    write_importance,
    write_svr_importance,
    write_sweep_table,
    write_comparison_table,
)
from ..synthetic import generate_synthetic_cohort
from ..utils.errors import SemsError
from ..utils.io import format_float, sha256_file, write_csv_atomic, write_json_atomic

logger = logging.getLogger(__name__)

RUN_MANIFEST_NAME = "run_manifest.json"

PathLike = Union[str, Path]


def exit_code_for(error: SemsError) -> int:
    """2 for configuration, 3 for data, 4 for training failures."""
    return {"config": 2, "data": 3, "training": 4}.get(error.kind, 1)


def resolve_manifest(cohort: PathLike) -> Path:
    """Accept either a cohort directory or its manifest file."""
    cohort = Path(cohort)
    return cohort / MANIFEST_NAME if cohort.is_dir() else cohort


def load_cohort(cohort: PathLike, config: RunConfig) -> List[WritingSession]:
    sessions = CohortParser.parse_cohort(
        resolve_manifest(cohort), config.pipeline.eval.scale_max
    )
    return sessions


def load_session(
    session_csv: PathLike,
    age_years: float,
    gender: str,
    child_id: Optional[str] = None,
) -> WritingSession:
    """An unlabeled session from a bare session CSV plus flag metadata."""
    session_csv = Path(session_csv)
    timestamps, values = CohortParser.parse_session_file(session_csv)
    meta = ChildMeta(
        child_id=child_id or session_csv.stem,
        age_years=float(age_years),
        gender=Gender.from_literal(gender),
    )
    return WritingSession(
        meta=meta, timestamps=timestamps, values=values, sems_label=0.0
    )


def write_run_manifest(
    command: str,
    config: Optional[RunConfig],
    inputs: Dict[str, str],
    outputs: Sequence[Path],
    out_dir: PathLike,
    started: float,
    extra_config: Optional[dict] = None,
) -> RunManifest:
    """Checksum every artifact and write run_manifest.json next to them."""
    out_dir = Path(out_dir)
    names = sorted(str(Path(p).relative_to(out_dir)) for p in outputs)
    snapshot = config.to_dict() if config is not None else {}
    if extra_config:
        snapshot.update(extra_config)
    manifest = RunManifest(
        command=command,
        seed=config.seed if config is not None else None,
        config=snapshot,
        inputs=inputs,
        outputs=names,
        duration_s=round(time.monotonic() - started, 3),
        checksums={name: sha256_file(out_dir / name) for name in names},
    )
    write_json_atomic(out_dir / RUN_MANIFEST_NAME, manifest.to_dict())
    logger.info(f"{command}: wrote {len(names)} artifacts to {out_dir}")
    return manifest


def cmd_generate(config: RunConfig, out_dir: PathLike) -> RunManifest:
    """Write a synthetic cohort (manifest.csv + sessions/*.csv)."""
    started = time.monotonic()
    out_dir = Path(out_dir)
    cohort = generate_synthetic_cohort(config.synth, config.seed)
    manifest = CohortParser.write_cohort(cohort, out_dir)
    outputs = [manifest] + [
        out_dir / "sessions" / f"{s.child_id}.csv" for s in cohort
    ]
    return write_run_manifest("generate", config, {}, outputs, out_dir, started)


def cmd_train(config: RunConfig, cohort_dir: PathLike, out_dir: PathLike) -> RunManifest:
    """Train on a cohort; write the bundle, validation metrics and history."""
    started = time.monotonic()
    out_dir = Path(out_dir)
    cohort = load_cohort(cohort_dir, config)
    models, report = train_pipeline(cohort, config.pipeline)

    outputs = [save_bundle(models, out_dir / "model_bundle.json")]
    rows = []
    for summary in (report.window, report.child):
        rows.extend([summary.level, name, value] for name, value in metrics_rows(summary))
    outputs.append(
        write_csv_atomic(out_dir / "validation_report.csv", ("level", "metric", "value"), rows)
    )
    history = report.history
    outputs.append(
        write_csv_atomic(
            out_dir / "training_history.csv",
            ("epoch", "train_mse", "val_mse"),
            (
                [epoch + 1, format_float(t), format_float(v)]
                for epoch, (t, v) in enumerate(zip(history.train_mse, history.val_mse))
            ),
        )
    )
    outputs.append(
        write_json_atomic(
            out_dir / "validation_split.json",
            {
                "best_epoch": history.best_epoch,
                "svr_hyper": report.svr_hyper,
                "train_children": report.train_children,
                "val_children": report.val_children,
            },
        )
    )
    logger.info(f"Validation child-level RMSE: {report.child.rmse:.4f}")
    return write_run_manifest(
        "train", config, {"cohort": str(cohort_dir)}, outputs, out_dir, started
    )


def cmd_crossval(config: RunConfig, cohort_dir: PathLike, out_dir: PathLike) -> RunManifest:
    """Monte-Carlo cross-validation: cv_report.csv, table2.csv, cv_splits.json."""
    started = time.monotonic()
    out_dir = Path(out_dir)
    cohort = load_cohort(cohort_dir, config)
    report = run_cv(cohort, config.pipeline)

    model = "lstm+svr" if config.pipeline.combiner == "svr" else "lstm"
    outputs = [
        write_cv_report(report, out_dir / "cv_report.csv"),
        write_comparison_table(report, out_dir / "table2.csv", model=model),
        write_json_atomic(
            out_dir / "cv_splits.json",
            [
                {"trial": s.trial, "train": s.train, "val": s.val, "test": s.test}
                for s in report.splits
            ],
        ),
    ]
    return write_run_manifest(
        "crossval", config, {"cohort": str(cohort_dir)}, outputs, out_dir, started
    )


def cmd_sweep(
    config: RunConfig,
    cohort_dir: PathLike,
    out_dir: PathLike,
    grid: Sequence[Sequence[int]] = ARCHITECTURE_GRID,
) -> RunManifest:
    """One cross-validation per architecture, written as table1.csv."""
    started = time.monotonic()
    out_dir = Path(out_dir)
    cohort = load_cohort(cohort_dir, config)
    rows = architecture_sweep(cohort, config.pipeline, grid)
    outputs = [write_sweep_table(rows, out_dir / "table1.csv")]
    return write_run_manifest(
        "sweep",
        config,
        {"cohort": str(cohort_dir)},
        outputs,
        out_dir,
        started,
        extra_config={"grid": [list(sizes) for sizes in grid]},
    )


def cmd_predict(
    bundle_path: PathLike,
    session_csv: PathLike,
    out_dir: PathLike,
    age_years: float,
    gender: str,
    child_id: Optional[str] = None,
) -> ScorePrediction:
    """Score one session; print the record as JSON and write prediction.json."""
    started = time.monotonic()
    out_dir = Path(out_dir)
    models = load_bundle(bundle_path)
    session = load_session(session_csv, age_years, gender, child_id)
    session.validate(models.config.eval.scale_max)
    prediction = predict_sems(session, models)

    record = prediction.to_dict()
    print(json.dumps(record, sort_keys=True))
    outputs = [write_json_atomic(out_dir / "prediction.json", record)]
    write_run_manifest(
        "predict",
        None,
        {"bundle": str(bundle_path), "session": str(session_csv)},
        outputs,
        out_dir,
        started,
        extra_config={
            "age_years": float(age_years),
            "gender": gender,
            "child_id": session.child_id,
            "pipeline": models.config.to_dict(),
        },
    )
    return prediction


def cmd_interpret(config: RunConfig, cohort_dir: PathLike, out_dir: PathLike) -> RunManifest:
    """Attention importance plus combiner permutation importance."""
    started = time.monotonic()
    out_dir = Path(out_dir)
    cohort = load_cohort(cohort_dir, config)
    _, report = train_attention(cohort, config.pipeline)
    outputs = write_importance(report, out_dir)

    if config.pipeline.combiner == "svr":
        models, _ = train_pipeline(cohort, config.pipeline)
        svr_importance = svr_input_importance(models, cohort, seed=config.seed)
        outputs.append(write_svr_importance(svr_importance, out_dir / "importance_svr.csv"))
        outputs.append(
            write_combined_ranking(
                combined_ranking(report, svr_importance),
                out_dir / "importance_combined.csv",
            )
        )
    else:
        logger.warning("Combiner disabled; skipping combiner input importance")
    return write_run_manifest(
        "interpret", config, {"cohort": str(cohort_dir)}, outputs, out_dir, started
    )


def cmd_trace(
    bundle_path: PathLike,
    session_csv: PathLike,
    out_dir: PathLike,
    window_index: int = 0,
    age_years: float = 8.0,
    gender: str = "f",
    child_id: Optional[str] = None,
) -> RunManifest:
    """Input window and per-layer hidden states of one window."""
    started = time.monotonic()
    out_dir = Path(out_dir)
    models = load_bundle(bundle_path)
    session = load_session(session_csv, age_years, gender, child_id)
    result = dump_trace(session, models, out_dir, window_index)
    return write_run_manifest(
        "trace",
        None,
        {"bundle": str(bundle_path), "session": str(session_csv)},
        result.paths,
        out_dir,
        started,
        extra_config={
            "window_index": window_index,
            "prediction": result.prediction,
            "pipeline": models.config.to_dict(),
        },
    )
