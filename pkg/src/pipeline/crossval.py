"""Monte-Carlo cross-validation and the architecture sweep."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Sequence, Tuple, Union

from ..evaluation import format_metric
from ..models import (
    LEVELS,
    REPORT_METRICS,
    CVReport,
    TrialRecord,
    TrialSplit,
    WritingSession,
)
from ..utils.errors import ConfigError, DataError
from ..utils.io import write_csv_atomic
from ..utils.seeding import make_rng
from .config import PipelineConfig
from .scoring import MIN_CHILDREN, evaluate_sessions, split_children, train_pipeline

logger = logging.getLogger(__name__)

CV_REPORT_HEADER = ("trial", "level") + REPORT_METRICS
SWEEP_HEADER = ("layers", "hidden_sizes", "accuracy", "f1", "rmse")
COMPARISON_HEADER = ("model", "level", "accuracy", "f1", "rmse")

# Rows of the network optimization table, plus a three-layer variant.
ARCHITECTURE_GRID: Tuple[Tuple[int, ...], ...] = (
    (80,),
    (100,),
    (120,),
    (70, 40),
    (70, 50),
    (80, 50),
    (70, 50, 30),
)


def holdout_count(n_children: int, cfg: PipelineConfig) -> int:
    """Number of children held out for testing in each trial (at least 1)."""
    return max(1, int(round(n_children * cfg.test_fraction)))


def _run_trial(
    trial: int, cohort: Sequence[WritingSession], cfg: PipelineConfig
) -> Tuple[List[TrialRecord], TrialSplit]:
    ids = [s.child_id for s in cohort]
    by_id = {s.child_id: s for s in cohort}
    remaining, test_ids = split_children(
        ids, holdout_count(len(ids), cfg), make_rng(cfg.rng_seed, "split", trial)
    )
    models, validation = train_pipeline([by_id[c] for c in remaining], cfg, trial)
    window_summary, child_summary = evaluate_sessions(
        [by_id[c] for c in test_ids], models
    )
    logger.info(
        f"Trial {trial}: test child rmse={child_summary.rmse:.4f} "
        f"({len(test_ids)} children)"
    )
    records = [
        TrialRecord.from_summary(trial, window_summary),
        TrialRecord.from_summary(trial, child_summary),
    ]
    split = TrialSplit(
        trial=trial,
        train=validation.train_children,
        val=validation.val_children,
        test=test_ids,
    )
    return records, split


def run_cv(cohort: Sequence[WritingSession], cfg: PipelineConfig) -> CVReport:
    """Repeated random child-level train/val/test trials.

    Each trial holds out test_fraction of the children, then trains on the
    rest (split again into train/val). Trials run on `cfg.jobs` threads;
    results are collected in trial order.

    Raises:
        DataError: cohort too small for a nonempty test split plus
            a trainable remainder
    """
    n = len(cohort)
    if n - holdout_count(n, cfg) < MIN_CHILDREN:
        raise DataError(
            f"cohort of {n} children is too small for cross-validation"
        )
    logger.info(f"Cross-validating {n} children over {cfg.trials} trials")

    trials = range(cfg.trials)
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(lambda t: _run_trial(t, cohort, cfg), trials))
    else:
        results = [_run_trial(t, cohort, cfg) for t in trials]

    report = CVReport()
    for records, split in results:
        report.records.extend(records)
        report.splits.append(split)
    return report


def write_cv_report(report: CVReport, path: Union[str, Path]) -> Path:
    """Per-trial rows, then one `aggregate` row per level as `mean +/- std`."""
    rows = []
    for record in report.records:
        rows.append(
            [record.trial, record.level]
            + [format_metric(getattr(record, m)) for m in REPORT_METRICS]
        )
    aggregate = report.aggregate()
    for level in LEVELS:
        if level not in aggregate:
            continue
        row = ["aggregate", level]
        for name in REPORT_METRICS:
            mean, std = aggregate[level][name]
            row.append(
                "NA" if mean is None
                else f"{format_metric(mean)} +/- {format_metric(std)}"
            )
        rows.append(row)
    return write_csv_atomic(path, CV_REPORT_HEADER, rows)


def write_comparison_table(
    report: CVReport, path: Union[str, Path], model: str = "lstm+svr"
) -> Path:
    """Comparison-table row: accuracy and F1 in percent, RMSE raw."""
    rows = []
    for level in LEVELS:
        formatted = report.comparison_row(level)
        rows.append(
            [model, level, formatted["accuracy"], formatted["f1"], formatted["rmse"]]
        )
    return write_csv_atomic(path, COMPARISON_HEADER, rows)


@dataclass
class SweepRow:
    """One architecture's child-level cross-validated means."""

    layers: int
    hidden_sizes: Tuple[int, ...]
    accuracy: float
    f1: float
    rmse: float


def architecture_sweep(
    cohort: Sequence[WritingSession],
    cfg: PipelineConfig,
    grid: Sequence[Sequence[int]] = ARCHITECTURE_GRID,
) -> List[SweepRow]:
    """One cross-validation per layer-size list, rows in grid order.

    Raises:
        ConfigError: empty grid
    """
    if not grid:
        raise ConfigError("architecture grid is empty", "grid")
    rows = []
    for sizes in grid:
        arch_cfg = replace(cfg, layer_sizes=tuple(int(h) for h in sizes))
        logger.info(f"Sweep: layers {list(arch_cfg.layer_sizes)}")
        child = run_cv(cohort, arch_cfg).aggregate()["child"]
        rows.append(
            SweepRow(
                layers=len(arch_cfg.layer_sizes),
                hidden_sizes=arch_cfg.layer_sizes,
                accuracy=child["accuracy"][0],
                f1=child["f1"][0],
                rmse=child["rmse"][0],
            )
        )
    return rows


def write_sweep_table(rows: Sequence[SweepRow], path: Union[str, Path]) -> Path:
    return write_csv_atomic(
        path,
        SWEEP_HEADER,
        (
            [
                r.layers,
                "/".join(str(h) for h in r.hidden_sizes),
                format_metric(r.accuracy),
                format_metric(r.f1),
                format_metric(r.rmse),
            ]
            for r in rows
        ),
    )
