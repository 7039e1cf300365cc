"""Channel importance from the attention network and the combiner inputs."""

import logging
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..evaluation import format_metric, rmse
from ..models import CHANNELS, ImportanceReport, WritingSession
from ..network import IMVModel, importance_report, train_imv
from ..preprocessing import fit_channel_stats, normalize_windows, segment_cohort
from ..svr import predict_svr_many
from ..utils.errors import DataError, TrainingError
from ..utils.io import write_csv_atomic
from ..utils.seeding import derive_seed, make_rng
from .config import PipelineConfig
from .scoring import TrainedModels, combiner_rows, split_children, window_scores

logger = logging.getLogger(__name__)

SVR_FEATURES = ("lstm_score", "age", "gender")
DEFAULT_SHUFFLES = 10


def svr_input_importance(
    models: Optional[TrainedModels],
    cohort: Sequence[WritingSession],
    seed: int = 0,
    n_shuffles: int = DEFAULT_SHUFFLES,
) -> List[Tuple[str, float]]:
    """Permutation importance of the combiner's three inputs.

    Importance is the mean child-level RMSE increase over `n_shuffles`
    seeded shuffles of one input column.

    Returns:
        (feature, importance) pairs, most important first

    Raises:
        TrainingError: models missing or without a fitted combiner
    """
    if models is None or models.svr is None:
        raise TrainingError("combiner is not trained", "importance")
    if not cohort:
        raise DataError("permutation importance needs at least one child")

    scores = window_scores(cohort, models).mean(axis=1)
    rows = combiner_rows(scores, cohort)
    labels = np.array([s.sems_label for s in cohort])
    baseline = rmse(predict_svr_many(models.svr, rows), labels)

    rng = np.random.default_rng(derive_seed(seed, "permutation"))
    importances = []
    for col, name in enumerate(SVR_FEATURES):
        increases = []
        for _ in range(n_shuffles):
            shuffled = rows.copy()
            shuffled[:, col] = rng.permutation(shuffled[:, col])
            increases.append(
                rmse(predict_svr_many(models.svr, shuffled), labels) - baseline
            )
        importances.append((name, float(np.mean(increases))))

    importances.sort(key=lambda item: -item[1])
    return importances


def train_attention(
    cohort: Sequence[WritingSession], cfg: PipelineConfig
) -> Tuple[IMVModel, ImportanceReport]:
    """Fit the attention network on a child-level train/val split and
    report importance over every window of the cohort."""
    if len(cohort) < 2:
        raise DataError("attention training needs at least 2 children")
    share = cfg.val_fraction / (cfg.train_fraction + cfg.val_fraction)
    n_val = min(max(1, int(round(len(cohort) * share))), len(cohort) - 1)
    by_id = {s.child_id: s for s in cohort}
    train_ids, val_ids = split_children(
        [s.child_id for s in cohort], n_val, make_rng(cfg.rng_seed, "imv-split")
    )
    train_windows = segment_cohort(
        [by_id[c] for c in train_ids], cfg.num_segments, cfg.window_len
    )
    val_windows = segment_cohort(
        [by_id[c] for c in val_ids], cfg.num_segments, cfg.window_len
    )
    stats = fit_channel_stats(train_windows)
    train_cfg = replace(cfg.train, rng_seed=derive_seed(cfg.rng_seed, "imv"))
    model, _ = train_imv(
        normalize_windows(train_windows, stats),
        normalize_windows(val_windows, stats),
        train_cfg,
        cfg.imv_segment_size,
    )
    all_windows = normalize_windows(
        segment_cohort(cohort, cfg.num_segments, cfg.window_len), stats
    )
    report = importance_report(model, all_windows)
    logger.info(f"Channel ranking: {', '.join(report.ranking)}")
    return model, report


def combined_ranking(
    report: ImportanceReport, svr_importance: Sequence[Tuple[str, float]]
) -> List[Tuple[str, float, str]]:
    """Merge attention and combiner importance lists by score.

    The combiner's `lstm_score` stands for the sensor channels as a whole
    and is left out; age and gender join the 10 channels.
    """
    merged = [
        (name, float(score), "attention")
        for name, score in zip(CHANNELS, report.overall)
    ]
    merged.extend(
        (name, float(score), "permutation")
        for name, score in svr_importance
        if name != "lstm_score"
    )
    merged.sort(key=lambda item: -item[1])
    return merged


def write_importance(
    report: ImportanceReport, out_dir: Union[str, Path]
) -> List[Path]:
    """overall.csv (channel,score) and per_timestep.csv (t + 10 channels)."""
    out_dir = Path(out_dir)
    overall = write_csv_atomic(
        out_dir / "overall.csv",
        ("channel", "score"),
        ([name, format_metric(score)] for name, score in zip(CHANNELS, report.overall)),
    )
    per_timestep = write_csv_atomic(
        out_dir / "per_timestep.csv",
        ("t",) + CHANNELS,
        (
            [t] + [format_metric(v) for v in row]
            for t, row in enumerate(report.per_timestep)
        ),
    )
    return [overall, per_timestep]


def write_svr_importance(
    importance: Sequence[Tuple[str, float]], path: Union[str, Path]
) -> Path:
    return write_csv_atomic(
        path,
        ("feature", "importance"),
        ([name, format_metric(value)] for name, value in importance),
    )


def write_combined_ranking(
    ranking: Sequence[Tuple[str, float, str]], path: Union[str, Path]
) -> Path:
    return write_csv_atomic(
        path,
        ("feature", "score", "source"),
        ([name, format_metric(score), source] for name, score, source in ranking),
    )
