"""SEMS_score = f_SVM(f_LSTM(X), age, gender): training and prediction."""

import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..evaluation import evaluate
from ..models import (
    ChannelStats,
    EvalSummary,
    ScorePrediction,
    TrainingHistory,
    ValidationReport,
    WritingSession,
)
from ..network import LSTMModel, predict_batch, train
from ..preprocessing import (
    fit_channel_stats,
    normalize_windows,
    segment_cohort,
    segment_session,
    stack_windows,
)
from ..svr import SVRModel, fit_svr, predict_svr_many, select_hyper
from ..utils.errors import DataError, SemsError, TrainingError
from ..utils.seeding import derive_seed, make_rng
from .config import PipelineConfig

logger = logging.getLogger(__name__)

MIN_CHILDREN = 3


@dataclass
class TrainedModels:
    """Everything needed to score a new session."""

    lstm: LSTMModel
    svr: Optional[SVRModel]
    stats: ChannelStats
    config: PipelineConfig

    def combine(self, lstm_scores: np.ndarray, sessions: Sequence[WritingSession]) -> np.ndarray:
        """Final clamped scores for LSTM scores paired with their sessions' metadata."""
        lstm_scores = np.asarray(lstm_scores, dtype=np.float64)
        scale_max = self.config.eval.scale_max
        if self.svr is None:
            return np.clip(lstm_scores, 0.0, scale_max)
        return predict_svr_many(self.svr, combiner_rows(lstm_scores, sessions))


def combiner_rows(
    lstm_scores: Sequence[float], sessions: Sequence[WritingSession]
) -> np.ndarray:
    """(lstm_score, age_years, gender) rows."""
    return np.array(
        [
            [float(score), s.meta.age_years, float(int(s.meta.gender))]
            for score, s in zip(lstm_scores, sessions)
        ],
        dtype=np.float64,
    ).reshape(-1, 3)


def split_children(
    child_ids: Sequence[str], n_holdout: int, rng: np.random.Generator
) -> Tuple[List[str], List[str]]:
    """Shuffle child ids and split off `n_holdout` of them.

    Returns:
        (remaining ids, held-out ids), each in original cohort order
    """
    order = rng.permutation(len(child_ids))
    held = set(int(k) for k in order[:n_holdout])
    remaining = [c for k, c in enumerate(child_ids) if k not in held]
    holdout = [c for k, c in enumerate(child_ids) if k in held]
    return remaining, holdout


def window_scores(
    sessions: Sequence[WritingSession], models: TrainedModels
) -> np.ndarray:
    """Infer-mode LSTM scores, shape (num_sessions, num_segments)."""
    cfg = models.config
    windows = segment_cohort(sessions, cfg.num_segments, cfg.window_len)
    windows = normalize_windows(windows, models.stats)
    X, _ = stack_windows(windows)
    return predict_batch(X, models.lstm).reshape(len(sessions), cfg.num_segments)


def evaluate_sessions(
    sessions: Sequence[WritingSession], models: TrainedModels
) -> Tuple[EvalSummary, EvalSummary]:
    """Window- and child-level metrics of the full composition.

    At window level every window's LSTM score goes through the combiner
    with its child's age and gender; at child level the mean does.
    """
    scores = window_scores(sessions, models)
    labels = np.array([s.sems_label for s in sessions])
    per_window_sessions = [s for s in sessions for _ in range(scores.shape[1])]
    window_final = models.combine(scores.ravel(), per_window_sessions)
    child_final = models.combine(scores.mean(axis=1), sessions)
    eval_cfg = models.config.eval
    return (
        evaluate(window_final, np.repeat(labels, scores.shape[1]), eval_cfg, "window"),
        evaluate(child_final, labels, eval_cfg, "child"),
    )


def train_pipeline(
    cohort: Sequence[WritingSession], cfg: PipelineConfig, trial: int = 0
) -> Tuple[TrainedModels, ValidationReport]:
    """Train LSTM and combiner on a cohort split by child into train/val.

    The validation share is val_fraction / (train_fraction + val_fraction)
    of the children, at least one. Channel statistics come from training
    windows only; the SVR is fitted on per-child mean LSTM scores of the
    training children.

    Args:
        cohort: Labeled sessions (the test children already removed)
        cfg: Pipeline configuration
        trial: Index mixed into every derived seed

    Raises:
        DataError: fewer than 3 children
        TrainingError: any training stage failed (stage in the message)
    """
    if len(cohort) < MIN_CHILDREN:
        raise DataError(
            f"need at least {MIN_CHILDREN} children to train, got {len(cohort)}"
        )
    by_id: Dict[str, WritingSession] = {s.child_id: s for s in cohort}
    if len(by_id) != len(cohort):
        raise DataError("duplicate child_id in cohort")

    share = cfg.val_fraction / (cfg.train_fraction + cfg.val_fraction)
    n_val = min(max(1, int(round(len(cohort) * share))), len(cohort) - 2)
    train_ids, val_ids = split_children(
        [s.child_id for s in cohort], n_val, make_rng(cfg.rng_seed, "train-val", trial)
    )
    train_sessions = [by_id[c] for c in train_ids]
    val_sessions = [by_id[c] for c in val_ids]
    logger.info(
        f"Trial {trial}: {len(train_sessions)} training / "
        f"{len(val_sessions)} validation children"
    )

    train_windows = segment_cohort(train_sessions, cfg.num_segments, cfg.window_len)
    val_windows = segment_cohort(val_sessions, cfg.num_segments, cfg.window_len)
    stats = fit_channel_stats(train_windows)
    train_windows = normalize_windows(train_windows, stats)
    val_windows = normalize_windows(val_windows, stats)

    train_cfg = replace(cfg.train, rng_seed=derive_seed(cfg.rng_seed, "lstm", trial))
    lstm, history = _run_stage(
        "lstm",
        lambda: train(
            train_windows, val_windows, train_cfg, cfg.layer_sizes, cfg.dropout_rate
        ),
    )

    models = TrainedModels(lstm=lstm, svr=None, stats=stats, config=cfg)
    hyper = cfg.svr
    if cfg.combiner == "svr":
        train_scores = window_scores(train_sessions, models).mean(axis=1)
        train_rows = combiner_rows(train_scores, train_sessions)
        train_labels = np.array([s.sems_label for s in train_sessions])
        if cfg.svr_grid_search:
            val_scores = window_scores(val_sessions, models).mean(axis=1)
            hyper, _ = _run_stage(
                "svr",
                lambda: select_hyper(
                    train_rows,
                    train_labels,
                    combiner_rows(val_scores, val_sessions),
                    np.array([s.sems_label for s in val_sessions]),
                    cfg.svr,
                    scale_max=cfg.eval.scale_max,
                ),
            )
        models.svr = _run_stage(
            "svr",
            lambda: fit_svr(train_rows, train_labels, hyper, cfg.eval.scale_max),
        )

    window_summary, child_summary = evaluate_sessions(val_sessions, models)
    logger.info(
        f"Trial {trial} validation: child rmse={child_summary.rmse:.4f}, "
        f"window rmse={window_summary.rmse:.4f}"
    )
    report = ValidationReport(
        window=window_summary,
        child=child_summary,
        history=history,
        svr_hyper=hyper.to_dict() if cfg.combiner == "svr" else {},
        train_children=train_ids,
        val_children=val_ids,
    )
    return models, report


def _run_stage(stage: str, fn):
    """Run a training stage, labelling any failure with the stage name."""
    try:
        return fn()
    except TrainingError:
        raise
    except SemsError as e:
        raise TrainingError(str(e), stage) from e
    except (ArithmeticError, np.linalg.LinAlgError, ValueError) as e:
        raise TrainingError(f"{type(e).__name__}: {e}", stage) from e


def predict_sems(
    session: WritingSession, models: TrainedModels
) -> ScorePrediction:
    """Segment, normalize, score every window, average, combine, clamp.

    Raises:
        SessionTooShortError: fewer frames than one window
    """
    cfg = models.config
    windows = segment_session(session, cfg.num_segments, cfg.window_len)
    windows = normalize_windows(windows, models.stats)
    X, _ = stack_windows(windows)
    scores = predict_batch(X, models.lstm)
    lstm_score = float(np.mean(scores))
    final = float(models.combine(np.array([lstm_score]), [session])[0])
    return ScorePrediction(
        child_id=session.child_id,
        lstm_score=lstm_score,
        final_score=final,
        per_window_scores=[float(v) for v in scores],
    )
