"""Export of input windows and per-layer activations for plotting."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Union

import numpy as np

from ..evaluation import format_metric
from ..models import CHANNELS, WritingSession
from ..network import forward_sequence
from ..preprocessing import normalize, segment_session
from ..utils.errors import DataError
from ..utils.io import write_csv_atomic
from .scoring import TrainedModels

logger = logging.getLogger(__name__)


@dataclass
class TraceResult:
    """Files written by `dump_trace` and the traced window's score."""

    prediction: float
    window_index: int
    paths: List[Path] = field(default_factory=list)


def dump_trace(
    session: WritingSession,
    models: TrainedModels,
    out_dir: Union[str, Path],
    window_index: int = 0,
) -> TraceResult:
    """Write the raw input window and every layer's hidden states.

    Files: `input_window.csv` (t + 10 channels), `trace_layer<k>.csv`
    (t + one column per hidden unit, k from 1) and `trace_summary.csv`
    (mean and max absolute activation per layer).

    Raises:
        SessionTooShortError: fewer frames than one window
        DataError: window_index out of range
    """
    cfg = models.config
    windows = segment_session(session, cfg.num_segments, cfg.window_len)
    if not 0 <= window_index < len(windows):
        raise DataError(
            f"window_index {window_index} outside 0..{len(windows) - 1}"
        )
    raw = windows[window_index]
    prediction, trace = forward_sequence(normalize(raw, models.stats), models.lstm)

    out_dir = Path(out_dir)
    paths = [
        write_csv_atomic(
            out_dir / "input_window.csv",
            ("t",) + CHANNELS,
            ([t] + [format_metric(v) for v in row] for t, row in enumerate(raw.values)),
        )
    ]
    summary_rows = []
    for k, hidden in enumerate(trace.hidden, start=1):
        header = ("t",) + tuple(f"h{j}" for j in range(hidden.shape[1]))
        paths.append(
            write_csv_atomic(
                out_dir / f"trace_layer{k}.csv",
                header,
                ([t] + [format_metric(v) for v in row] for t, row in enumerate(hidden)),
            )
        )
        summary_rows.append(
            [
                k,
                format_metric(float(np.mean(np.abs(hidden)))),
                format_metric(float(np.max(np.abs(hidden)))),
            ]
        )
    paths.append(
        write_csv_atomic(
            out_dir / "trace_summary.csv",
            ("layer", "mean_abs_activation", "max_abs_activation"),
            summary_rows,
        )
    )
    logger.info(
        f"Traced window {window_index} of {session.child_id!r}: "
        f"score {prediction:.4f}, {len(trace.hidden)} layers"
    )
    return TraceResult(prediction=prediction, window_index=window_index, paths=paths)
