"""Versioned JSON model bundle: LSTM, combiner, channel stats and config."""

import json
import logging
from pathlib import Path
from typing import Union

from ..models import ChannelStats
from ..network import LSTMModel
from ..svr import SVRModel
from ..utils.errors import DataError
from ..utils.io import write_json_atomic
from .config import PipelineConfig
from .scoring import TrainedModels

logger = logging.getLogger(__name__)

BUNDLE_FORMAT = "sems-model-bundle"
BUNDLE_VERSION = 1


def bundle_to_dict(models: TrainedModels) -> dict:
    return {
        "format": BUNDLE_FORMAT,
        "version": BUNDLE_VERSION,
        "lstm": models.lstm.to_dict(),
        "svr": models.svr.to_dict() if models.svr is not None else None,
        "stats": models.stats.to_dict(),
        "config": models.config.to_dict(),
    }


def bundle_from_dict(data: dict) -> TrainedModels:
    if data.get("format") != BUNDLE_FORMAT:
        raise DataError(f"not a model bundle (format {data.get('format')!r})")
    if data.get("version") != BUNDLE_VERSION:
        raise DataError(f"unsupported bundle version {data.get('version')!r}")
    return TrainedModels(
        lstm=LSTMModel.from_dict(data["lstm"]),
        svr=SVRModel.from_dict(data["svr"]) if data["svr"] is not None else None,
        stats=ChannelStats.from_dict(data["stats"]),
        config=PipelineConfig.from_dict(data["config"]),
    )


def save_bundle(models: TrainedModels, path: Union[str, Path]) -> Path:
    """Floats are written with their shortest round-trip repr, so loading
    recovers every parameter bit for bit."""
    path = write_json_atomic(path, bundle_to_dict(models))
    logger.info(f"Model bundle written to {path}")
    return path


def load_bundle(path: Union[str, Path]) -> TrainedModels:
    path = Path(path)
    if not path.is_file():
        raise DataError("file not found", str(path))
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise DataError(f"invalid JSON: {e}", str(path), e.lineno) from e
    try:
        return bundle_from_dict(data)
    except (KeyError, TypeError) as e:
        raise DataError(f"incomplete bundle: {e}", str(path)) from e
