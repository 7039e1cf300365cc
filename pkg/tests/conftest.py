"""Shared fixtures: tiny cohorts, windows and models."""

from dataclasses import replace

import numpy as np
import pytest

from src.evaluation import EvalConfig
from src.models import CHANNELS, ChildMeta, Gender, LabeledWindow, WritingSession
from src.network import TrainConfig, init_lstm_model
from src.pipeline import PipelineConfig
from src.svr import SVRHyper
from src.synthetic import SynthConfig, generate_synthetic_cohort


def make_session(
    child_id="c0",
    frames=60,
    label=3.0,
    age=8.0,
    gender=Gender.FEMALE,
    seed=0,
    period=10,
):
    rng = np.random.default_rng(seed)
    values = rng.normal(size=(frames, len(CHANNELS)))
    values[:, [0, 1, 9]] = np.abs(values[:, [0, 1, 9]])
    return WritingSession(
        meta=ChildMeta(child_id=child_id, age_years=age, gender=gender),
        timestamps=np.arange(frames) * period,
        values=values,
        sems_label=label,
    )


def make_window(rng, n=7, label=1.0, child="c0"):
    return LabeledWindow(
        values=rng.normal(size=(n, len(CHANNELS))), sems_label=label, source_child=child
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_model(rng):
    return init_lstm_model([5, 4], rng, dropout_rate=0.0)


@pytest.fixture
def tiny_pipeline_config():
    """Small enough for a full train in well under a second."""
    return PipelineConfig(
        window_len=12,
        num_segments=3,
        trials=2,
        layer_sizes=(4,),
        dropout_rate=0.0,
        imv_segment_size=2,
        svr_grid_search=False,
        rng_seed=7,
        eval=EvalConfig(),
        train=TrainConfig(epochs=3, iterations_per_epoch=2),
        svr=SVRHyper(),
    )


@pytest.fixture
def tiny_cohort():
    config = SynthConfig(cohort_size=10, frames_per_session=48)
    return generate_synthetic_cohort(config, seed=11)


@pytest.fixture
def constant_label_cohort():
    return [
        make_session(f"c{k}", frames=40, label=5.0, age=7.0 + k / 10, seed=k)
        for k in range(6)
    ]


def with_train(cfg: PipelineConfig, **kwargs) -> PipelineConfig:
    return replace(cfg, train=replace(cfg.train, **kwargs))
