"""End-to-end training, prediction, cross-validation and exports."""

import csv
import json
from dataclasses import replace

import numpy as np
import pytest

from src.models import CHANNELS, Gender
from src.network import TrainConfig, init_lstm_model
from src.pipeline import (
    CV_REPORT_HEADER,
    PipelineConfig,
    SweepRow,
    TrainedModels,
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
    write_cv_report,
    write_sweep_table,
)
from src.preprocessing import fit_channel_stats, segment_cohort
from src.svr import SVRModel
from src.synthetic import SynthConfig, generate_synthetic_cohort
from src.utils.errors import ConfigError, DataError, SessionTooShortError, TrainingError

from tests.conftest import make_session


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.reader(f))


def _identity_combiner():
    # f(lstm, age, gender) = lstm before clamping
    return SVRModel(
        support_vectors=np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]),
        dual_coef=np.array([0.5, -0.5]),
        bias=0.0,
        kernel="linear",
        gamma=1.0,
        feature_mean=np.zeros(3),
        feature_std=np.ones(3),
        C=10.0,
        epsilon=0.1,
        scale_max=12.0,
    )


@pytest.fixture
def stub_models(tiny_pipeline_config, constant_label_cohort):
    cfg = tiny_pipeline_config
    windows = segment_cohort(constant_label_cohort, cfg.num_segments, cfg.window_len)
    return TrainedModels(
        lstm=init_lstm_model(cfg.layer_sizes, np.random.default_rng(3), dropout_rate=0.0),
        svr=_identity_combiner(),
        stats=fit_channel_stats(windows),
        config=cfg,
    )


class TestTrainPipeline:
    def test_too_few_children(self, tiny_pipeline_config):
        cohort = [make_session(f"c{k}", frames=40, seed=k) for k in range(2)]
        with pytest.raises(DataError):
            train_pipeline(cohort, tiny_pipeline_config)

    def test_duplicate_child_ids(self, tiny_pipeline_config):
        cohort = [make_session("same", frames=40, seed=k) for k in range(4)]
        with pytest.raises(DataError):
            train_pipeline(cohort, tiny_pipeline_config)

    def test_constant_labels_validate_near_exactly(
        self, tiny_pipeline_config, constant_label_cohort
    ):
        _, report = train_pipeline(constant_label_cohort, tiny_pipeline_config)
        assert report.child.rmse < 0.1
        assert report.window.rmse < 0.1

    def test_children_split_disjointly(self, tiny_pipeline_config, tiny_cohort):
        _, report = train_pipeline(tiny_cohort, tiny_pipeline_config)
        assert not set(report.train_children) & set(report.val_children)
        assert len(report.train_children) + len(report.val_children) == len(tiny_cohort)
        assert report.history.epochs == tiny_pipeline_config.train.epochs

    def test_deterministic(self, tiny_pipeline_config, tiny_cohort):
        first, report_a = train_pipeline(tiny_cohort, tiny_pipeline_config)
        second, report_b = train_pipeline(tiny_cohort, tiny_pipeline_config)
        assert first.lstm.to_dict() == second.lstm.to_dict()
        assert first.svr.to_dict() == second.svr.to_dict()
        assert report_a.child.rmse == report_b.child.rmse

    def test_grid_search_records_hyper(self, tiny_pipeline_config, tiny_cohort):
        cfg = replace(tiny_pipeline_config, svr_grid_search=True)
        models, report = train_pipeline(tiny_cohort, cfg)
        assert models.svr is not None
        assert (report.svr_hyper["C"], report.svr_hyper["epsilon"]) == (
            models.svr.C,
            models.svr.epsilon,
        )

    def test_without_combiner(self, tiny_pipeline_config, tiny_cohort):
        cfg = replace(tiny_pipeline_config, combiner="none")
        models, report = train_pipeline(tiny_cohort, cfg)
        assert models.svr is None
        assert report.svr_hyper == {}
        prediction = predict_sems(tiny_cohort[0], models)
        assert prediction.final_score == float(np.clip(prediction.lstm_score, 0.0, 12.0))


class TestPredict:
    def test_identity_combiner_returns_clamped_mean(self, stub_models):
        session = make_session("new", frames=50, seed=99)
        prediction = predict_sems(session, stub_models)
        assert len(prediction.per_window_scores) == stub_models.config.num_segments
        assert prediction.lstm_score == pytest.approx(np.mean(prediction.per_window_scores))
        assert prediction.final_score == pytest.approx(
            float(np.clip(prediction.lstm_score, 0.0, 12.0)), abs=1e-12
        )
        assert prediction.child_id == "new"

    def test_final_score_in_range(self, tiny_pipeline_config, tiny_cohort):
        models, _ = train_pipeline(tiny_cohort, tiny_pipeline_config)
        for session in tiny_cohort:
            assert 0.0 <= predict_sems(session, models).final_score <= 12.0

    def test_too_short_session(self, stub_models):
        with pytest.raises(SessionTooShortError):
            predict_sems(make_session("short", frames=5), stub_models)

    def test_prediction_json_fields(self, stub_models):
        data = predict_sems(make_session("x", frames=40), stub_models).to_dict()
        assert set(data) == {"child_id", "lstm_score", "final_score", "per_window_scores"}
        json.dumps(data)


class TestBundle:
    def test_round_trip_is_bit_exact(self, tmp_path, tiny_pipeline_config, tiny_cohort):
        models, _ = train_pipeline(tiny_cohort, tiny_pipeline_config)
        path = save_bundle(models, tmp_path / "model_bundle.json")
        restored = load_bundle(path)
        assert restored.lstm.to_dict() == models.lstm.to_dict()
        assert restored.config == models.config
        for session in tiny_cohort[:3]:
            assert predict_sems(session, restored) == predict_sems(session, models)

    def test_rejects_foreign_json(self, tmp_path):
        path = tmp_path / "bundle.json"
        path.write_text(json.dumps({"format": "something-else"}), encoding="utf-8")
        with pytest.raises(DataError):
            load_bundle(path)

    def test_missing_or_corrupt(self, tmp_path):
        with pytest.raises(DataError):
            load_bundle(tmp_path / "absent.json")
        broken = tmp_path / "broken.json"
        broken.write_text("{not json", encoding="utf-8")
        with pytest.raises(DataError):
            load_bundle(broken)


class TestCrossValidation:
    def test_splits_are_disjoint_and_cover_cohort(self, tiny_pipeline_config, tiny_cohort):
        report = run_cv(tiny_cohort, tiny_pipeline_config)
        ids = {s.child_id for s in tiny_cohort}
        assert len(report.splits) == tiny_pipeline_config.trials
        for split in report.splits:
            train, val, test = set(split.train), set(split.val), set(split.test)
            assert not (train & val or train & test or val & test)
            assert train | val | test == ids
            assert len(test) == 1

    def test_single_trial_has_zero_std(self, tiny_pipeline_config, tiny_cohort):
        report = run_cv(tiny_cohort, replace(tiny_pipeline_config, trials=1))
        mean, std = report.aggregate()["child"]["rmse"]
        assert std == 0.0
        assert mean == report.records[1].rmse

    def test_aggregate_matches_records(self, tiny_pipeline_config, tiny_cohort):
        report = run_cv(tiny_cohort, tiny_pipeline_config)
        for level in ("window", "child"):
            values = [r.rmse for r in report.records if r.level == level]
            mean, std = report.aggregate()[level]["rmse"]
            assert mean == pytest.approx(np.mean(values))
            assert std == pytest.approx(np.std(values))

    def test_parallel_matches_serial(self, tiny_pipeline_config, tiny_cohort):
        serial = run_cv(tiny_cohort, tiny_pipeline_config)
        parallel = run_cv(tiny_cohort, replace(tiny_pipeline_config, jobs=2))
        assert serial.records == parallel.records
        assert serial.splits == parallel.splits

    def test_cohort_too_small(self, tiny_pipeline_config):
        cohort = [make_session(f"c{k}", frames=40, seed=k) for k in range(3)]
        with pytest.raises(DataError):
            run_cv(cohort, tiny_pipeline_config)

    def test_report_layout(self, tmp_path, tiny_pipeline_config, tiny_cohort):
        report = run_cv(tiny_cohort, tiny_pipeline_config)
        rows = _read_csv(write_cv_report(report, tmp_path / "cv_report.csv"))
        assert tuple(rows[0]) == CV_REPORT_HEADER
        trials = tiny_pipeline_config.trials
        assert len(rows) == 1 + 2 * trials + 2
        assert [r[0] for r in rows[-2:]] == ["aggregate", "aggregate"]
        assert " +/- " in rows[-1][2]


class TestSweep:
    def test_rows_follow_grid_order(self, tiny_pipeline_config, tiny_cohort):
        cfg = replace(tiny_pipeline_config, trials=1)
        rows = architecture_sweep(tiny_cohort, cfg, grid=[(3,), (4, 2)])
        assert [r.hidden_sizes for r in rows] == [(3,), (4, 2)]
        assert [r.layers for r in rows] == [1, 2]

    def test_default_architecture(self, tiny_pipeline_config, tiny_cohort):
        cfg = replace(tiny_pipeline_config, trials=1)
        (row,) = architecture_sweep(tiny_cohort, cfg, grid=[[70, 50]])
        assert row.layers == 2 and row.hidden_sizes == (70, 50)
        assert row.rmse >= 0.0

    def test_empty_grid(self, tiny_pipeline_config, tiny_cohort):
        with pytest.raises(ConfigError):
            architecture_sweep(tiny_cohort, tiny_pipeline_config, grid=[])

    def test_table_format(self, tmp_path):
        rows = [SweepRow(layers=2, hidden_sizes=(70, 50), accuracy=0.75, f1=None, rmse=1.5)]
        table = _read_csv(write_sweep_table(rows, tmp_path / "table1.csv"))
        assert table[1] == ["2", "70/50", "0.75", "NA", "1.5"]


class TestTrace:
    def test_files_and_shapes(self, tmp_path, stub_models):
        session = make_session("t", frames=48, seed=5)
        result = dump_trace(session, stub_models, tmp_path, window_index=1)
        names = sorted(p.name for p in result.paths)
        assert names == ["input_window.csv", "trace_layer1.csv", "trace_summary.csv"]
        window_len = stub_models.config.window_len
        inputs = _read_csv(tmp_path / "input_window.csv")
        assert inputs[0] == ["t"] + list(CHANNELS)
        assert len(inputs) == window_len + 1
        layer = _read_csv(tmp_path / "trace_layer1.csv")
        assert layer[0] == ["t", "h0", "h1", "h2", "h3"]
        assert len(layer) == window_len + 1

    def test_prediction_matches_window_score(self, tmp_path, stub_models):
        session = make_session("t", frames=48, seed=5)
        scores = predict_sems(session, stub_models).per_window_scores
        for k in range(len(scores)):
            result = dump_trace(session, stub_models, tmp_path / str(k), window_index=k)
            assert result.prediction == pytest.approx(scores[k], rel=1e-9, abs=1e-12)

    def test_window_out_of_range(self, tmp_path, stub_models):
        with pytest.raises(DataError):
            dump_trace(make_session("t", frames=48), stub_models, tmp_path, window_index=3)


class TestInterpretability:
    def test_constant_input_has_zero_importance(self, tiny_pipeline_config, constant_label_cohort):
        cohort = [replace(s, sems_label=float(k)) for k, s in enumerate(constant_label_cohort)]
        assert all(s.meta.gender == Gender.FEMALE for s in cohort)
        models, _ = train_pipeline(cohort, tiny_pipeline_config)
        importance = dict(svr_input_importance(models, cohort, seed=1))
        assert importance["gender"] == 0.0
        assert set(importance) == {"lstm_score", "age", "gender"}

    def test_importance_is_deterministic(self, tiny_pipeline_config, tiny_cohort):
        models, _ = train_pipeline(tiny_cohort, tiny_pipeline_config)
        first = svr_input_importance(models, tiny_cohort, seed=4)
        assert first == svr_input_importance(models, tiny_cohort, seed=4)
        values = [v for _, v in first]
        assert values == sorted(values, reverse=True)

    def test_requires_combiner(self, stub_models, tiny_cohort):
        with pytest.raises(TrainingError):
            svr_input_importance(None, tiny_cohort)
        with pytest.raises(TrainingError):
            svr_input_importance(replace(stub_models, svr=None), tiny_cohort)

    def test_attention_report_and_ranking(self, tiny_pipeline_config, tiny_cohort):
        _, report = train_attention(tiny_cohort, tiny_pipeline_config)
        assert report.overall.shape == (len(CHANNELS),)
        assert report.per_timestep.shape == (tiny_pipeline_config.window_len, len(CHANNELS))
        assert report.overall.sum() == pytest.approx(1.0)
        assert sorted(report.ranking) == sorted(CHANNELS)

        merged = combined_ranking(report, [("lstm_score", 0.9), ("age", 0.3), ("gender", 0.0)])
        assert len(merged) == len(CHANNELS) + 2
        assert "lstm_score" not in [name for name, _, _ in merged]
        scores = [score for _, score, _ in merged]
        assert scores == sorted(scores, reverse=True)


@pytest.mark.slow
class TestSyntheticEndToEnd:
    def test_reduced_profile_learns_synthetic_scores(self):
        cohort = generate_synthetic_cohort(SynthConfig(cohort_size=40), seed=42)
        cfg = PipelineConfig(
            layer_sizes=(20, 15),
            rng_seed=42,
            train=TrainConfig(epochs=50),
        )
        report = run_cv(cohort, cfg)
        assert report.trials == 10
        child = report.aggregate()["child"]
        assert child["rmse"][0] < 1.5
        assert child["accuracy"][0] > 0.7
