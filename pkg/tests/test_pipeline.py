"""Tests for checkpoints, training, evaluation and ablations."""

import json
import logging
import math

import numpy as np
import pytest

from chuk_grounding.errors import (
    ConfigError,
    EmptyEvaluationError,
    NonFiniteLossError,
    PreconditionError,
    UnsupportedVersionError,
)
from chuk_grounding.model import GroundingModel, Prediction
from chuk_grounding.pipeline import (
    VAL_KEYS,
    ablate,
    check_compatible,
    evaluate,
    evaluate_model,
    get_axis,
    list_axes,
    load_checkpoint,
    make_checkpoint,
    oracle_record,
    restore_model,
    restore_training,
    save_checkpoint,
    shuffle_rng,
    train,
    train_step,
)


def _epochs(config, epochs: int, **optim):
    return config.model_copy(
        update={"optim": config.optim.model_copy(update={"epochs": epochs, **optim})}
    )


def _assert_same_params(a, b):
    assert a.keys() == b.keys()
    for name in a:
        np.testing.assert_array_equal(np.asarray(a[name]), np.asarray(b[name]))


class TestCheckpoint:
    """Tests for checkpoint files."""

    def test_round_trip_is_exact(self, tmp_path, toy_config):
        """Test saved parameters, moments and RNG state load back unchanged."""
        model = GroundingModel(toy_config)
        optimizer = model.optimizer()
        rng = shuffle_rng(toy_config.seed)
        rng.permutation(10)
        ckpt = make_checkpoint(model, optimizer, epoch=3, rng=rng)
        path = save_checkpoint(ckpt, tmp_path / "run" / "model.json")
        assert path.exists()
        loaded = load_checkpoint(path)
        assert loaded.epoch == 3
        assert loaded.config == toy_config
        _assert_same_params(loaded.params, ckpt.params)
        assert loaded.rng_state == ckpt.rng_state

    def test_restored_rng_continues_sequence(self, tmp_path, toy_config):
        """Test the shuffling generator resumes where it stopped."""
        model = GroundingModel(toy_config)
        rng = shuffle_rng(toy_config.seed)
        rng.permutation(10)
        path = save_checkpoint(make_checkpoint(model, model.optimizer(), 1, rng), tmp_path / "c")
        _, _, restored = restore_training(load_checkpoint(path))
        np.testing.assert_array_equal(restored.permutation(10), rng.permutation(10))

    def test_restore_model(self, toy_config):
        """Test a restored model has the stored parameter values."""
        model = GroundingModel(toy_config)
        restored = restore_model(make_checkpoint(model))
        for param in model.store:
            np.testing.assert_array_equal(restored.store[param.name].value, param.value)

    def test_no_temporary_files_left(self, tmp_path, toy_config):
        """Test the atomic write leaves only the target file."""
        save_checkpoint(make_checkpoint(GroundingModel(toy_config)), tmp_path / "model.json")
        assert [p.name for p in tmp_path.iterdir()] == ["model.json"]

    def test_unsupported_version(self, tmp_path, toy_config):
        """Test other checkpoint versions are refused."""
        path = save_checkpoint(make_checkpoint(GroundingModel(toy_config)), tmp_path / "c.json")
        raw = json.loads(path.read_text())
        raw["version"] = 2
        path.write_text(json.dumps(raw))
        with pytest.raises(UnsupportedVersionError):
            load_checkpoint(path)

    def test_bad_json(self, tmp_path):
        """Test a file that is not JSON is a config error."""
        path = tmp_path / "c.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_checkpoint(path)

    def test_invalid_document(self, tmp_path):
        """Test a versioned document without a config is a config error."""
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"version": 1, "params": {}}))
        with pytest.raises(ConfigError):
            load_checkpoint(path)


class TestTrainStep:
    """Tests for a single optimizer step."""

    def test_empty_batch(self, toy_config):
        """Test a step needs at least one sample."""
        model = GroundingModel(toy_config)
        with pytest.raises(PreconditionError):
            train_step(model, model.optimizer(), [])

    def test_step_changes_parameters(self, toy_config, sample):
        """Test one step moves the trainable parameters."""
        model = GroundingModel(toy_config)
        before = model.store.to_lists()
        breakdowns = train_step(model, model.optimizer(), [sample])
        assert len(breakdowns) == 1
        assert math.isfinite(breakdowns[0].total)
        after = model.store.to_lists()
        assert any(not np.array_equal(before[name], after[name]) for name in before)

    def test_non_finite_loss_stops_before_update(self, toy_config, sample, monkeypatch):
        """Test a NaN loss raises and leaves the parameters untouched."""
        model = GroundingModel(toy_config)
        original = model.loss

        def nan_loss(tape, batch_sample):
            loss, breakdown = original(tape, batch_sample)
            return loss, breakdown.model_copy(update={"total": float("nan")})

        monkeypatch.setattr(model, "loss", nan_loss)
        before = model.store.to_lists()
        with pytest.raises(NonFiniteLossError):
            train_step(model, model.optimizer(), [sample])
        _assert_same_params(model.store.to_lists(), before)


class TestTrain:
    """Tests for the training loop."""

    def test_empty_training_set(self, toy_config):
        """Test training needs samples."""
        with pytest.raises(PreconditionError):
            train(toy_config, [])

    def test_log_and_checkpoint(self, tmp_path, toy_config, toy_dataset):
        """Test one log entry per epoch, finite losses and validation metrics."""
        log_path = tmp_path / "logs" / "metrics.jsonl"
        result = train(toy_config, toy_dataset[:4], toy_dataset[4:], log_path=log_path)
        assert [entry.epoch for entry in result.log] == [1, 2]
        for entry in result.log:
            assert math.isfinite(entry.loss_total)
            assert entry.val is not None
            assert set(entry.val) == set(VAL_KEYS)
        assert result.checkpoint.epoch == 2
        lines = log_path.read_text().splitlines()
        assert len(lines) == 2
        assert json.loads(lines[0])["epoch"] == 1

    def test_deterministic(self, toy_config, toy_dataset):
        """Test the same config trains to the same parameters."""
        config = _epochs(toy_config, 1)
        a = train(config, toy_dataset)
        b = train(config, toy_dataset)
        _assert_same_params(a.checkpoint.params, b.checkpoint.params)
        assert a.log == b.log

    def test_resume_matches_uninterrupted_run(self, tmp_path, toy_config, toy_dataset):
        """Test stopping after one epoch and resuming reproduces two straight epochs."""
        straight = train(_epochs(toy_config, 2), toy_dataset)
        first = train(_epochs(toy_config, 1), toy_dataset)
        path = save_checkpoint(first.checkpoint, tmp_path / "epoch1.json")
        resumed = train(_epochs(toy_config, 2), toy_dataset, resume=load_checkpoint(path))
        assert [entry.epoch for entry in resumed.log] == [2]
        assert resumed.log[0] == straight.log[1]
        _assert_same_params(resumed.checkpoint.params, straight.checkpoint.params)

    def test_resume_appends_to_log(self, tmp_path, toy_config, toy_dataset):
        """Test a resumed run appends to the metrics log."""
        log_path = tmp_path / "metrics.jsonl"
        first = train(_epochs(toy_config, 1), toy_dataset[:4], log_path=log_path)
        train(_epochs(toy_config, 2), toy_dataset[:4], resume=first.checkpoint, log_path=log_path)
        epochs = [json.loads(line)["epoch"] for line in log_path.read_text().splitlines()]
        assert epochs == [1, 2]

    def test_overfits_one_sample(self, toy_config, sample):
        """Test repeated steps on a single sample lower its loss."""
        config = _epochs(toy_config, 30, batch_size=1)
        result = train(config, [sample])
        assert result.log[-1].loss_total < result.log[0].loss_total

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_second_epoch_lowers_mean_loss(self, toy_config, toy_dataset, seed):
        """Test the mean training loss drops from the first epoch to the second."""
        config = _epochs(toy_config.with_seed(seed), 2, batch_size=1)
        first, second = train(config, toy_dataset).log
        assert second.loss_total < first.loss_total


class TestEvaluate:
    """Tests for evaluation."""

    def test_oracle_scores_perfectly(self, toy_dataset):
        """Test the ground truth scores IoU 1 on both branches."""
        for item in toy_dataset:
            record = oracle_record(item)
            assert record.rec_iou == pytest.approx(1.0)
            assert record.res_iou == pytest.approx(1.0)

    def test_ground_truth_predictions_give_perfect_report(
        self, toy_config, toy_dataset, monkeypatch
    ):
        """Test evaluating ground-truth predictions reports full accuracy and no conflicts."""
        by_id = {item.id: item for item in toy_dataset}

        def ground_truth(self, sample, tokens=None):
            item = by_id[sample.id]
            return Prediction(
                box=item.gt_box,
                selected=0,
                superpoint_mask=item.gt_superpoint_mask,
                point_mask=item.gt_point_mask,
            )

        monkeypatch.setattr(GroundingModel, "predict", ground_truth)
        report, records = evaluate(make_checkpoint(GroundingModel(toy_config)), toy_dataset)
        assert len(records) == len(toy_dataset)
        for metrics in (report, report.unique, report.multiple):
            if metrics.count == 0:
                continue
            accuracies = (
                metrics.rec_acc_025,
                metrics.rec_acc_05,
                metrics.res_acc_025,
                metrics.res_acc_05,
            )
            assert accuracies == (1.0, 1.0, 1.0, 1.0)
            assert metrics.miou == pytest.approx(1.0)
            assert metrics.die3 == 0.0
        assert report.unique.count + report.multiple.count == report.count

    def test_report_covers_samples(self, toy_config, toy_dataset):
        """Test one record per sample and a report over all of them."""
        ckpt = make_checkpoint(GroundingModel(toy_config))
        report, records = evaluate(ckpt, toy_dataset)
        assert report.count == len(toy_dataset)
        assert [r.id for r in records] == [s.id for s in toy_dataset]
        assert report.unique.count + report.multiple.count == report.count
        assert 0.0 <= report.die3 <= 1.0

    def test_hide_object_name(self, toy_config, toy_dataset):
        """Test the anonymised expression path evaluates every sample."""
        report, _ = evaluate_model(GroundingModel(toy_config), toy_dataset, hide_object_name=True)
        assert report.count == len(toy_dataset)

    def test_incompatible_cloud_size(self, toy_config, sample):
        """Test a sample with another point count is refused."""
        with pytest.raises(ConfigError, match="points"):
            evaluate(make_checkpoint(GroundingModel(toy_config)), [sample])

    def test_incompatible_tokens(self, toy_config, toy_dataset):
        """Test token ids outside the model vocabulary are refused."""
        with pytest.raises(ConfigError, match="vocabulary"):
            check_compatible(toy_config, toy_dataset, vocab_size=1)

    def test_no_samples(self, toy_config):
        """Test evaluating nothing is an error."""
        with pytest.raises(EmptyEvaluationError):
            evaluate(make_checkpoint(GroundingModel(toy_config)), [])


class TestAblate:
    """Tests for paired ablation runs."""

    def test_axes(self):
        """Test the known axes and unknown-axis errors."""
        assert list_axes() == ["asa", "rsa", "align_target", "fusion", "adaptive_losses"]
        assert get_axis("align-target") == ({"align_target": "mask"}, {"align_target": "box"})
        with pytest.raises(ValueError, match="not found"):
            get_axis("dropout")

    def test_needs_seeds(self, toy_config, toy_dataset):
        """Test an empty seed list is rejected."""
        with pytest.raises(ValueError):
            ablate(toy_config, "asa", [], toy_dataset, toy_dataset)

    def test_paired_runs(self, toy_config, toy_dataset, caplog):
        """Test both settings run per seed and deltas cover every metric."""
        config = _epochs(toy_config, 1)
        with caplog.at_level(logging.WARNING, logger="chuk_grounding.pipeline.ablate"):
            report = ablate(config, "asa", [0], toy_dataset[:4], toy_dataset[4:])
        assert "seed" in caplog.text
        assert [(run.setting, run.seed) for run in report.runs] == [("on", 0), ("off", 0)]
        assert report.runs[1].flags == {"asa": "off"}
        assert set(report.deltas) == set(VAL_KEYS)
        assert report.headline == "die3"
        assert math.isfinite(report.headline_delta)
