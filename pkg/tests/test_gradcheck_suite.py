"""Tests for the gradient-check suite."""

import numpy as np
import pytest

from chuk_grounding.numeric import Tape
from chuk_grounding.pipeline import (
    gradcheck_suite,
    loss_fn_checks,
    module_checks,
    op_checks,
    readout,
)


def test_readout_weights_entries_distinctly():
    """Test the readout is a fixed non-uniform weighted sum."""
    tape = Tape()
    node = tape.constant(np.ones((2, 2)))
    expected = np.sin(np.arange(1, 5)).sum()
    assert readout(tape, node).item() == pytest.approx(expected)


def test_op_checks_pass():
    """Test every tape op matches finite differences."""
    reports = op_checks()
    assert reports
    assert all(report.name.startswith("op.") for report in reports)
    assert [report.name for report in reports if not report.passed] == []


def test_loss_fn_checks_pass():
    """Test the mask losses, weights, fusion and GIoU match finite differences."""
    reports = loss_fn_checks()
    names = {report.name for report in reports}
    assert {"loss.focal_loss", "loss.dice_loss", "loss.fuse_masks", "loss.giou_loss"} <= names
    assert [report.name for report in reports if not report.passed] == []


def test_module_checks_pass(toy_config, sample):
    """Test each model component matches finite differences."""
    reports = module_checks(toy_config, sample)
    assert {report.name for report in reports} == {
        "module.encoder",
        "module.rsa",
        "module.res_decoder",
        "module.rec_branch",
    }
    assert [report.name for report in reports if not report.passed] == []


def test_suite_passes_on_toy_preset():
    """Test the whole suite passes, ending with the full loss."""
    report = gradcheck_suite()
    assert report.passed, [f.name for f in report.failures()]
    assert report.checks[-1].name == "loss.total"
    assert report.checks[-1].checked_entries > 0
    assert report.seconds > 0.0
