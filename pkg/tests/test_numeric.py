"""Tests for the tape, parameters, MLPs, AdamW and the gradient checker."""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from chuk_grounding.errors import (
    ConfigError,
    DimensionError,
    NonFiniteGradientError,
    PreconditionError,
)
from chuk_grounding.numeric import (
    MASKED,
    AdamW,
    MlpSpec,
    Node,
    Param,
    ParamStore,
    Tape,
    as_matrix,
    grad_check,
    init_mlp,
    mlp_forward,
)


def _store(seed: int = 0) -> ParamStore:
    return ParamStore(np.random.default_rng(seed))


class TestTape:
    """Forward values and backward sweeps of individual ops."""

    def test_as_matrix_shapes(self):
        """Test scalars and vectors become 2-D rows."""
        assert as_matrix(3.0).shape == (1, 1)
        assert as_matrix([1.0, 2.0]).shape == (1, 2)
        with pytest.raises(DimensionError):
            as_matrix(np.zeros((2, 2, 2)))

    def test_matmul_gradient(self):
        """Test d sum(AB) / dA is the row sums of B broadcast."""
        a = Param("a", [[1.0, 2.0], [3.0, 4.0]])
        b = Param("b", [[1.0, 0.0], [2.0, 1.0]])
        tape = Tape()
        out = tape.matmul(a, b)
        np.testing.assert_allclose(out.value, [[5.0, 2.0], [11.0, 4.0]])
        tape.backward(tape.sum(out))
        np.testing.assert_allclose(a.grad, [[1.0, 3.0], [1.0, 3.0]])
        np.testing.assert_allclose(b.grad, [[4.0, 4.0], [6.0, 6.0]])

    def test_matmul_shape_mismatch(self):
        """Test incompatible operands raise DimensionError."""
        with pytest.raises(DimensionError):
            Tape().matmul(Param("a", np.ones((2, 3))), Param("b", np.ones((2, 3))))

    def test_broadcast_add_reduces_gradient(self):
        """Test a broadcast row receives the column sums."""
        a = Param("a", np.ones((3, 2)))
        row = Param("row", [[0.5, -0.5]])
        tape = Tape()
        tape.backward(tape.sum(tape.add(a, row)))
        np.testing.assert_allclose(row.grad, [[3.0, 3.0]])

    def test_backward_needs_scalar(self):
        """Test backward rejects non-scalar losses."""
        tape = Tape()
        with pytest.raises(DimensionError):
            tape.backward(tape.add(Param("a", np.ones((2, 2))), Param("b", np.ones((2, 2)))))

    def test_backward_seed_scales_gradients(self):
        """Test the seed multiplies every gradient."""
        a = Param("a", [[2.0]])
        tape = Tape()
        tape.backward(tape.mul(a, a), seed=0.25)
        np.testing.assert_allclose(a.grad, [[1.0]])

    def test_constant_gets_no_gradient(self):
        """Test constants are not differentiated."""
        tape = Tape()
        c = tape.constant([[1.0, 2.0]])
        a = Param("a", [[3.0, 4.0]])
        tape.backward(tape.sum(tape.mul(a, c)))
        assert c.grad is None
        np.testing.assert_allclose(a.grad, [[1.0, 2.0]])

    def test_softplus_at_zero(self):
        """Test softplus(0) = ln 2."""
        out = Tape().softplus(Node([[0.0]]))
        assert out.item() == pytest.approx(math.log(2.0))

    def test_row_softmax_masked_entries(self):
        """Test masked entries get zero weight."""
        mask = np.array([[0.0, MASKED, 0.0]])
        out = Tape().row_softmax(Node([[1.0, 5.0, 1.0]]), mask)
        np.testing.assert_allclose(out.value, [[0.5, 0.0, 0.5]])

    def test_row_softmax_fully_masked_row_falls_back(self):
        """Test a fully masked row uses the unmasked softmax."""
        logits = np.array([[0.0, math.log(3.0)]])
        mask = np.full((1, 2), MASKED)
        out = Tape().row_softmax(Node(logits), mask)
        np.testing.assert_allclose(out.value, [[0.25, 0.75]])

    def test_maxpool_groups_ties_go_to_lowest_offset(self):
        """Test tied rows route the gradient to the first one."""
        a = Param("a", [[1.0, 2.0], [1.0, 5.0]])
        tape = Tape()
        pooled, winners = tape.maxpool_groups(a, 2)
        np.testing.assert_allclose(pooled.value, [[1.0, 5.0]])
        assert winners.tolist() == [[0, 1]]
        tape.backward(tape.sum(pooled))
        np.testing.assert_allclose(a.grad, [[1.0, 0.0], [0.0, 1.0]])

    def test_maxpool_rows_needs_rows(self):
        """Test pooling over zero rows is rejected."""
        with pytest.raises(PreconditionError):
            Tape().maxpool_rows(Node(np.zeros((0, 3))))

    def test_maxpool_groups_must_divide(self):
        """Test the row count must be a multiple of the group."""
        with pytest.raises(DimensionError):
            Tape().maxpool_groups(Node(np.zeros((3, 2))), 2)

    def test_focal_terms_value(self):
        """Test focal(p=0.5, t=1, gamma=2, alpha=0.25)."""
        out = Tape().focal_terms(Node([[0.5]]), np.array([[1.0]]), 2.0, 0.25)
        assert out.item() == pytest.approx(0.043322, abs=1e-6)

    def test_index_rows_accumulates_repeats(self):
        """Test a row gathered twice gets twice the gradient."""
        a = Param("a", np.arange(6.0).reshape(3, 2))
        tape = Tape()
        tape.backward(tape.sum(tape.index_rows(a, [2, 2, 0])))
        np.testing.assert_allclose(a.grad, [[1.0, 1.0], [0.0, 0.0], [2.0, 2.0]])

    def test_tape_is_cleared_after_backward(self):
        """Test the recorded steps are consumed."""
        tape = Tape()
        a = Param("a", [[1.0]])
        tape.sum(tape.mul(a, a))
        assert len(tape) > 0
        tape.backward(tape.sum(a))
        assert len(tape) == 0


class TestParamStore:
    """Tests for the parameter registry."""

    def test_duplicate_name(self):
        """Test registering a name twice fails."""
        store = _store()
        store.zeros("w", 2, 2)
        with pytest.raises(PreconditionError):
            store.zeros("w", 2, 2)

    def test_unknown_name(self):
        """Test lookup of a missing parameter."""
        with pytest.raises(KeyError):
            _store()["missing"]

    def test_same_seed_same_values(self):
        """Test initialisation is determined by the seed."""
        a, b = _store(7), _store(7)
        np.testing.assert_array_equal(a.uniform("w", 3, 4).value, b.uniform("w", 3, 4).value)

    def test_uniform_bound(self):
        """Test uniform init stays within 1/sqrt(fan_in)."""
        param = _store().uniform("w", 16, 8)
        assert np.all(np.abs(param.value) <= 0.25)

    def test_freeze_by_prefix(self):
        """Test freeze marks only matching names."""
        store = _store()
        store.zeros("encoder.a", 1, 1)
        store.zeros("encoder.b", 1, 1)
        store.zeros("rec.c", 1, 1)
        assert store.freeze("encoder.") == 2
        assert not store["rec.c"].frozen

    def test_load_lists_round_trip(self):
        """Test values survive to_lists/load_lists."""
        source = _store(1)
        source.uniform("w", 2, 3)
        target = _store(2)
        target.uniform("w", 2, 3)
        target.load_lists(source.to_lists())
        np.testing.assert_array_equal(target["w"].value, source["w"].value)

    def test_load_lists_mismatch(self):
        """Test missing names and wrong shapes are rejected."""
        store = _store()
        store.zeros("w", 2, 2)
        with pytest.raises(ConfigError, match="missing"):
            store.load_lists({})
        with pytest.raises(ConfigError, match="shape"):
            store.load_lists({"w": [[0.0, 0.0, 0.0]]})


class TestMlp:
    """Tests for MLP specs and forward passes."""

    def test_spec_needs_one_activation_per_layer(self):
        """Test mismatched activations are rejected."""
        with pytest.raises(ValidationError):
            MlpSpec(widths=[3, 4, 2], activations=["relu"])

    def test_zero_mlp_outputs_zero(self):
        """Test a zero-initialised MLP maps everything to zero."""
        store = _store()
        mlp = init_mlp(store, "m", MlpSpec.hidden(3, 4, 2), zero=True)
        out = mlp_forward(Tape(), mlp, Node(np.ones((5, 3))))
        np.testing.assert_array_equal(out.value, np.zeros((5, 2)))

    def test_input_width_checked(self):
        """Test the first width must match the input."""
        mlp = init_mlp(_store(), "m", MlpSpec.hidden(3, 4, 2))
        with pytest.raises(DimensionError):
            mlp_forward(Tape(), mlp, Node(np.ones((1, 2))))


class TestAdamW:
    """Tests for the optimizer."""

    def test_step_moves_against_gradient(self):
        """Test the first step moves each entry by about lr against its gradient sign."""
        store = _store()
        param = store.add(Param("w", [[1.0, -1.0]]))
        optimizer = AdamW(store, lr=0.1, weight_decay=0.0)
        param.grad = np.array([[2.0, -3.0]])
        optimizer.step()
        np.testing.assert_allclose(param.value, [[0.9, -0.9]], atol=1e-6)
        np.testing.assert_array_equal(param.grad, np.zeros((1, 2)))

    def test_frozen_parameters_do_not_move(self):
        """Test frozen parameters are skipped."""
        store = _store()
        param = store.add(Param("w", [[1.0]], frozen=True))
        param.grad = np.array([[5.0]])
        AdamW(store, lr=0.1).step()
        np.testing.assert_array_equal(param.value, [[1.0]])

    def test_lr_groups(self):
        """Test the first matching prefix picks the learning rate."""
        optimizer = AdamW(_store(), lr=1e-3, lr_groups=[("encoder.point_mlp", 2e-3)])
        assert optimizer.lr_for("encoder.point_mlp.w0") == 2e-3
        assert optimizer.lr_for("rec.box_head.w0") == 1e-3

    def test_non_finite_gradient_aborts(self):
        """Test a NaN gradient raises before any parameter changes."""
        store = _store()
        good = store.add(Param("a", [[1.0]]))
        bad = store.add(Param("b", [[1.0]]))
        good.grad = np.array([[1.0]])
        bad.grad = np.array([[np.nan]])
        with pytest.raises(NonFiniteGradientError) as excinfo:
            AdamW(store, lr=0.1).step()
        assert excinfo.value.parameter == "b"
        np.testing.assert_array_equal(good.value, [[1.0]])

    def test_state_dict_round_trip(self):
        """Test moments and the step count survive a state round trip."""
        store = _store()
        param = store.add(Param("w", [[1.0, 2.0]]))
        optimizer = AdamW(store, lr=0.01)
        param.grad = np.array([[0.5, -0.5]])
        optimizer.step()
        restored = AdamW(store, lr=0.01)
        restored.load_state_dict(optimizer.state_dict())
        assert restored.step_count == 1
        np.testing.assert_array_equal(restored.m["w"], optimizer.m["w"])
        np.testing.assert_array_equal(restored.v["w"], optimizer.v["w"])


class TestGradCheck:
    """Tests for the finite-difference checker itself."""

    def test_correct_gradient_passes(self):
        """Test a correct backward passes."""
        a = Param("a", [[0.3, -0.7, 1.2]])
        report = grad_check(lambda t: t.sum(t.mul(t.sigmoid(a), a)), [a], name="sig")
        assert report.passed
        assert report.checked_entries == 3

    def test_corrupted_backward_is_caught(self):
        """Test a deliberately wrong backward fails the check."""
        a = Param("a", [[0.5, 1.5]])

        def broken(tape: Tape) -> Node:
            out = Node(a.value**2)
            tape.record(out, lambda g: a.accumulate(g * 3.0 * a.value))
            return tape.sum(out)

        report = grad_check(broken, [a], name="broken")
        assert not report.passed
        assert report.max_rel_error == pytest.approx(0.2, rel=1e-3)

    def test_corrupted_backward_caught_at_tiny_scale(self):
        """Test a wrong backward on a 1e-9-scaled term still fails."""
        a = Param("a", [[0.5, 1.5, -2.0]])

        def broken(tape: Tape) -> Node:
            out = Node(1e-9 * a.value**2)
            tape.record(out, lambda g: a.accumulate(g * 6e-9 * a.value))
            return tape.sum(out)

        report = grad_check(broken, [a], name="tiny")
        assert not report.passed
        assert report.per_param["a"] == pytest.approx(0.5, rel=1e-3)

    def test_correct_backward_passes_at_tiny_scale(self):
        """Test a correct backward on a 1e-9-scaled term passes."""
        a = Param("a", [[0.5, 1.5, -2.0]])
        report = grad_check(lambda t: t.scale(t.sum(t.mul(a, a)), 1e-9), [a], name="tiny")
        assert report.passed

    def test_max_entries_limits_perturbations(self):
        """Test only the requested number of entries is checked."""
        a = Param("a", np.linspace(-1.0, 1.0, 20).reshape(4, 5))
        report = grad_check(lambda t: t.sum(t.mul(a, a)), [a], max_entries=6)
        assert report.checked_entries == 6
        assert report.passed

    def test_parameters_restored(self):
        """Test perturbed values and gradients are put back."""
        a = Param("a", [[0.25, 0.5]])
        before = a.value.copy()
        grad_check(lambda t: t.sum(t.exp(a)), [a])
        np.testing.assert_array_equal(a.value, before)
        np.testing.assert_array_equal(a.grad, np.zeros((1, 2)))
