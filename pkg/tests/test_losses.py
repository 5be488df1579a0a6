"""Tests for the alignment weights, mask losses and box losses."""

import numpy as np
import pytest

from chuk_grounding.config import AsaConfig, RecLossWeights
from chuk_grounding.errors import DimensionError, PreconditionError
from chuk_grounding.geometry import Aabb, giou_3d
from chuk_grounding.losses import (
    ResLossTerms,
    dice_loss,
    focal_loss,
    fuse_masks,
    giou_loss,
    mask_weighted_dice,
    point_weighted_focal,
    rec_layer_loss,
    rec_losses,
    res_loss,
    total_loss,
    w_dice,
    w_focal,
    w_focal_node,
)
from chuk_grounding.model import BoxPrediction
from chuk_grounding.numeric import Node, Param, Tape


@pytest.fixture
def asa() -> AsaConfig:
    return AsaConfig()


def _prediction(rows: list[list[float]], scores: list[float]) -> BoxPrediction:
    boxes = np.asarray(rows, dtype=np.float64)
    return BoxPrediction(
        centers=Param("centers", boxes[:, :3]),
        sizes=Param("sizes", boxes[:, 3:]),
        scores=Param("scores", [scores]),
        queries=Node(np.zeros((boxes.shape[0], 2))),
    )


class TestFocalWeight:
    """Tests for the per-superpoint focal quality weight."""

    def test_minimum_at_half(self, asa):
        """Test the weight is lowest where the query mask is undecided."""
        assert w_focal(0.5, asa) == pytest.approx(0.738434, abs=1e-6)

    def test_endpoints(self, asa):
        """Test both ends of [0, 1] get the same, largest weight."""
        np.testing.assert_allclose(w_focal([0.0, 1.0], asa), [1.638555, 1.638555], atol=1e-6)

    def test_range(self, asa):
        """Test every probability maps into [0.738434, 1.638555]."""
        weights = w_focal(np.linspace(0.0, 1.0, 101), asa)
        assert weights.min() >= 0.738434 - 1e-6
        assert weights.max() <= 1.638555 + 1e-6

    def test_tape_version_matches(self, asa):
        """Test the recorded weight equals the numpy one."""
        probs = np.array([[0.1, 0.5, 0.8]])
        node = w_focal_node(Tape(), Node(probs), asa)
        np.testing.assert_allclose(node.value, w_focal(probs, asa))


class TestDiceWeight:
    """Tests for the compactness weight of the selected superpoints."""

    def test_one_meter_apart(self):
        """Test two centers 1 m apart."""
        centers = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]
        assert w_dice([1, 1], centers) == pytest.approx(0.5)

    def test_three_meters_apart(self):
        """Test two centers 3 m apart."""
        centers = [[0.0, 0.0, 0.0], [0.0, 3.0, 0.0]]
        assert w_dice([1, 1], centers) == pytest.approx(0.25)

    def test_single_or_no_selection(self):
        """Test one or zero selected superpoints give weight 1."""
        centers = [[0.0, 0.0, 0.0], [5.0, 0.0, 0.0]]
        assert w_dice([1, 0], centers) == 1.0
        assert w_dice([0, 0], centers) == 1.0

    def test_unselected_centers_ignored(self):
        """Test only selected centers enter the mean distance."""
        centers = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [9.0, 9.0, 9.0]]
        assert w_dice([1, 1, 0], centers) == pytest.approx(0.5)

    def test_mean_over_pairs(self):
        """Test three collinear centers: pair distances 1, 2 and 1."""
        centers = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]
        assert w_dice([1, 1, 1], centers) == pytest.approx(1.0 / (1.0 + 4.0 / 3.0))

    def test_length_mismatch(self):
        """Test the mask must cover every center."""
        with pytest.raises(DimensionError):
            w_dice([1, 1], [[0.0, 0.0, 0.0]])


class TestMaskLosses:
    """Tests for focal, dice and fusion."""

    def test_focal_value(self, asa):
        """Test focal loss of p=0.5 against a positive target."""
        loss = focal_loss(Tape(), Node([[0.5]]), [1.0], asa)
        assert loss.item() == pytest.approx(0.043322, abs=1e-6)

    def test_focal_is_a_mean(self, asa):
        """Test the focal loss averages over superpoints."""
        loss = focal_loss(Tape(), Node([[0.5, 0.5]]), [1.0, 1.0], asa)
        assert loss.item() == pytest.approx(0.043322, abs=1e-6)

    def test_dice_all_wrong(self):
        """Test pred = 1 everywhere against an empty target (m = 4, eps = 1)."""
        loss = dice_loss(Tape(), Node(np.ones((1, 4))), np.zeros(4), eps=1.0)
        assert loss.item() == pytest.approx(0.8)

    def test_dice_perfect(self):
        """Test a perfect prediction has zero dice loss."""
        target = np.array([1.0, 0.0, 1.0])
        assert dice_loss(Tape(), Node([target]), target).item() == pytest.approx(0.0)

    def test_length_mismatch(self, asa):
        """Test masks of different length are rejected."""
        with pytest.raises(DimensionError):
            focal_loss(Tape(), Node([[0.5, 0.5]]), [1.0], asa)

    def test_fuse(self):
        """Test mu * Mp + (1 - mu) * Mq."""
        fused = fuse_masks(Tape(), Node([[0.8]]), Node([[0.2]]), Node([[0.5]]))
        assert fused.item() == pytest.approx(0.5)

    def test_fuse_extremes(self):
        """Test mu = 1 keeps the predicted mask and mu = 0 the query mask."""
        mp, mq = Node([[0.9, 0.1]]), Node([[0.3, 0.7]])
        np.testing.assert_allclose(fuse_masks(Tape(), mp, mq, Node([[1.0]])).value, mp.value)
        np.testing.assert_allclose(fuse_masks(Tape(), mp, mq, Node([[0.0]])).value, mq.value)

    def test_point_weighted_focal_weights_terms(self, asa):
        """Test each focal term is scaled by its quality weight."""
        pred = Node([[0.5, 0.5]])
        quality = Node([[0.5, 1.0]])
        loss = point_weighted_focal(Tape(), pred, [1.0, 1.0], quality, asa)
        expected = 0.043322 * (0.738434 + 1.638555) / 2.0
        assert loss.item() == pytest.approx(expected, abs=1e-6)

    def test_stop_weight_grad(self, asa):
        """Test the quality receives gradient only when weights are not constants."""
        pred = Param("pred", [[0.3, 0.6]])
        for stop, expect_grad in ((True, False), (False, True)):
            quality = Param("quality", [[0.2, 0.7]])
            cfg = asa.model_copy(update={"stop_weight_grad": stop})
            tape = Tape()
            tape.backward(point_weighted_focal(tape, pred, [1.0, 0.0], quality, cfg))
            assert bool(np.any(quality.grad != 0.0)) is expect_grad

    def test_mask_weighted_dice(self, asa):
        """Test the dice term scales by the compactness weight."""
        pred = Node(np.ones((1, 2)))
        target = [1.0, 1.0]
        centers = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]
        plain = dice_loss(Tape(), pred, target, asa.dice_eps).item()
        weighted = mask_weighted_dice(Tape(), pred, target, centers, asa).item()
        assert weighted == pytest.approx(0.5 * plain)


class TestResLoss:
    """Tests for the composed mask-branch loss."""

    def _inputs(self):
        mp = Node([[0.7, 0.2, 0.6]])
        mq = Node([[0.6, 0.4, 0.3]])
        fused = fuse_masks(Tape(), mp, mq, Node([[0.5]]))
        gt = np.array([1.0, 0.0, 1.0])
        centers = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        return mp, mq, fused, gt, centers

    def test_asa_off_keeps_only_branch_terms(self, asa):
        """Test only the two masks against ground truth count without alignment."""
        mp, mq, _, gt, centers = self._inputs()
        tape = Tape()
        loss, terms = res_loss(
            tape, mp, mq, [1.0, 0.0, 0.0], mq, None, gt, centers, asa, asa=False
        )
        assert terms.focal_fin == terms.focal_point == 0.0
        assert terms.dice_fin == terms.dice_mask == 0.0
        assert loss.item() == pytest.approx(terms.weighted(asa))

    def test_asa_on_adds_alignment_terms(self, asa):
        """Test the fused and alignment terms enter the loss."""
        mp, mq, fused, gt, centers = self._inputs()
        loss, terms = res_loss(Tape(), mp, mq, [1.0, 0.0, 0.0], mq, fused, gt, centers, asa)
        assert terms.focal_fin > 0.0 and terms.focal_point > 0.0
        assert terms.dice_fin > 0.0 and terms.dice_mask > 0.0
        assert loss.item() == pytest.approx(terms.weighted(asa))

    def test_adaptive_off_uses_plain_terms(self, asa):
        """Test disabling the quality weights falls back to plain focal and dice."""
        mp, mq, fused, gt, centers = self._inputs()
        target = [1.0, 0.0, 0.0]
        _, terms = res_loss(
            Tape(), mp, mq, target, mq, fused, gt, centers, asa, adaptive="off"
        )
        assert terms.focal_point == pytest.approx(focal_loss(Tape(), mp, target, asa).item())
        assert terms.dice_mask == pytest.approx(dice_loss(Tape(), mp, target).item())

    def test_adaptive_point_only(self, asa):
        """Test 'point' weights the focal term and leaves the dice term plain."""
        mp, mq, fused, gt, centers = self._inputs()
        target = [1.0, 1.0, 0.0]
        _, terms = res_loss(
            Tape(), mp, mq, target, mq, fused, gt, centers, asa, adaptive="point"
        )
        weighted = point_weighted_focal(Tape(), mp, target, mq, asa).item()
        assert terms.focal_point == pytest.approx(weighted)
        assert terms.dice_mask == pytest.approx(dice_loss(Tape(), mp, target).item())

    def test_fused_mask_required(self, asa):
        """Test alignment without a fused mask is rejected."""
        mp, mq, _, gt, centers = self._inputs()
        with pytest.raises(PreconditionError):
            res_loss(Tape(), mp, mq, [1.0, 0.0, 0.0], mq, None, gt, centers, asa)

    def test_terms_sum(self):
        """Test the focal and dice sums."""
        terms = ResLossTerms(focal_mp=1.0, focal_point=2.0, dice_mq=0.5, dice_mask=0.25)
        assert terms.focal_sum == 3.0
        assert terms.dice_sum == 0.75
        assert terms.weighted(AsaConfig()) == pytest.approx(31.5)

    def test_total_loss(self, asa):
        """Test gamma1 = 1 / (L + 1) weighting and the optional keypoint term."""
        rec, res = Node([[7.0]]), Node([[2.0]])
        assert total_loss(Tape(), rec, res, asa, rec_layers=6).item() == pytest.approx(3.0)
        with_kps = total_loss(Tape(), rec, res, asa, rec_layers=6, keypoints=Node([[0.5]]))
        assert with_kps.item() == pytest.approx(7.0)


class TestRecLoss:
    """Tests for the box-branch loss."""

    def test_giou_loss_matches_geometry(self):
        """Test 1 - GIoU on the tape agrees with the box geometry."""
        gt = Aabb(center=(0.0, 0.0, 0.0), size=(1.0, 1.0, 1.0))
        pred = Aabb(center=(0.3, -0.2, 0.1), size=(0.8, 1.2, 0.5))
        loss = giou_loss(
            Tape(), Node([list(pred.center)]), Node([list(pred.size)]), gt
        )
        assert loss.item() == pytest.approx(1.0 - giou_3d(pred, gt))

    def test_giou_loss_zero_for_exact_box(self):
        """Test a perfect box has no GIoU loss."""
        gt = Aabb(center=(0.5, 0.5, 0.5), size=(0.2, 0.3, 0.4))
        loss = giou_loss(Tape(), Node([list(gt.center)]), Node([list(gt.size)]), gt)
        assert loss.item() == pytest.approx(0.0, abs=1e-12)

    def test_positive_is_best_overlap(self):
        """Test the positive query is the one overlapping the target most."""
        gt = Aabb(center=(0.0, 0.0, 0.0), size=(1.0, 1.0, 1.0))
        prediction = _prediction(
            [[3.0, 0.0, 0.0, 1.0, 1.0, 1.0], [0.1, 0.0, 0.0, 1.0, 1.0, 1.0]], [0.0, 0.0]
        )
        weights = RecLossWeights()
        _, terms = rec_layer_loss(Tape(), prediction, 1, gt, weights)
        assert terms.center == pytest.approx(0.5 * 0.1**2)
        assert terms.size == pytest.approx(0.0)
        assert terms.score == pytest.approx(np.log(2.0))

    def test_layer_mean(self):
        """Test the loss is the mean over decoder layers with a shared positive."""
        gt = Aabb(center=(0.0, 0.0, 0.0), size=(1.0, 1.0, 1.0))
        near = _prediction([[0.0, 0.0, 0.0, 1.0, 1.0, 1.0], [2.0, 2.0, 2.0, 1.0, 1.0, 1.0]], [0, 0])
        far = _prediction([[0.5, 0.0, 0.0, 1.0, 1.0, 1.0], [2.0, 2.0, 2.0, 1.0, 1.0, 1.0]], [0, 0])
        weights = RecLossWeights()
        loss, terms, positive = rec_losses(Tape(), [near, far], gt, weights)
        assert positive == 0
        assert len(terms) == 2
        expected = (terms[0].weighted(weights) + terms[1].weighted(weights)) / 2.0
        assert loss.item() == pytest.approx(expected)

    def test_no_layers(self):
        """Test an empty layer list is rejected."""
        gt = Aabb(center=(0.0, 0.0, 0.0), size=(1.0, 1.0, 1.0))
        with pytest.raises(PreconditionError):
            rec_losses(Tape(), [], gt, RecLossWeights())
