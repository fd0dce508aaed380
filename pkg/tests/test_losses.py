import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ddcmatte.core import ImagePlane, ParameterError, Trimap
from ddcmatte.losses import (
    KnownLossSpec,
    LabelMode,
    Normalization,
    Penalty,
    Policy,
    affinity_loss,
    check_gradient,
    dc_loss,
    ddc_loss,
    known_loss,
    loss_probe,
    total_loss,
)
from ddcmatte.neighbors import Padding, build_neighbor_field
from oracles import brute_affinity, brute_dc, brute_ddc, brute_neighbors, central_difference

PAIR = ImagePlane(np.array([[0.2, 0.5]]))


def _field(img, K=3, padding=Padding.VALID):
    return build_neighbor_field(img, K, padding)


# -- hand-computed examples ----------------------------------------------


def test_known_example():
    t = Trimap(np.array([[1.0, 0.5, 0.0]]))
    assert known_loss(np.array([[0.8, 0.3, 0.1]]), t).value == pytest.approx(0.15, abs=1e-15)


def test_known_exact_fit_and_empty_supervision():
    t = Trimap(np.array([[1.0, 0.5, 0.0]]))
    assert known_loss(np.array([[1.0, 0.9, 0.0]]), t).value == 0.0
    res = known_loss(np.array([[0.2, 0.3]]), Trimap(np.full((1, 2), 0.5)))
    assert res.value == 0.0 and res.degenerate and not res.gradient.any()


def test_known_mask_mode_supervises_all():
    t = Trimap(np.array([[1.0, 0.5, 0.0]]))
    spec = KnownLossSpec(label_mode=LabelMode.MASK)
    # unknown binarizes to foreground
    assert known_loss(np.array([[1.0, 0.4, 0.0]]), t, spec).value == pytest.approx(0.6 / 3)


def test_known_bce_value():
    t = Trimap(np.array([[1.0, 0.0]]))
    spec = KnownLossSpec(penalty=Penalty.BCE)
    expected = -(np.log(0.9) + np.log(1 - 0.2)) / 2
    assert known_loss(np.array([[0.9, 0.2]]), t, spec).value == pytest.approx(expected, rel=1e-14)


def test_affinity_example():
    f = _field(ImagePlane(np.array([[0.0, 0.5, 1.0]])))
    assert affinity_loss(np.array([[1.0, 0.5, 0.0]]), f).value == pytest.approx(1 / 9, abs=1e-15)


def test_dc_examples():
    f = _field(PAIR)
    assert dc_loss(np.array([[1.0, 1.0]]), f).value == pytest.approx(0.15, abs=1e-15)
    assert dc_loss(np.array([[0.7, 1.0]]), f).value == pytest.approx(0.0, abs=1e-15)


def test_ddc_examples_share_the_plateau():
    f = _field(PAIR)
    assert ddc_loss(np.array([[1.0, 1.0]]), f).value == pytest.approx(0.15, abs=1e-15)
    assert ddc_loss(np.array([[0.7, 1.0]]), f).value == pytest.approx(0.15, abs=1e-15)


def test_total_examples():
    f = _field(PAIR)
    unk = Trimap(np.full((1, 2), 0.5))
    assert total_loss(np.array([[0.7, 1.0]]), unk, f, 10.0).value == pytest.approx(1.5, abs=1e-14)
    const = ImagePlane(np.full((1, 2), 0.4))
    fg = Trimap(np.ones((1, 2)))
    assert total_loss(np.ones((1, 2)), fg, _field(const), 10.0).value == 0.0


def test_total_rejects_non_positive_lambda():
    with pytest.raises(ParameterError):
        total_loss(np.ones((1, 2)), Trimap(np.ones((1, 2))), _field(PAIR), 0.0)


# -- brute-force oracles --------------------------------------------------

seeds = st.integers(0, 2**31 - 1)


@given(seeds, st.sampled_from([3, 5]), st.sampled_from(list(Padding)), st.sampled_from([1, 3]))
def test_values_match_loop_oracle(seed, K, padding, c):
    rng = np.random.default_rng(seed)
    data = rng.random((5, 4, c))
    a = rng.random((5, 4))
    f = _field(ImagePlane(data), K, padding)
    lists = brute_neighbors(data, K, zero_pad=padding is Padding.ZERO)
    for mode, ref in ((Normalization.REFERENCE, True), (Normalization.PIXEL, False)):
        assert ddc_loss(a, f, mode).value == pytest.approx(brute_ddc(a, lists, ref), rel=1e-12)
        assert dc_loss(a, f, mode).value == pytest.approx(brute_dc(a, lists, ref), rel=1e-12)
    assert affinity_loss(a, f).value == pytest.approx(brute_affinity(a, lists, c), rel=1e-12, abs=1e-15)


@given(seeds, st.sampled_from(["known", "affinity", "dc", "ddc"]), st.sampled_from(list(Padding)))
def test_gradient_matches_independent_differences(seed, name, padding):
    rng = np.random.default_rng(seed)
    img = ImagePlane(rng.random((5, 5, 3)))
    tri = Trimap(rng.choice([0.0, 0.5, 1.0], size=(5, 5)))
    a = rng.random((5, 5))
    f = _field(img, 3, padding)
    fn, kinks = loss_probe(name, tri, f)
    g = fn(a).gradient
    fd = central_difference(lambda x: fn(x).value, a)
    ok = kinks(a) >= 1e-4
    np.testing.assert_allclose(g[ok], fd[ok], rtol=1e-5, atol=1e-9)


def test_check_gradient_on_quadratic():
    from ddcmatte.losses import LossResult

    def quad(a):
        return LossResult(float(np.sum(a**2)), 2 * a)

    rep = check_gradient(quad, np.linspace(0.1, 0.9, 9).reshape(3, 3))
    assert rep.max_rel_error < 1e-8
    assert rep.skipped == 0 and rep.checked == 9


def test_check_gradient_known_l1_no_ties(rng):
    t = Trimap(rng.choice([0.0, 1.0], size=(4, 4)))
    a = rng.uniform(0.1, 0.9, size=(4, 4))
    fn, kinks = loss_probe("known", t, _field(ImagePlane(rng.random((4, 4)))))
    assert check_gradient(fn, a, 1e-5, kinks).max_rel_error < 1e-6


def test_check_gradient_step_range():
    fn, _ = loss_probe("ddc", Trimap(np.ones((1, 2))), _field(PAIR))
    with pytest.raises(ParameterError):
        check_gradient(fn, np.ones((1, 2)), h=1e-2)


def test_kinks_skipped_and_reported():
    fn, kinks = loss_probe("ddc", Trimap(np.ones((1, 2))), _field(PAIR))
    # alpha difference equals the distance: every cross term sits on a kink
    rep = check_gradient(fn, np.array([[0.8, 0.5]]), 1e-5, kinks)
    assert rep.skipped == 2


def test_bce_gradient(rng):
    t = Trimap(rng.choice([0.0, 0.5, 1.0], size=(4, 4)))
    a = rng.uniform(0.05, 0.95, size=(4, 4))
    spec = KnownLossSpec(penalty=Penalty.BCE)
    g = known_loss(a, t, spec).gradient
    fd = central_difference(lambda x: known_loss(x, t, spec).value, a)
    np.testing.assert_allclose(g, fd, rtol=1e-6, atol=1e-10)


# -- identities -------------------------------------------------------------


@given(seeds, st.floats(0.0, 1.0))
def test_affinity_vanishes_on_constant(seed, c):
    rng = np.random.default_rng(seed)
    f = _field(ImagePlane(rng.random((6, 6, 3))), 5)
    assert affinity_loss(np.full((6, 6), c), f).value < 1e-15


@given(seeds, st.floats(-0.2, 0.2))
def test_ddc_shift_invariance(seed, c):
    rng = np.random.default_rng(seed)
    f = _field(ImagePlane(rng.random((6, 6, 3))), 5)
    # dyadic alpha and shift keep every pairwise difference exact in binary
    a = rng.integers(205, 820, size=(6, 6)) / 1024.0
    c = np.round(c * 1024) / 1024.0
    assert ddc_loss(a + c, f).value == ddc_loss(a, f).value


@given(seeds, st.sampled_from([3, 5]))
def test_mode_ratio_is_list_length(seed, K):
    rng = np.random.default_rng(seed)
    f = _field(ImagePlane(rng.random((6, 6, 3))), K, Padding.ZERO)
    a = rng.random((6, 6))
    for loss in (ddc_loss, dc_loss):
        ref = loss(a, f, Normalization.REFERENCE).value
        pixel = loss(a, f, Normalization.PIXEL).value
        assert pixel / ref == pytest.approx(K, rel=1e-12)


@given(seeds)
def test_losses_non_negative(seed):
    rng = np.random.default_rng(seed)
    f = _field(ImagePlane(rng.random((4, 4, 3))), 3)
    t = Trimap(rng.choice([0.0, 0.5, 1.0], size=(4, 4)))
    a = rng.random((4, 4))
    for p in Policy:
        assert total_loss(a, t, f, 10.0, policy=p).value >= 0


def test_dc_zero_iff_distances_copied():
    f = _field(PAIR)
    assert dc_loss(np.array([[0.2, 0.5]]), f).value == pytest.approx(0, abs=1e-15)
    assert dc_loss(np.array([[0.3, 0.5]]), f).value > 0
