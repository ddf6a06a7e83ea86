import math

import numpy as np
import pytest

from oracles import two_pass_stats

from lamplan.errors import EmptyInputError, ParameterError, ShapeError, SigmaError
from lamplan.heatmap import (
    HeatmapStack,
    aggregate_errors,
    localization_error,
    localize,
    localize_landmarks,
    make_target,
    make_target_stack,
    mse_loss,
)
from lamplan.volume import LandmarkSet, Volume, voxel_to_world


def meta_volume(dims, spacing=(1.0, 1.0, 1.0), origin=(0.0, 0.0, 0.0)):
    return Volume(np.zeros(dims, dtype=np.float32), spacing, origin)


class TestMakeTarget:
    def test_peak_value(self):
        for sigma in (1.0, 2.0, 3.0):
            chan = make_target((9, 9, 9), (4, 4, 4), sigma)
            expected = (2 * math.pi) ** -1.5 / sigma**3
            assert abs(chan[4, 4, 4] - expected) <= 1e-9 * expected

    def test_value_at_sigma_distance(self):
        chan = make_target((11, 11, 11), (5, 5, 5), 2.0)
        peak = chan[5, 5, 5]
        assert np.isclose(chan[5, 5, 7], peak * math.exp(-0.5), rtol=1e-12)

    def test_radial_symmetry(self):
        chan = make_target((11, 11, 11), (5, 5, 5), 1.7)
        assert chan[5, 5, 8] == chan[5, 8, 5] == chan[8, 5, 5]
        assert chan[5, 5, 2] == chan[5, 5, 8]

    def test_discrete_mass_near_one(self):
        for sigma in (1.5, 2.0, 3.0):
            m = int(np.ceil(6 * sigma))
            n = 2 * m + 1
            chan = make_target((n, n, n), (m, m, m), sigma)
            assert abs(chan.sum() - 1.0) < 0.01

    def test_invalid_sigma(self):
        with pytest.raises(SigmaError):
            make_target((5, 5, 5), (2, 2, 2), 0.0)
        with pytest.raises(SigmaError):
            make_target((5, 5, 5), (2, 2, 2), -1.0)

    def test_normalize_flag(self):
        chan = make_target((7, 7, 7), (3, 3, 3), 2.5, normalize=True)
        assert chan[3, 3, 3] == 1.0


class TestLocalize:
    def test_unique_peak(self):
        data = np.zeros((1, 32, 32, 40), dtype=np.float64)
        data[0, 10, 20, 30] = 2.0
        h = HeatmapStack(data, ("A",))
        vol = meta_volume((32, 32, 40), spacing=(0.5, 1.0, 2.0), origin=(3, 4, 5))
        out = localize(h, vol)
        assert np.allclose(out["A"], voxel_to_world(vol, (10, 20, 30)))

    def test_round_trip_exact(self):
        rng = np.random.default_rng(11)
        dims = (20, 24, 18)
        vol = meta_volume(dims, spacing=(0.7, 1.1, 1.9), origin=(-5, 2, 4))
        for _ in range(50):
            p = tuple(int(rng.integers(1, d - 1)) for d in dims)
            sigma = float(rng.uniform(1.0, 5.0))
            h = HeatmapStack(make_target(dims, p, sigma)[None], ("A",))
            out = localize(h, vol)
            assert np.allclose(out["A"], voxel_to_world(vol, p), atol=1e-12)

    def test_tie_breaks_lexicographic(self):
        data = np.zeros((1, 2, 2, 2), dtype=np.float64)
        data[0, 1, 0, 0] = 1.0
        data[0, 0, 0, 1] = 1.0
        vol = meta_volume((2, 2, 2))
        out = localize(HeatmapStack(data, ("A",)), vol)
        assert np.allclose(out["A"], voxel_to_world(vol, (0, 0, 1)))

    def test_flat_channel_warns(self):
        data = np.full((1, 3, 3, 3), 0.25)
        vol = meta_volume((3, 3, 3))
        with pytest.warns(UserWarning, match="degenerate channel"):
            out = localize(HeatmapStack(data, ("A",)), vol)
        assert np.allclose(out["A"], voxel_to_world(vol, (0, 0, 0)))

    def test_dims_must_match(self):
        h = HeatmapStack(np.zeros((1, 3, 3, 3)), ("A",))
        with pytest.raises(ShapeError):
            localize(h, meta_volume((4, 3, 3)))

    def test_seven_channels_make_a_landmark_set(self):
        dims = (10, 12, 14)
        vol = meta_volume(dims)
        pts = {n: (1 + i, 2 + i, 3 + i) for i, n in enumerate("ABCDEFG")}
        lm = LandmarkSet({n: voxel_to_world(vol, p) for n, p in pts.items()})
        stack = make_target_stack(lm, vol, sigma=1.5)
        rec = localize_landmarks(stack, vol)
        for n in lm:
            assert np.allclose(rec[n], lm[n], atol=1e-12)


class TestMseLoss:
    def test_identity_is_zero(self):
        a = np.random.default_rng(0).normal(size=(2, 3, 3, 3))
        assert mse_loss(a, a.copy()) == 0.0

    def test_constant_offset(self):
        a = np.random.default_rng(1).normal(size=(2, 4, 4, 4))
        assert np.isclose(mse_loss(a, a + 0.5), 0.25, rtol=1e-12)

    def test_hand_mean(self):
        assert mse_loss(np.array([[[[0.0, 0.0]]]]), np.array([[[[1.0, 0.0]]]])) == 0.5

    def test_symmetric(self):
        rng = np.random.default_rng(2)
        a = rng.normal(size=(1, 3, 3, 3))
        b = rng.normal(size=(1, 3, 3, 3))
        assert mse_loss(a, b) == mse_loss(b, a)

    def test_quadratic_triangle_bound(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            a, b, c = (rng.normal(size=(1, 2, 3, 4)) for _ in range(3))
            assert mse_loss(a, c) <= 2 * (mse_loss(a, b) + mse_loss(b, c)) + 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            mse_loss(np.zeros((1, 2, 2, 2)), np.zeros((1, 2, 2, 3)))


class TestLocalizationError:
    def test_pythagorean_examples(self):
        assert localization_error((0, 0, 0), (1, 2, 2)) == 3.0
        assert localization_error((1, 1, 1), (1, 1, 1)) == 0.0
        assert localization_error((0, 0, 0), (3, 4, 0)) == 5.0

    def test_metric_properties(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            a, b, c = (rng.uniform(-50, 50, 3) for _ in range(3))
            dab = localization_error(a, b)
            assert dab >= 0
            assert dab == localization_error(b, a)
            assert (dab == 0) == bool(np.all(a == b))
            assert localization_error(a, c) <= dab + localization_error(b, c) + 1e-9

    def test_rejects_nonfinite(self):
        with pytest.raises(ParameterError):
            localization_error((np.inf, 0, 0), (0, 0, 0))


class TestAggregateErrors:
    def test_constant_list(self):
        rep = aggregate_errors([2.0, 2.0, 2.0])
        assert rep.mean_mm == 2.0 and rep.std_mm == 0.0

    def test_hand_computation(self):
        rep = aggregate_errors([1.0, 2.0, 3.0])
        assert rep.mean_mm == 2.0 and np.isclose(rep.std_mm, 1.0, rtol=1e-12)

    def test_single_value(self):
        rep = aggregate_errors([5.0])
        assert rep.mean_mm == 5.0 and rep.std_mm == 0.0

    def test_empty_errors(self):
        with pytest.raises(EmptyInputError):
            aggregate_errors([])

    def test_negative_rejected(self):
        with pytest.raises(ParameterError):
            aggregate_errors([1.0, -0.5])

    def test_matches_two_pass_oracle(self):
        rng = np.random.default_rng(5)
        for n in (2, 3, 10, 101):
            vals = rng.uniform(0, 30, n).tolist()
            rep = aggregate_errors(vals)
            mean, std = two_pass_stats(vals)
            assert abs(rep.mean_mm - mean) <= 1e-12 * max(1.0, abs(mean))
            assert abs(rep.std_mm - std) <= 1e-12 * max(1.0, abs(std))
