import numpy as np
import pytest

from lamplan.errors import BoundsError, ExtentError, ParameterError, ShapeError, WindowError
from lamplan.volume import (
    BoundingBox,
    LandmarkSet,
    Volume,
    apply_window,
    crop,
    map_landmarks,
    resample,
    voxel_to_world,
    world_to_voxel,
)


def make_vol(values, spacing=(1.0, 1.0, 1.0), origin=(0.0, 0.0, 0.0)):
    return Volume(np.asarray(values, dtype=np.float32), spacing, origin)


class TestVolumeType:
    def test_dims_and_dtype(self, small_volume):
        assert small_volume.dims == (12, 10, 8)
        assert small_volume.voxels.dtype == np.float32

    def test_rejects_bad_dims(self):
        with pytest.raises(ShapeError):
            Volume(np.zeros((0, 4, 4), dtype=np.float32), (1, 1, 1), (0, 0, 0))
        with pytest.raises(ShapeError):
            Volume(np.zeros((4, 4), dtype=np.float32), (1, 1, 1), (0, 0, 0))

    def test_rejects_bad_spacing(self):
        with pytest.raises(ParameterError):
            Volume(np.zeros((2, 2, 2), dtype=np.float32), (1, 0, 1), (0, 0, 0))
        with pytest.raises(ParameterError):
            Volume(np.zeros((2, 2, 2), dtype=np.float32), (1, 1, -2), (0, 0, 0))

    def test_voxels_immutable(self, small_volume):
        with pytest.raises(ValueError):
            small_volume.voxels[0, 0, 0] = 1.0


class TestApplyWindow:
    def test_boundary_values(self):
        vol = make_vol([[[-200.0, 600.0, 200.0]]])
        out = apply_window(vol, -200, 600)
        assert out.voxels[0, 0, 0] == 0.0
        assert out.voxels[0, 0, 1] == 1.0
        assert out.voxels[0, 0, 2] == 0.5

    def test_clamps_outside(self):
        vol = make_vol([[[-1000.0, 5000.0]]])
        out = apply_window(vol, -200, 600)
        assert out.voxels[0, 0, 0] == 0.0
        assert out.voxels[0, 0, 1] == 1.0

    def test_metadata_unchanged(self, small_volume):
        out = apply_window(small_volume, -200, 600)
        assert out.dims == small_volume.dims
        assert out.spacing == small_volume.spacing
        assert out.origin == small_volume.origin

    def test_invalid_window(self, small_volume):
        with pytest.raises(WindowError):
            apply_window(small_volume, 600, -200)
        with pytest.raises(WindowError):
            apply_window(small_volume, 100, 100)

    def test_monotone_and_bounded(self):
        rng = np.random.default_rng(7)
        vol = make_vol(rng.uniform(-800, 1200, size=(40, 30, 20)))
        out = apply_window(vol, -200, 600).voxels
        assert out.min() >= 0.0 and out.max() <= 1.0
        order = np.argsort(vol.voxels, axis=None, kind="stable")
        sorted_out = out.flatten()[order]
        assert np.all(np.diff(sorted_out) >= 0)


class TestCrop:
    def test_spec_dims(self):
        vol = make_vol(np.zeros((100, 200, 200), dtype=np.float32))
        box = BoundingBox(lo=(10, 20, 20), hi=(81, 147, 147))
        assert box.dims == (72, 128, 128)
        assert crop(vol, box).dims == (72, 128, 128)

    def test_values_and_origin(self, small_volume):
        box = BoundingBox(lo=(2, 1, 3), hi=(7, 8, 6))
        out = crop(small_volume, box)
        assert out.dims == (6, 8, 4)
        assert np.array_equal(out.voxels, small_volume.voxels[2:8, 1:9, 3:7])
        sx, sy, sz = small_volume.spacing
        ox, oy, oz = small_volume.origin
        assert out.origin == (ox + 3 * sx, oy + 1 * sy, oz + 2 * sz)

    def test_identity_crop(self, small_volume):
        nz, ny, nx = small_volume.dims
        out = crop(small_volume, BoundingBox((0, 0, 0), (nz - 1, ny - 1, nx - 1)))
        assert np.array_equal(out.voxels, small_volume.voxels)
        assert out.origin == small_volume.origin

    def test_hi_must_be_inclusive_in_range(self, small_volume):
        with pytest.raises(BoundsError):
            crop(small_volume, BoundingBox((0, 0, 0), small_volume.dims))

    def test_nested_crop_composes(self, small_volume):
        outer = BoundingBox((1, 2, 0), (10, 9, 7))
        inner = BoundingBox((2, 1, 3), (6, 5, 4))
        once = crop(crop(small_volume, outer), inner)
        composed = BoundingBox(
            tuple(o + i for o, i in zip(outer.lo, inner.lo)),
            tuple(o + i for o, i in zip(outer.lo, inner.hi)),
        )
        direct = crop(small_volume, composed)
        assert np.array_equal(once.voxels, direct.voxels)
        assert once.origin == direct.origin

    def test_bad_box(self):
        with pytest.raises(BoundsError):
            BoundingBox((5, 0, 0), (4, 9, 9))
        with pytest.raises(BoundsError):
            BoundingBox((-1, 0, 0), (4, 9, 9))


class TestResample:
    def test_identity(self, small_volume):
        out = resample(small_volume, small_volume.dims)
        assert np.max(np.abs(out.voxels - small_volume.voxels)) <= 1e-6
        assert out.spacing == small_volume.spacing
        assert out.origin == small_volume.origin

    def test_constant_stays_constant(self):
        vol = make_vol(np.full((9, 11, 13), 3.25, dtype=np.float32))
        out = resample(vol, (17, 5, 30))
        assert np.all(out.voxels == np.float32(3.25))

    def test_requested_dims(self, small_volume):
        out = resample(small_volume, (72, 128, 128))
        assert out.dims == (72, 128, 128)

    def test_extent_preserved(self, small_volume):
        out = resample(small_volume, (7, 21, 5))
        assert np.allclose(out.extent_mm(), small_volume.extent_mm(), rtol=1e-12)
        assert out.origin == small_volume.origin

    def test_bounds_preserved(self, small_volume):
        out = resample(small_volume, (30, 7, 19))
        assert out.voxels.min() >= small_volume.voxels.min() - 1e-3
        assert out.voxels.max() <= small_volume.voxels.max() + 1e-3

    def test_matches_reference(self, small_volume):
        from oracles import trilinear_ref

        out = resample(small_volume, (5, 7, 9))
        ref = trilinear_ref(small_volume.voxels, (5, 7, 9))
        assert np.allclose(out.voxels, ref, rtol=1e-5, atol=1e-3)

    def test_bad_dims(self, small_volume):
        with pytest.raises(ParameterError):
            resample(small_volume, (0, 5, 5))


class TestCoordinates:
    def test_origin_maps_to_origin(self, small_volume):
        assert np.allclose(voxel_to_world(small_volume, (0, 0, 0)), small_volume.origin)

    def test_unit_step(self):
        vol = make_vol(np.zeros((4, 4, 4), dtype=np.float32), spacing=(2, 2, 2), origin=(1, 2, 3))
        assert np.allclose(voxel_to_world(vol, (1, 1, 1)), (3.0, 4.0, 5.0))

    def test_round_trip(self, small_volume):
        rng = np.random.default_rng(3)
        pts = rng.uniform(-50, 80, size=(10_000, 3))
        back = voxel_to_world(small_volume, world_to_voxel(small_volume, pts))
        assert np.max(np.abs(back - pts)) < 1e-9

    def test_fractional_indices(self, small_volume):
        w = voxel_to_world(small_volume, (0.5, 0.25, -1.5))
        sx, sy, sz = small_volume.spacing
        ox, oy, oz = small_volume.origin
        assert np.allclose(w, (ox - 1.5 * sx, oy + 0.25 * sy, oz + 0.5 * sz))


class TestMapLandmarks:
    def lms_at(self, points):
        base = {n: [35.0, 35.0, float(10 + i)] for i, n in enumerate("ABCDEFG")}
        base.update(points)
        return LandmarkSet(base)

    def test_hand_affine_example(self):
        src = make_vol(np.zeros((100, 100, 100), dtype=np.float32))
        dst = Volume(np.zeros((50, 50, 50), dtype=np.float32), (2, 2, 2), (0, 0, 0))
        lm = self.lms_at({"A": [10.0, 10.0, 10.0]})  # world == src voxel (10,10,10)
        out = map_landmarks(lm, src, dst)
        assert np.allclose(world_to_voxel(dst, out["A"]), (5.0, 5.0, 5.0), atol=1e-12)

    def test_grid_center_invariant(self):
        src = make_vol(np.zeros((100, 100, 100), dtype=np.float32))
        dst = Volume(np.zeros((50, 50, 50), dtype=np.float32), (2, 2, 2), (0, 0, 0))
        center_world = voxel_to_world(src, (50.0, 50.0, 50.0))  # fractional dims/2
        lm = self.lms_at({"A": center_world})
        out = map_landmarks(lm, src, dst)
        assert np.allclose(world_to_voxel(dst, out["A"]), (25.0, 25.0, 25.0), atol=1e-12)

    def test_identity(self, small_volume):
        lm = self.lms_at({})
        out = map_landmarks(lm, small_volume, small_volume)
        for name in lm:
            assert np.allclose(out[name], lm[name], atol=1e-12)

    def test_consistent_with_resample(self, small_volume):
        lm = self.lms_at({"A": voxel_to_world(small_volume, (4.0, 5.0, 2.0))})
        dst = resample(small_volume, (24, 20, 16))
        out = map_landmarks(lm, small_volume, dst)
        # resample preserves origin and extent, so world positions are fixed
        assert np.allclose(out["A"], lm["A"], atol=1e-9)

    def test_extent_mismatch(self, small_volume):
        other = make_vol(np.zeros((5, 5, 5), dtype=np.float32))
        with pytest.raises(ExtentError):
            map_landmarks(self.lms_at({}), small_volume, other)


class TestLandmarkSet:
    def test_requires_all_seven(self):
        with pytest.raises(ParameterError):
            LandmarkSet({n: [0, 0, float(i)] for i, n in enumerate("ABCDEF")})

    def test_rejects_nonfinite(self):
        pts = {n: [0.0, 0.0, float(i)] for i, n in enumerate("ABCDEFG")}
        pts["C"] = [np.nan, 0.0, 0.0]
        with pytest.raises(ParameterError):
            LandmarkSet(pts)

    def test_rejects_equal_ab(self):
        pts = {n: [0.0, 0.0, float(i)] for i, n in enumerate("ABCDEFG")}
        pts["B"] = pts["A"]
        with pytest.raises(ParameterError):
            LandmarkSet(pts)

    def test_round_trips_dict(self):
        pts = {n: [float(i), 2.0, -1.5] for i, n in enumerate("ABCDEFG")}
        lm = LandmarkSet(pts)
        assert lm.as_dict() == pts
