import numpy as np
import pytest

from lamplan.errors import NumericError, ShapeError, WeightsError
from lamplan.net import (
    SMOKE,
    STANDARD,
    NetConfig,
    WeightStore,
    detect_config,
    forward,
    forward_tensor,
    init_weights,
    param_manifest,
)
from lamplan.volume import Volume


def smoke_volume(seed=0):
    vox = np.random.default_rng(seed).normal(size=SMOKE.input_dims).astype(np.float32)
    return Volume(vox, (1, 1, 1), (0, 0, 0))


@pytest.fixture(scope="module")
def smoke_store():
    return init_weights(SMOKE, seed=123)


class TestManifest:
    def test_standard_shapes(self):
        entries = dict(param_manifest(STANDARD))
        assert entries["enc1.conv1.weight"] == (16, 1, 3, 3, 3)
        assert entries["merge1.conv.weight"] == (16, 128, 1, 1, 1)
        assert entries["dec3.expand.weight"] == (1024, 128, 1, 1, 1)
        assert entries["dec3.conv1.weight"] == (64, 192, 3, 3, 3)
        assert entries["pyramid4.expand.weight"] == (4096, 8, 1, 1, 1)
        assert entries["out.weight"] == (7, 32, 3, 3, 3)

    def test_detect_config(self, smoke_store):
        assert detect_config(smoke_store) is SMOKE
        assert detect_config(init_weights(STANDARD, seed=0)) is STANDARD

    def test_detect_rejects_unknown(self):
        store = WeightStore([("xyz", np.zeros((2, 2), dtype=np.float32))])
        with pytest.raises(ShapeError):
            detect_config(store)

    def test_validate_reports_missing(self, smoke_store):
        manifest = param_manifest(SMOKE)
        partial = WeightStore(
            [(n, v) for n, v in smoke_store.items() if n != "dec2.expand.bias"]
        )
        with pytest.raises(WeightsError, match="dec2.expand.bias"):
            partial.validate(manifest)

    def test_validate_reports_bad_shape(self, smoke_store):
        swapped = [
            (n, np.zeros((3, 3), dtype=np.float32) if n == "out.bias" else v)
            for n, v in smoke_store.items()
        ]
        with pytest.raises(WeightsError, match="out.bias"):
            WeightStore(swapped).validate(param_manifest(SMOKE))


class TestForward:
    def test_smoke_shape(self, smoke_store):
        t = np.random.default_rng(1).normal(size=(1, 1, 24, 32, 32)).astype(np.float32)
        out = forward_tensor(t, smoke_store, SMOKE)
        assert out.shape == (1, 7, 24, 32, 32)
        assert np.all(np.isfinite(out))

    def test_volume_api(self, smoke_store):
        h = forward(smoke_volume(), smoke_store)
        assert h.data.shape == (7, 24, 32, 32)
        assert h.names == ("A", "B", "C", "D", "E", "F", "G")

    def test_deterministic(self, smoke_store):
        vol = smoke_volume(3)
        a = forward(vol, smoke_store).data
        b = forward(vol, smoke_store).data
        assert a.tobytes() == b.tobytes()

    def test_zero_weights_give_bias_output(self):
        params = []
        for name, shape in param_manifest(SMOKE):
            if name.endswith(".var"):
                values = np.ones(shape, dtype=np.float32)
            elif name == "out.bias":
                values = np.full(shape, 0.5, dtype=np.float32)
            else:
                values = np.zeros(shape, dtype=np.float32)
            params.append((name, values))
        out = forward(smoke_volume(), WeightStore(params))
        assert np.all(out.data == 0.5)

    def test_dims_must_match_config(self, smoke_store):
        vol = Volume(np.zeros((24, 32, 30), dtype=np.float32), (1, 1, 1), (0, 0, 0))
        with pytest.raises(ShapeError):
            forward(vol, smoke_store)

    def test_dims_divisibility(self, smoke_store):
        cfg = NetConfig(name="odd", input_dims=(20, 32, 32),
                           stage_widths=SMOKE.stage_widths, pyramid_width=4)
        t = np.zeros((1, 1, 20, 32, 32), dtype=np.float32)
        with pytest.raises(ShapeError, match="divisible"):
            forward_tensor(t, smoke_store, cfg)

    @pytest.mark.filterwarnings("ignore:overflow encountered")
    def test_nonfinite_activation_names_layer(self, smoke_store):
        params = []
        for name, value in smoke_store.items():
            if name == "enc2.bn1.scale":
                value = np.full_like(value, 3.0e38)
            params.append((name, value))
        with pytest.raises(NumericError, match="enc2.bn1"):
            forward(smoke_volume(), WeightStore(params))

    def test_store_rejects_nonfinite_weights(self, smoke_store):
        bad = [(n, v) for n, v in smoke_store.items()]
        bad[0] = (bad[0][0], np.full_like(bad[0][1], np.inf))
        with pytest.raises(WeightsError):
            WeightStore(bad)
