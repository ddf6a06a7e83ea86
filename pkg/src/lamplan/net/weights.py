"""Named parameter storage with manifest validation and random init."""

from __future__ import annotations

import numpy as np

from ..errors import WeightsError


class WeightStore:
    """Ordered, immutable mapping of parameter name -> float32 array."""

    def __init__(self, params):
        self._params: dict[str, np.ndarray] = {}
        for name, value in params.items() if isinstance(params, dict) else params:
            arr = np.ascontiguousarray(np.asarray(value, dtype=np.float32))
            if not np.all(np.isfinite(arr)):
                raise WeightsError(f"parameter {name} contains non-finite values")
            arr.setflags(write=False)
            self._params[str(name)] = arr

    def get(self, name: str) -> np.ndarray:
        try:
            return self._params[name]
        except KeyError:
            raise WeightsError(f"missing parameter {name}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def items(self):
        return self._params.items()

    def manifest(self) -> list[tuple[str, tuple[int, ...]]]:
        return [(name, arr.shape) for name, arr in self._params.items()]

    def matches(self, manifest) -> bool:
        return self.manifest() == [(n, tuple(s)) for n, s in manifest]

    def validate(self, manifest) -> None:
        """Check the exact name sequence and shapes against a manifest."""
        have = self.manifest()
        want = [(n, tuple(s)) for n, s in manifest]
        if have == want:
            return
        have_d = dict(have)
        for name, shape in want:
            if name not in have_d:
                raise WeightsError(f"missing parameter {name} (expected shape {shape})")
            if have_d[name] != shape:
                raise WeightsError(
                    f"parameter {name} has shape {have_d[name]}, expected {shape}"
                )
        extra = [n for n, _ in have if n not in dict(want)]
        if extra:
            raise WeightsError(f"unexpected parameters: {extra}")
        raise WeightsError("parameters are ordered differently than the manifest")


def init_weights(config, seed: int) -> WeightStore:
    """Random but well-conditioned parameters for testing and benchmarks.

    Convolutions get fan-in-scaled Gaussian kernels; batch-norm statistics
    are drawn near identity so activations stay finite through the network.
    """
    from .model import param_manifest  # local import to avoid a cycle

    rng = np.random.default_rng(seed)
    params = []
    for name, shape in param_manifest(config):
        leaf = name.rsplit(".", 1)[-1]
        if leaf == "weight":
            fan_in = int(np.prod(shape[1:]))
            values = rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=shape)
        elif leaf == "bias":
            values = rng.uniform(-0.05, 0.05, size=shape)
        elif leaf == "scale":
            values = rng.uniform(0.8, 1.2, size=shape)
        elif leaf == "var":
            values = rng.uniform(0.5, 1.5, size=shape)
        else:  # shift, mean
            values = rng.uniform(-0.1, 0.1, size=shape)
        params.append((name, values.astype(np.float32)))
    return WeightStore(params)
