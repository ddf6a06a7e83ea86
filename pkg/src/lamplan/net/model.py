"""Network configuration, parameter manifest, and the forward pass.

The U-shaped plan: four encoder stages of two conv(3x3x3)-bn-relu blocks
each, joined by learned space-to-channel downsampling; a mirrored decoder
with S=2 learned upsampling and skip concatenation; a pyramid head that
compresses every decoder scale to a common small width, upsamples each to
full resolution (S in {1, 2, 4, 8}), concatenates them, and applies one
final 3x3x3 convolution to produce the per-landmark heatmap channels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericError, ShapeError
from ..heatmap import HeatmapStack
from ..volume import LANDMARK_NAMES, Volume
from . import ops
from .weights import WeightStore


@dataclass(frozen=True)
class NetConfig:
    name: str
    input_dims: tuple[int, int, int]
    stage_widths: tuple[int, ...] = (16, 32, 64, 128)
    in_channels: int = 1
    out_channels: int = 7
    pyramid_width: int = 8
    bn_eps: float = 1e-5

    @property
    def n_stages(self) -> int:
        return len(self.stage_widths)


STANDARD = NetConfig(name="standard", input_dims=(72, 128, 128))
SMOKE = NetConfig(
    name="smoke", input_dims=(24, 32, 32), stage_widths=(4, 8, 16, 32), pyramid_width=4
)
CONFIGS = {c.name: c for c in (STANDARD, SMOKE)}


def _bn_entries(prefix: str, c: int):
    return [
        (f"{prefix}.scale", (c,)),
        (f"{prefix}.shift", (c,)),
        (f"{prefix}.mean", (c,)),
        (f"{prefix}.var", (c,)),
    ]


def _block_entries(prefix: str, c_in: int, c_out: int):
    entries = [
        (f"{prefix}.conv1.weight", (c_out, c_in, 3, 3, 3)),
        (f"{prefix}.conv1.bias", (c_out,)),
    ]
    entries += _bn_entries(f"{prefix}.bn1", c_out)
    entries += [
        (f"{prefix}.conv2.weight", (c_out, c_out, 3, 3, 3)),
        (f"{prefix}.conv2.bias", (c_out,)),
    ]
    entries += _bn_entries(f"{prefix}.bn2", c_out)
    return entries


def param_manifest(config: NetConfig) -> list[tuple[str, tuple[int, ...]]]:
    """Ordered (name, shape) list of every parameter the forward pass needs."""
    w = config.stage_widths
    entries = []
    c_in = config.in_channels
    for i, width in enumerate(w, start=1):
        entries += _block_entries(f"enc{i}", c_in, width)
        if i < len(w):
            entries += [
                (f"merge{i}.conv.weight", (width, 8 * width, 1, 1, 1)),
                (f"merge{i}.conv.bias", (width,)),
            ]
            entries += _bn_entries(f"merge{i}.bn", width)
        c_in = width
    for i in range(len(w) - 1, 0, -1):
        below = w[i]
        here = w[i - 1]
        entries += [
            (f"dec{i}.expand.weight", (8 * below, below, 1, 1, 1)),
            (f"dec{i}.expand.bias", (8 * below,)),
        ]
        entries += _block_entries(f"dec{i}", below + here, here)
    pw = config.pyramid_width
    for i in range(1, len(w) + 1):
        src_width = w[i - 1]
        s = 2 ** (i - 1)
        entries += [
            (f"pyramid{i}.compress.weight", (pw, src_width, 1, 1, 1)),
            (f"pyramid{i}.compress.bias", (pw,)),
            (f"pyramid{i}.expand.weight", (s**3 * pw, pw, 1, 1, 1)),
            (f"pyramid{i}.expand.bias", (s**3 * pw,)),
        ]
    entries += [
        ("out.weight", (config.out_channels, pw * len(w), 3, 3, 3)),
        ("out.bias", (config.out_channels,)),
    ]
    return entries


def detect_config(store: WeightStore) -> NetConfig:
    """Identify which known configuration a weight store belongs to."""
    for config in CONFIGS.values():
        if store.matches(param_manifest(config)):
            return config
    raise ShapeError(
        "weight store does not match any known configuration "
        f"({', '.join(CONFIGS)})"
    )


def _finite_or_raise(t: np.ndarray, layer: str):
    if not np.all(np.isfinite(t)):
        raise NumericError(f"non-finite activation after layer {layer}")


class _Runner:
    """Executes layers against a validated store, checking activations."""

    def __init__(self, store: WeightStore, config: NetConfig):
        self.store = store
        self.eps = config.bn_eps

    def block(self, t, prefix: str):
        g = self.store.get
        for i in ("1", "2"):
            t = ops.conv3d(t, g(f"{prefix}.conv{i}.weight"), g(f"{prefix}.conv{i}.bias"))
            _finite_or_raise(t, f"{prefix}.conv{i}")
            t = ops.batchnorm3d(
                t,
                g(f"{prefix}.bn{i}.scale"),
                g(f"{prefix}.bn{i}.shift"),
                g(f"{prefix}.bn{i}.mean"),
                g(f"{prefix}.bn{i}.var"),
                self.eps,
            )
            _finite_or_raise(t, f"{prefix}.bn{i}")
            t = ops.relu(t)
        return t

    def merge(self, t, prefix: str):
        g = self.store.get
        t = ops.patch_merge3d(
            t,
            g(f"{prefix}.conv.weight"),
            g(f"{prefix}.conv.bias"),
            g(f"{prefix}.bn.scale"),
            g(f"{prefix}.bn.shift"),
            g(f"{prefix}.bn.mean"),
            g(f"{prefix}.bn.var"),
            self.eps,
        )
        _finite_or_raise(t, prefix)
        return t

    def expand(self, t, s: int, prefix: str):
        g = self.store.get
        t = ops.patch_expand3d(t, s, g(f"{prefix}.weight"), g(f"{prefix}.bias"))
        _finite_or_raise(t, prefix)
        return t


def forward_tensor(t: np.ndarray, store: WeightStore, config: NetConfig | None = None) -> np.ndarray:
    """Run the network on a (B, C, Z, Y, X) tensor; returns (B, N, Z, Y, X)."""
    if config is None:
        config = detect_config(store)
    store.validate(param_manifest(config))
    t = np.asarray(t)
    if t.ndim != 5:
        raise ShapeError(f"input must be (B, C, Z, Y, X), got {t.shape}")
    if t.shape[1] != config.in_channels:
        raise ShapeError(f"expected {config.in_channels} input channels, got {t.shape[1]}")
    spatial = t.shape[2:]
    halvings = 2 ** (config.n_stages - 1)
    if any(d % halvings for d in spatial):
        raise ShapeError(
            f"spatial dims {spatial} must be divisible by {halvings} "
            f"({config.n_stages - 1} halvings)"
        )
    run = _Runner(store, config)
    n = config.n_stages

    skips = []
    for i in range(1, n + 1):
        t = run.block(t, f"enc{i}")
        skips.append(t)
        if i < n:
            t = run.merge(t, f"merge{i}")

    features = {n: t}  # deepest scale comes straight from the bottleneck
    for i in range(n - 1, 0, -1):
        t = run.expand(t, 2, f"dec{i}.expand")
        t = np.concatenate([t, skips[i - 1]], axis=1)
        t = run.block(t, f"dec{i}")
        features[i] = t

    g = store.get
    fused = []
    for i in range(1, n + 1):
        f = ops.conv3d(features[i], g(f"pyramid{i}.compress.weight"), g(f"pyramid{i}.compress.bias"))
        _finite_or_raise(f, f"pyramid{i}.compress")
        f = run.expand(f, 2 ** (i - 1), f"pyramid{i}.expand")
        fused.append(f)
    t = np.concatenate(fused, axis=1)
    t = ops.conv3d(t, g("out.weight"), g("out.bias"))
    _finite_or_raise(t, "out")
    return t


def forward(vol: Volume, store: WeightStore, config: NetConfig | None = None) -> HeatmapStack:
    """Produce the 7-channel heatmap stack for a preprocessed volume."""
    if config is None:
        config = detect_config(store)
    if vol.dims != tuple(config.input_dims):
        raise ShapeError(
            f"volume dims {vol.dims} do not match the configured input "
            f"{tuple(config.input_dims)}"
        )
    t = vol.voxels[None, None, :, :, :]
    out = forward_tensor(t, store, config)
    return HeatmapStack(out[0], LANDMARK_NAMES[: config.out_channels])
