"""Tensor operations for the inference engine.

Tensors are plain float32 ndarrays of shape (B, C, Z, Y, X). The space-to-
channel rearrangements use the layout where output channel c*8 + dz*4 +
dy*2 + dx holds the (dz, dy, dx) interval sample of input channel c, and
the channel-to-space rearrangement reads the inverse layout, so the two are
exact mutual inverses when the channel maps are identities.
"""

from __future__ import annotations

import numpy as np

from .. import _kernels
from ..errors import ParameterError, ShapeError


def _check_tensor5(t: np.ndarray, what: str = "tensor") -> np.ndarray:
    t = np.asarray(t)
    if t.ndim != 5:
        raise ShapeError(f"{what} must have shape (B, C, Z, Y, X), got {t.shape}")
    if t.dtype != np.float32:
        t = t.astype(np.float32)
    return np.ascontiguousarray(t)


def conv3d(t: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Same-size 3D cross-correlation (kernel 3x3x3 pad 1, or 1x1x1)."""
    t = _check_tensor5(t, "conv input")
    kernel = np.ascontiguousarray(np.asarray(kernel, dtype=np.float32))
    if kernel.ndim != 5:
        raise ShapeError(f"kernel must be (Co, Ci, kz, ky, kx), got {kernel.shape}")
    ks = kernel.shape[2:]
    if ks not in ((3, 3, 3), (1, 1, 1)):
        raise ShapeError(f"kernel size must be 3x3x3 or 1x1x1, got {ks}")
    if kernel.shape[1] != t.shape[1]:
        raise ShapeError(
            f"kernel expects {kernel.shape[1]} input channels, tensor has {t.shape[1]}"
        )
    bias = np.ascontiguousarray(np.asarray(bias, dtype=np.float32).reshape(-1))
    if bias.shape[0] != kernel.shape[0]:
        raise ShapeError(f"bias has {bias.shape[0]} entries for {kernel.shape[0]} channels")
    fn = _kernels.conv3d_k3 if ks == (3, 3, 3) else _kernels.conv3d_k1
    return np.stack([fn(t[b], kernel, bias) for b in range(t.shape[0])])


def batchnorm3d(t, scale, shift, mean, var, eps: float = 1e-5) -> np.ndarray:
    """Per-channel affine normalization with stored statistics."""
    t = _check_tensor5(t, "batchnorm input")
    c = t.shape[1]
    params = []
    for name, v in (("scale", scale), ("shift", shift), ("mean", mean), ("var", var)):
        v = np.asarray(v, dtype=np.float64).reshape(-1)
        if v.shape[0] != c:
            raise ShapeError(f"{name} has {v.shape[0]} entries for {c} channels")
        params.append(v)
    scale, shift, mean, var = params
    if np.any(var + eps <= 0):
        raise ParameterError(f"var + eps must be > 0, got min {np.min(var) + eps}")
    a = scale / np.sqrt(var + eps)
    b = shift - mean * a
    a32 = a.astype(np.float32)[None, :, None, None, None]
    b32 = b.astype(np.float32)[None, :, None, None, None]
    return t * a32 + b32


def relu(t: np.ndarray) -> np.ndarray:
    return np.maximum(t, np.float32(0))


def merge_rearrange(t: np.ndarray) -> np.ndarray:
    """Interval-sample into 8 half-size tensors stacked along channels.

    (B, C, Z, Y, X) -> (B, 8C, Z/2, Y/2, X/2); requires even spatial dims.
    """
    t = _check_tensor5(t)
    b, c, z, y, x = t.shape
    if z % 2 or y % 2 or x % 2:
        raise ShapeError(f"spatial dims must be even for merging, got {(z, y, x)}")
    v = t.reshape(b, c, z // 2, 2, y // 2, 2, x // 2, 2)
    v = v.transpose(0, 1, 3, 5, 7, 2, 4, 6)
    return np.ascontiguousarray(v.reshape(b, c * 8, z // 2, y // 2, x // 2))


def expand_rearrange(t: np.ndarray, s: int) -> np.ndarray:
    """Channel-to-space: (B, S^3*C, Z, Y, X) -> (B, C, S*Z, S*Y, S*X)."""
    s = int(s)
    if s < 1:
        raise ParameterError(f"scale factor must be >= 1, got {s}")
    t = _check_tensor5(t)
    b, c8, z, y, x = t.shape
    if c8 % (s**3):
        raise ShapeError(f"{c8} channels not divisible by S^3={s**3}")
    c = c8 // s**3
    v = t.reshape(b, c, s, s, s, z, y, x)
    v = v.transpose(0, 1, 5, 2, 6, 3, 7, 4)
    return np.ascontiguousarray(v.reshape(b, c, s * z, s * y, s * x))


def patch_merge3d(t, kernel, bias, scale, shift, mean, var, eps: float = 1e-5) -> np.ndarray:
    """Learned downsampling: interval sampling, then a pointwise convolution
    and batch norm back to the input channel count. Halves each spatial dim."""
    merged = merge_rearrange(t)
    out = conv3d(merged, kernel, bias)
    return batchnorm3d(out, scale, shift, mean, var, eps)


def patch_expand3d(t, s: int, kernel, bias) -> np.ndarray:
    """Learned upsampling: a pointwise convolution to S^3 times the channels,
    then channel-to-space rearrangement. Multiplies each spatial dim by S."""
    s = int(s)
    if s < 1:
        raise ParameterError(f"scale factor must be >= 1, got {s}")
    t = _check_tensor5(t)
    expanded = conv3d(t, kernel, bias)
    if expanded.shape[1] != t.shape[1] * s**3:
        raise ShapeError(
            f"expansion kernel produced {expanded.shape[1]} channels, "
            f"expected {t.shape[1] * s**3}"
        )
    return expand_rearrange(expanded, s)
