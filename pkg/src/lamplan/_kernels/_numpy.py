"""Pure-NumPy kernel implementations (fallback backend).

conv3d_k3 builds an im2col matrix one z-slice at a time and multiplies with
BLAS. Multithreaded BLAS may split the reduction axis, which makes results
depend on the thread count, so the matmuls run with BLAS pinned to a single
thread and the slices are distributed over a Python thread pool instead:
every output element is produced by one single-threaded gemm with a fixed
accumulation order, so results are bit-identical for any thread count.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from threadpoolctl import ThreadpoolController

_BLAS = ThreadpoolController()


def _workers(n_tasks: int) -> int:
    return max(1, min(os.cpu_count() or 1, n_tasks))


def conv3d_k3(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """3x3x3 cross-correlation with zero padding 1, stride 1.

    x: (ci, z, y, xd) float32; w: (co, ci, 3, 3, 3) float32; b: (co,) float32.
    """
    ci, z, y, xd = x.shape
    co = w.shape[0]
    xp = np.zeros((ci, z + 2, y + 2, xd + 2), dtype=np.float32)
    xp[:, 1:-1, 1:-1, 1:-1] = x
    wm = np.ascontiguousarray(w.reshape(co, ci * 27))
    out = np.empty((co, z, y, xd), dtype=np.float32)

    def run_rows(z_range):
        col = np.empty((ci * 27, y * xd), dtype=np.float32)
        for iz in z_range:
            k = 0
            for c in range(ci):
                for dz in range(3):
                    for dy in range(3):
                        for dx in range(3):
                            col[k] = xp[c, iz + dz, dy : dy + y, dx : dx + xd].ravel()
                            k += 1
            out[:, iz] = (wm @ col).reshape(co, y, xd)

    n = _workers(z) if z * y * xd >= (1 << 17) else 1
    with _BLAS.limit(limits=1, user_api="blas"):
        if n == 1:
            run_rows(range(z))
        else:
            chunks = [range(i, z, n) for i in range(n)]
            with ThreadPoolExecutor(max_workers=n) as ex:
                list(ex.map(run_rows, chunks))
    out += b[:, None, None, None]
    return out


def conv3d_k1(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise (1x1x1) convolution: a channel mixing matrix per voxel."""
    ci, z, y, xd = x.shape
    co = w.shape[0]
    wm = np.ascontiguousarray(w.reshape(co, ci))
    flat = x.reshape(ci, -1)
    n_vox = flat.shape[1]
    out = np.empty((co, n_vox), dtype=np.float32)
    # fixed task grid so the issued gemms never depend on the worker count
    step = 1 << 16
    spans = [(lo, min(lo + step, n_vox)) for lo in range(0, n_vox, step)]

    def run_span(span):
        lo, hi = span
        out[:, lo:hi] = wm @ flat[:, lo:hi]

    n = _workers(len(spans))
    with _BLAS.limit(limits=1, user_api="blas"):
        if n == 1:
            for span in spans:
                run_span(span)
        else:
            with ThreadPoolExecutor(max_workers=n) as ex:
                list(ex.map(run_span, spans))
    out += b[:, None]
    return out.reshape(co, z, y, xd)


def trilinear_resample(vox: np.ndarray, target_dims) -> np.ndarray:
    """Resample (z, y, x) float32 voxels to target_dims.

    Output index i samples the source at i * n_src / n_dst per axis (the
    world-consistent mapping for extent-preserving spacing), corner indices
    clamped to the grid border.
    """
    nz, ny, nx = vox.shape
    tz, ty, tx = target_dims

    def axis_coords(n_src: int, n_dst: int):
        u = np.arange(n_dst, dtype=np.float64) * (n_src / n_dst)
        lo = np.floor(u).astype(np.intp)
        np.clip(lo, 0, n_src - 1, out=lo)
        hi = np.minimum(lo + 1, n_src - 1)
        frac = np.clip(u - lo, 0.0, 1.0)
        return lo, hi, frac

    z0, z1, fz = axis_coords(nz, tz)
    y0, y1, fy = axis_coords(ny, ty)
    x0, x1, fx = axis_coords(nx, tx)

    v = vox.astype(np.float64, copy=False)
    iz0, iy0, ix0 = z0[:, None, None], y0[None, :, None], x0[None, None, :]
    iz1, iy1, ix1 = z1[:, None, None], y1[None, :, None], x1[None, None, :]
    wz1, wy1, wx1 = fz[:, None, None], fy[None, :, None], fx[None, None, :]
    wz0, wy0, wx0 = 1.0 - wz1, 1.0 - wy1, 1.0 - wx1

    out = (
        v[iz0, iy0, ix0] * (wz0 * wy0 * wx0)
        + v[iz0, iy0, ix1] * (wz0 * wy0 * wx1)
        + v[iz0, iy1, ix0] * (wz0 * wy1 * wx0)
        + v[iz0, iy1, ix1] * (wz0 * wy1 * wx1)
        + v[iz1, iy0, ix0] * (wz1 * wy0 * wx0)
        + v[iz1, iy0, ix1] * (wz1 * wy0 * wx1)
        + v[iz1, iy1, ix0] * (wz1 * wy1 * wx0)
        + v[iz1, iy1, ix1] * (wz1 * wy1 * wx1)
    )
    return out.astype(np.float32)
