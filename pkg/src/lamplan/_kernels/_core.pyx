# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernel backend (OpenMP-parallel Cython).

Work is split across threads by output row; every output element is
accumulated sequentially by exactly one thread, so results are bit-identical
for any thread count.
"""

import numpy as np

cimport numpy as cnp
from cython.parallel import prange

cnp.import_array()


def conv3d_k3(const cnp.float32_t[:, :, :, ::1] x, const cnp.float32_t[:, :, :, :, ::1] w,
              const cnp.float32_t[::1] b):
    """3x3x3 cross-correlation with zero padding 1, stride 1."""
    cdef Py_ssize_t ci = x.shape[0], z = x.shape[1], y = x.shape[2], xd = x.shape[3]
    cdef Py_ssize_t co = w.shape[0]
    pad_arr = np.zeros((ci, z + 2, y + 2, xd + 2), dtype=np.float32)
    pad_arr[:, 1:-1, 1:-1, 1:-1] = np.asarray(x)
    cdef const cnp.float32_t[:, :, :, ::1] xp = pad_arr
    out_arr = np.empty((co, z, y, xd), dtype=np.float32)
    cdef cnp.float32_t[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t o, c, iz, iy, ix, dz, dy, dx, t
    cdef cnp.float32_t wv, bv
    cdef Py_ssize_t nt = co * z
    for t in prange(nt, nogil=True, schedule='static'):
        o = t // z
        iz = t % z
        bv = b[o]
        for iy in range(y):
            for ix in range(xd):
                out[o, iz, iy, ix] = bv
        for c in range(ci):
            for dz in range(3):
                for dy in range(3):
                    for dx in range(3):
                        wv = w[o, c, dz, dy, dx]
                        for iy in range(y):
                            for ix in range(xd):
                                out[o, iz, iy, ix] += wv * xp[c, iz + dz, iy + dy, ix + dx]
    return out_arr


def conv3d_k1(const cnp.float32_t[:, :, :, ::1] x, w, const cnp.float32_t[::1] b):
    """Pointwise (1x1x1) convolution."""
    cdef Py_ssize_t ci = x.shape[0], z = x.shape[1], y = x.shape[2], xd = x.shape[3]
    wm_arr = np.ascontiguousarray(np.asarray(w, dtype=np.float32).reshape(-1, ci))
    cdef const cnp.float32_t[:, ::1] wm = wm_arr
    cdef Py_ssize_t co = wm.shape[0]
    cdef Py_ssize_t n = z * y * xd
    flat_arr = np.asarray(x).reshape(ci, n)
    cdef const cnp.float32_t[:, ::1] flat = flat_arr
    out_arr = np.empty((co, n), dtype=np.float32)
    cdef cnp.float32_t[:, ::1] out = out_arr
    cdef Py_ssize_t o, c, v
    cdef cnp.float32_t wv, bv
    for o in prange(co, nogil=True, schedule='static'):
        bv = b[o]
        for v in range(n):
            out[o, v] = bv
        for c in range(ci):
            wv = wm[o, c]
            for v in range(n):
                out[o, v] += wv * flat[c, v]
    return out_arr.reshape(co, z, y, xd)


def trilinear_resample(const cnp.float32_t[:, :, ::1] vox, target_dims):
    """Resample (z, y, x) voxels to target_dims; same mapping as the fallback."""
    cdef Py_ssize_t nz = vox.shape[0], ny = vox.shape[1], nx = vox.shape[2]
    cdef Py_ssize_t tz = target_dims[0], ty = target_dims[1], tx = target_dims[2]
    out_arr = np.empty((tz, ty, tx), dtype=np.float32)
    cdef cnp.float32_t[:, :, ::1] out = out_arr
    cdef double rz = nz / <double>tz, ry = ny / <double>ty, rx = nx / <double>tx
    cdef Py_ssize_t iz, iy, ix, z0, y0, x0, z1, y1, x1
    cdef double uz, uy, ux, fz, fy, fx, gz, gy, gx, acc
    for iz in prange(tz, nogil=True, schedule='static'):
        uz = iz * rz
        z0 = <Py_ssize_t>uz
        if z0 > nz - 1:
            z0 = nz - 1
        z1 = z0 + 1
        if z1 > nz - 1:
            z1 = nz - 1
        fz = uz - z0
        if fz < 0:
            fz = 0
        elif fz > 1:
            fz = 1
        gz = 1.0 - fz
        for iy in range(ty):
            uy = iy * ry
            y0 = <Py_ssize_t>uy
            if y0 > ny - 1:
                y0 = ny - 1
            y1 = y0 + 1
            if y1 > ny - 1:
                y1 = ny - 1
            fy = uy - y0
            if fy < 0:
                fy = 0
            elif fy > 1:
                fy = 1
            gy = 1.0 - fy
            for ix in range(tx):
                ux = ix * rx
                x0 = <Py_ssize_t>ux
                if x0 > nx - 1:
                    x0 = nx - 1
                x1 = x0 + 1
                if x1 > nx - 1:
                    x1 = nx - 1
                fx = ux - x0
                if fx < 0:
                    fx = 0
                elif fx > 1:
                    fx = 1
                gx = 1.0 - fx
                acc = (vox[z0, y0, x0] * (gz * gy * gx)
                       + vox[z0, y0, x1] * (gz * gy * fx)
                       + vox[z0, y1, x0] * (gz * fy * gx)
                       + vox[z0, y1, x1] * (gz * fy * fx)
                       + vox[z1, y0, x0] * (fz * gy * gx)
                       + vox[z1, y0, x1] * (fz * gy * fx)
                       + vox[z1, y1, x0] * (fz * fy * gx)
                       + vox[z1, y1, x1] * (fz * fy * fx))
                out[iz, iy, ix] = <cnp.float32_t>acc
    return out_arr
