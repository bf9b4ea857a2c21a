# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: Leray projection, dyadic BMO and pointwise contraction.

Same signatures and semantics as ``bsq._kernels_py``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()


cdef void _leray_2d(double complex[:, :, ::1] c, double[::1] k,
                    double complex[:, :, ::1] out) noexcept nogil:
    cdef Py_ssize_t n = c.shape[1]
    cdef Py_ssize_t i, j
    cdef double kx, ky, k2
    cdef double complex kdotc, r
    for i in range(n):
        kx = k[i]
        for j in range(n):
            ky = k[j]
            k2 = kx * kx + ky * ky
            if k2 == 0.0:
                out[0, i, j] = c[0, i, j]
                out[1, i, j] = c[1, i, j]
                continue
            kdotc = kx * c[0, i, j] + ky * c[1, i, j]
            r = kdotc / k2
            out[0, i, j] = c[0, i, j] - kx * r
            out[1, i, j] = c[1, i, j] - ky * r


cdef void _leray_3d(double complex[:, :, :, ::1] c, double[::1] k,
                    double complex[:, :, :, ::1] out) noexcept nogil:
    cdef Py_ssize_t n = c.shape[1]
    cdef Py_ssize_t i, j, l
    cdef double kx, ky, kz, k2
    cdef double complex kdotc, r
    for i in range(n):
        kx = k[i]
        for j in range(n):
            ky = k[j]
            for l in range(n):
                kz = k[l]
                k2 = kx * kx + ky * ky + kz * kz
                if k2 == 0.0:
                    out[0, i, j, l] = c[0, i, j, l]
                    out[1, i, j, l] = c[1, i, j, l]
                    out[2, i, j, l] = c[2, i, j, l]
                    continue
                kdotc = kx * c[0, i, j, l] + ky * c[1, i, j, l] + kz * c[2, i, j, l]
                r = kdotc / k2
                out[0, i, j, l] = c[0, i, j, l] - kx * r
                out[1, i, j, l] = c[1, i, j, l] - ky * r
                out[2, i, j, l] = c[2, i, j, l] - kz * r


def leray_project(coeffs, wavenumbers):
    c = np.ascontiguousarray(coeffs, dtype=np.complex128)
    k = np.ascontiguousarray(wavenumbers, dtype=np.float64)
    out = np.empty_like(c)
    if c.ndim == 3:
        _leray_2d(c, k, out)
    elif c.ndim == 4:
        _leray_3d(c, k, out)
    else:
        raise ValueError(f"expected a 2D or 3D vector stack, got ndim={c.ndim}")
    return out


cdef double _bmo_2d(double[:, :, ::1] f, int max_depth) noexcept nogil:
    cdef Py_ssize_t nc = f.shape[0]
    cdef Py_ssize_t n = f.shape[1]
    cdef Py_ssize_t blocks, m, bi, bj, i, j, c
    cdef double best = 0.0
    cdef double acc, mag, d, count
    cdef double mean[8]
    cdef int depth
    for depth in range(max_depth + 1):
        blocks = 1 << depth
        m = n // blocks
        count = <double>(m * m)
        for bi in range(blocks):
            for bj in range(blocks):
                for c in range(nc):
                    acc = 0.0
                    for i in range(bi * m, bi * m + m):
                        for j in range(bj * m, bj * m + m):
                            acc = acc + f[c, i, j]
                    mean[c] = acc / count
                acc = 0.0
                for i in range(bi * m, bi * m + m):
                    for j in range(bj * m, bj * m + m):
                        if nc == 1:
                            acc = acc + fabs(f[0, i, j] - mean[0])
                        else:
                            mag = 0.0
                            for c in range(nc):
                                d = f[c, i, j] - mean[c]
                                mag = mag + d * d
                            acc = acc + sqrt(mag)
                acc = acc / count
                if acc > best:
                    best = acc
    return best


cdef double _bmo_3d(double[:, :, :, ::1] f, int max_depth) noexcept nogil:
    cdef Py_ssize_t nc = f.shape[0]
    cdef Py_ssize_t n = f.shape[1]
    cdef Py_ssize_t blocks, m, bi, bj, bl, i, j, l, c
    cdef double best = 0.0
    cdef double acc, mag, d, count
    cdef double mean[8]
    cdef int depth
    for depth in range(max_depth + 1):
        blocks = 1 << depth
        m = n // blocks
        count = <double>(m * m * m)
        for bi in range(blocks):
            for bj in range(blocks):
                for bl in range(blocks):
                    for c in range(nc):
                        acc = 0.0
                        for i in range(bi * m, bi * m + m):
                            for j in range(bj * m, bj * m + m):
                                for l in range(bl * m, bl * m + m):
                                    acc = acc + f[c, i, j, l]
                        mean[c] = acc / count
                    acc = 0.0
                    for i in range(bi * m, bi * m + m):
                        for j in range(bj * m, bj * m + m):
                            for l in range(bl * m, bl * m + m):
                                if nc == 1:
                                    acc = acc + fabs(f[0, i, j, l] - mean[0])
                                else:
                                    mag = 0.0
                                    for c in range(nc):
                                        d = f[c, i, j, l] - mean[c]
                                        mag = mag + d * d
                                    acc = acc + sqrt(mag)
                    acc = acc / count
                    if acc > best:
                        best = acc
    return best


def dyadic_bmo(values, int max_depth):
    f = np.ascontiguousarray(values, dtype=np.float64)
    if f.shape[0] > 8:
        raise ValueError("at most 8 components supported")
    if f.ndim == 3:
        return _bmo_2d(f, max_depth)
    if f.ndim == 4:
        return _bmo_3d(f, max_depth)
    raise ValueError(f"expected a 2D or 3D component stack, got ndim={f.ndim}")


def contract(a, b):
    cdef double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64).reshape(a.shape[0], -1)
    cdef double[:, ::1] bv = np.ascontiguousarray(b, dtype=np.float64).reshape(b.shape[0], -1)
    cdef Py_ssize_t nc = av.shape[0]
    cdef Py_ssize_t size = av.shape[1]
    out = np.empty(size, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t c, i
    cdef double acc
    with nogil:
        for i in range(size):
            acc = av[0, i] * bv[0, i]
            for c in range(1, nc):
                acc = acc + av[c, i] * bv[c, i]
            ov[i] = acc
    return out.reshape(a.shape[1:])
