"""Pure-numpy implementations of the hot kernels.

Used when the compiled ``bsq._kernels`` extension is unavailable or when
``BSQ_PURE_PYTHON=1`` is set. Signatures match the Cython module exactly.
"""

import numpy as np


def leray_project(coeffs, wavenumbers):
    """Project a stack of vector coefficients onto divergence-free modes.

    ``coeffs`` has shape ``(dim, N, ..., N)`` (complex) and ``wavenumbers``
    is the 1D integer wavenumber array shared by every axis. Returns a new
    array; the k = 0 mode is left untouched.
    """
    dim = coeffs.shape[0]
    kvec = np.meshgrid(*([wavenumbers] * dim), indexing="ij", sparse=True)
    k2 = sum(k * k for k in kvec)
    k2 = np.where(k2 == 0, 1.0, k2)
    kdotc = sum(kvec[i] * coeffs[i] for i in range(dim))
    ratio = kdotc / k2
    out = np.empty_like(coeffs)
    for i in range(dim):
        out[i] = coeffs[i] - kvec[i] * ratio
    return out


def dyadic_bmo(values, max_depth):
    """Largest mean oscillation over dyadic cubes of depth 0..max_depth.

    ``values`` has shape ``(ncomp, N, ..., N)``; for ncomp > 1 the oscillation
    is measured with the Euclidean norm of the component vector.
    """
    ncomp = values.shape[0]
    dim = values.ndim - 1
    n = values.shape[1]
    best = 0.0
    for depth in range(max_depth + 1):
        blocks = 1 << depth
        m = n // blocks
        shape = [ncomp]
        for _ in range(dim):
            shape += [blocks, m]
        g = values.reshape(shape)
        inner = tuple(2 + 2 * a for a in range(dim))
        dev = g - g.mean(axis=inner, keepdims=True)
        if ncomp == 1:
            mag = np.abs(dev[0])
        else:
            mag = np.sqrt((dev * dev).sum(axis=0))
        osc = mag.mean(axis=tuple(1 + 2 * a for a in range(dim)))
        best = max(best, float(osc.max()))
    return best


def contract(a, b):
    """Pointwise sum over the leading axis: ``sum_i a[i] * b[i]``."""
    out = a[0] * b[0]
    for i in range(1, a.shape[0]):
        out = out + a[i] * b[i]
    return out
