"""Norms, seminorms and commutator probes on periodic fields.

Lebesgue and BMO norms are grid quadratures of the physical samples; Sobolev
norms are evaluated exactly from Fourier coefficients. Vector-valued fields
are measured through their pointwise Euclidean magnitude.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from bsq._backend import kernels
from bsq.errors import ConfigurationError, DimensionError, ParameterError
from bsq.spectral import (
    GridSpec,
    SpectralField,
    VectorField,
    _infer_grid,
    _to_physical,
    advect,
    apply_multiplier,
    jacobian,
)


class MeanModeWarning(UserWarning):
    """A homogeneous norm was asked of a field with nonzero mean."""


def _physical_stack(f, grid: GridSpec | None = None):
    """Return ``(grid, values)`` with values shaped ``(ncomp, N, ..., N)``."""
    if isinstance(f, (SpectralField, VectorField)):
        vals = f.physical()
        grid = f.grid
    else:
        vals = np.asarray(f, dtype=float)
        if grid is None:
            grid = _infer_grid(vals)
    if vals.shape == grid.shape:
        vals = vals[None]
    elif vals.shape[1:] != grid.shape:
        raise DimensionError(f"array shape {vals.shape} does not fit grid {grid}")
    return grid, vals


def magnitude(f, grid: GridSpec | None = None) -> np.ndarray:
    """Pointwise |f(x)| (Euclidean over components)."""
    _, vals = _physical_stack(f, grid)
    if vals.shape[0] == 1:
        return np.abs(vals[0])
    return np.sqrt(kernels.contract(vals, vals))


def lebesgue_norm(f, p: float, grid: GridSpec | None = None) -> float:
    """Grid quadrature ``(sum |f|^p dx)^(1/p)``; ``p = inf`` gives the grid max."""
    p = float(p)
    if not p >= 1.0:
        raise ParameterError(f"L^p norm needs p >= 1, got {p}")
    grid, _ = _physical_stack(f, grid)
    mag = magnitude(f, grid)
    if math.isinf(p):
        return float(mag.max())
    if p == 2.0:
        total = np.sum(mag * mag)
    else:
        total = np.sum(mag**p)
    return float((total * grid.cell_volume) ** (1.0 / p))


def sobolev_weights(grid: GridSpec, s: float, homogeneous: bool) -> np.ndarray:
    if homogeneous:
        w = np.zeros(grid.shape)
        nz = grid.k2 > 0
        w[nz] = grid.k2[nz] ** s
        return w
    return (1.0 + grid.k2) ** s


def sobolev_coeff_norm(coeffs: np.ndarray, grid: GridSpec, s: float,
                       homogeneous: bool = False) -> float:
    """Sobolev norm of any stack of coefficient arrays on ``grid``."""
    w = sobolev_weights(grid, s, homogeneous)
    a2 = coeffs.real**2 + coeffs.imag**2
    if a2.ndim > grid.dim:
        a2 = a2.reshape((-1,) + grid.shape).sum(axis=0)
    return float(math.sqrt(grid.volume * np.sum(w * a2)))


def sobolev_norm(f, s: float, homogeneous: bool = False) -> float:
    """H^s (Bessel weight) or homogeneous H^s (Riesz weight) norm.

    The homogeneous norm ignores the mean mode; a warning is issued when that
    mode was nonzero.
    """
    if homogeneous:
        zero = (Ellipsis,) + (0,) * f.grid.dim
        if np.any(np.abs(f.coeffs[zero]) > 0):
            warnings.warn("mean mode excluded from homogeneous Sobolev norm",
                          MeanModeWarning, stacklevel=2)
    return sobolev_coeff_norm(f.coeffs, f.grid, s, homogeneous)


def l2_norm(f) -> float:
    return sobolev_coeff_norm(f.coeffs, f.grid, 0.0)


def gradient_sobolev_norm(f, s: float) -> float:
    """``||grad f||_{H^s}`` for a scalar, or the full Jacobian norm for a vector."""
    if isinstance(f, VectorField):
        coeffs = jacobian(f)
    else:
        coeffs = 1j * f.grid.deriv_kvec * f.coeffs[None]
    return sobolev_coeff_norm(coeffs, f.grid, s)


def gradient_physical(f) -> np.ndarray:
    """Physical samples of grad f (scalar) or d_j f_i (vector), flattened to components."""
    grid = f.grid
    if isinstance(f, VectorField):
        coeffs = jacobian(f).reshape((grid.dim * grid.dim,) + grid.shape)
    else:
        coeffs = 1j * grid.deriv_kvec * f.coeffs[None]
    return _to_physical(coeffs, grid)


def gradient_linf(f) -> float:
    """Grid max of |grad f| (Frobenius norm of the Jacobian for vectors)."""
    vals = gradient_physical(f)
    return float(np.sqrt(kernels.contract(vals, vals)).max())


def default_bmo_depth(grid: GridSpec) -> int:
    return int(math.log2(grid.n_points)) - 1


def bmo_norm(f, max_depth: int | None = None, grid: GridSpec | None = None) -> float:
    """Largest mean oscillation over dyadic cubes of side 2*pi/2^d, d <= max_depth."""
    grid, vals = _physical_stack(f, grid)
    if max_depth is None:
        max_depth = default_bmo_depth(grid)
    if max_depth < 0:
        raise ConfigurationError(f"max_depth must be >= 0, got {max_depth}")
    if grid.n_points % (1 << max_depth) != 0:
        raise ConfigurationError(
            f"n_points={grid.n_points} is not divisible by 2^{max_depth}"
        )
    return float(kernels.dyadic_bmo(np.ascontiguousarray(vals), int(max_depth)))


def commutator(u: VectorField, theta: SpectralField, s: float, kind: str = "bessel") -> SpectralField:
    """``Op^s[(u.grad)theta] - (u.grad)(Op^s theta)`` with Op = J (bessel) or Lambda (riesz)."""
    if not isinstance(u, VectorField) or not isinstance(theta, SpectralField):
        raise DimensionError("commutator expects a vector u and a scalar theta")
    if u.grid != theta.grid:
        raise DimensionError(f"grid mismatch: {u.grid} vs {theta.grid}")
    first = apply_multiplier(advect(u, theta), kind, s)
    second = advect(u, apply_multiplier(theta, kind, s))
    out = first - second
    if not u.is_divergence_free(1e-10):
        out = out.with_coeffs(out.coeffs, flags=out.flags | {"u_not_divergence_free"})
    return out


@dataclass(frozen=True)
class CommutatorProbe:
    s: float
    kind: str
    lhs_norm: float
    kp_bound: float
    feff_bound: float
    kp_ratio: float
    feff_ratio: float


def _ratio(num: float, den: float) -> float:
    if num == 0.0:
        return 0.0
    return num / den if den > 0 else math.inf


def commutator_probe(u: VectorField, theta: SpectralField, s: float,
                     kind: str = "bessel") -> CommutatorProbe:
    """Commutator norm against both classical bounds, constants set to one.

    Kato-Ponce side: ||grad u||_inf ||J^(s-1) grad theta|| + ||J^s u|| ||grad theta||_inf.
    Fefferman side: ||grad u||_{H^s} ||theta||_{H^s}.
    """
    lhs = l2_norm(commutator(u, theta, s, kind))
    grad_theta_hs1 = gradient_sobolev_norm(theta, s - 1.0)
    kp = gradient_linf(u) * grad_theta_hs1 + sobolev_norm(u, s) * gradient_linf(theta)
    feff = gradient_sobolev_norm(u, s) * sobolev_norm(theta, s)
    return CommutatorProbe(s, kind, lhs, kp, feff, _ratio(lhs, kp), _ratio(lhs, feff))
