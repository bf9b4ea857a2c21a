"""Periodic grids, Fourier fields and the operator calculus acting on them.

All fields live on the torus [0, 2*pi)^d so wavenumbers are integers. The
forward transform carries the 1/N^d factor, which makes the coefficient of
``cos(k.x)`` equal to 1/2 at +k and -k independently of resolution.

With that convention the grid L2 norm and the coefficient sum are related by
``||f||_{L2}^2 = (2*pi)^d * sum_k |f_k|^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np

from bsq._backend import kernels
from bsq.errors import ConfigurationError, DimensionError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class GridSpec:
    """Isotropic periodic grid with ``n_points`` per axis on [0, 2*pi)^dim."""

    dim: int
    n_points: int

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ConfigurationError(f"dim must be 2 or 3, got {self.dim}")
        n = self.n_points
        if n < 8 or n & (n - 1):
            raise ConfigurationError(f"n_points must be a power of two >= 8, got {n}")

    @property
    def box_length(self) -> float:
        return TWO_PI

    @property
    def shape(self) -> tuple:
        return (self.n_points,) * self.dim

    @property
    def dx(self) -> float:
        return TWO_PI / self.n_points

    @property
    def cell_volume(self) -> float:
        return self.dx**self.dim

    @property
    def volume(self) -> float:
        return TWO_PI**self.dim

    @property
    def size(self) -> int:
        return self.n_points**self.dim

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Integer wavenumbers in FFT order: 0, 1, ..., N/2-1, -N/2, ..., -1."""
        return np.fft.fftfreq(self.n_points, 1.0 / self.n_points)

    @cached_property
    def kvec(self) -> np.ndarray:
        """Dense wavevector components, shape ``(dim, N, ..., N)``."""
        return np.array(np.meshgrid(*([self.wavenumbers] * self.dim), indexing="ij"))

    @cached_property
    def k2(self) -> np.ndarray:
        return (self.kvec**2).sum(axis=0)

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(self.k2)

    @cached_property
    def deriv_kvec(self) -> np.ndarray:
        """Wavevector used for odd derivatives: the Nyquist entry is zeroed."""
        k = self.wavenumbers.copy()
        k[self.n_points // 2] = 0.0
        return np.array(np.meshgrid(*([k] * self.dim), indexing="ij"))

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        cut = self.n_points / 3.0
        return np.all(np.abs(self.kvec) <= cut, axis=0)

    @cached_property
    def coords(self) -> np.ndarray:
        """Physical coordinates, shape ``(dim, N, ..., N)``, axis 0 is x."""
        x = np.arange(self.n_points) * self.dx
        return np.array(np.meshgrid(*([x] * self.dim), indexing="ij"))

    @property
    def max_radius(self) -> float:
        """Largest admissible truncation radius (ball inside the lattice)."""
        return self.n_points / 2 - 1

    def ball_mask(self, R: float) -> np.ndarray:
        check_radius(self, R)
        return self.k2 <= R * R


def check_radius(grid: GridSpec, R: float) -> float:
    R = float(R)
    if not (R > 0.0) or not math.isfinite(R):
        raise ConfigurationError(f"truncation radius must be positive, got {R}")
    if R > grid.max_radius:
        raise ConfigurationError(
            f"truncation radius {R} exceeds n_points/2 - 1 = {grid.max_radius}"
        )
    return R


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a scalar field on ``grid``."""

    grid: GridSpec
    coeffs: np.ndarray
    is_real_symmetric: bool = True
    flags: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.coeffs.shape != self.grid.shape:
            raise DimensionError(
                f"coefficient shape {self.coeffs.shape} does not match grid {self.grid.shape}"
            )

    rank = 0

    def physical(self) -> np.ndarray:
        return _to_physical(self.coeffs, self.grid, self.is_real_symmetric)

    def with_coeffs(self, coeffs, **kw) -> "SpectralField":
        return SpectralField(self.grid, coeffs, kw.get("is_real_symmetric", self.is_real_symmetric),
                             kw.get("flags", self.flags))

    @property
    def mean(self) -> complex:
        return self.coeffs[(0,) * self.grid.dim]

    def __add__(self, other):
        _same_grid(self, other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other):
        _same_grid(self, other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_coeffs(-self.coeffs)


@dataclass(frozen=True, eq=False)
class VectorField:
    """``dim`` scalar components stacked along axis 0 of ``coeffs``."""

    grid: GridSpec
    coeffs: np.ndarray
    is_real_symmetric: bool = True
    flags: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        expected = (self.grid.dim,) + self.grid.shape
        if self.coeffs.shape != expected:
            raise DimensionError(f"vector coefficients {self.coeffs.shape} != {expected}")

    rank = 1

    @property
    def components(self) -> list:
        return [SpectralField(self.grid, c, self.is_real_symmetric) for c in self.coeffs]

    def physical(self) -> np.ndarray:
        return _to_physical(self.coeffs, self.grid, self.is_real_symmetric)

    def with_coeffs(self, coeffs, **kw) -> "VectorField":
        return VectorField(self.grid, coeffs, kw.get("is_real_symmetric", self.is_real_symmetric),
                           kw.get("flags", self.flags))

    def divergence_residual(self) -> float:
        """``max_k |k . u_k| / max_k |u_k|`` (0 for the zero field)."""
        kdotc = np.abs((self.grid.kvec * self.coeffs).sum(axis=0)).max()
        scale = np.abs(self.coeffs).max()
        return float(kdotc / scale) if scale > 0 else 0.0

    def is_divergence_free(self, tol: float = 1e-12) -> bool:
        return self.divergence_residual() <= tol

    def __add__(self, other):
        _same_grid(self, other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other):
        _same_grid(self, other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_coeffs(-self.coeffs)


Field = Union[SpectralField, VectorField]


def _same_grid(a, b):
    if a.grid != b.grid or a.coeffs.shape != b.coeffs.shape:
        raise DimensionError(f"fields live on different grids: {a.grid} vs {b.grid}")


def _axes(grid: GridSpec) -> tuple:
    return tuple(range(-grid.dim, 0))


def _to_physical(coeffs, grid, real=True):
    values = np.fft.ifftn(coeffs, axes=_axes(grid)) * grid.size
    return values.real.copy() if real else values


def _infer_grid(values: np.ndarray) -> GridSpec:
    shape = values.shape
    if values.ndim in (2, 3) and len(set(shape)) == 1:
        return GridSpec(values.ndim, shape[0])
    if values.ndim in (3, 4) and shape[0] == values.ndim - 1 and len(set(shape[1:])) == 1:
        return GridSpec(values.ndim - 1, shape[1])
    raise DimensionError(f"cannot infer a periodic grid from array shape {shape}")


def forward(values, grid: GridSpec | None = None) -> Field:
    """Physical samples -> Fourier coefficients (scalar or vector stack)."""
    values = np.asarray(values)
    if grid is None:
        grid = _infer_grid(values)
    if values.shape == grid.shape:
        cls = SpectralField
    elif values.shape == (grid.dim,) + grid.shape:
        cls = VectorField
    else:
        raise DimensionError(f"array shape {values.shape} does not fit grid {grid}")
    real = not np.iscomplexobj(values)
    coeffs = np.fft.fftn(values, axes=_axes(grid)) / grid.size
    return cls(grid, coeffs, is_real_symmetric=real)


def inverse(f: Field) -> np.ndarray:
    return f.physical()


def transform(data, direction: str = "forward", grid: GridSpec | None = None):
    """Forward (physical -> spectral) or inverse (spectral -> physical) transform."""
    if direction == "forward":
        if isinstance(data, (SpectralField, VectorField)):
            raise DimensionError("forward transform expects physical samples")
        return forward(data, grid)
    if direction == "inverse":
        if not isinstance(data, (SpectralField, VectorField)):
            raise DimensionError("inverse transform expects a SpectralField or VectorField")
        if grid is not None and grid != data.grid:
            raise DimensionError(f"field grid {data.grid} does not match {grid}")
        return data.physical()
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def truncate(f: Field, R: float) -> Field:
    """Fourier truncation onto the closed ball |k| <= R."""
    mask = f.grid.ball_mask(R)
    return f.with_coeffs(f.coeffs * mask)


def multiplier_symbol(grid: GridSpec, kind: str, s: float) -> np.ndarray:
    if kind == "bessel":
        return (1.0 + grid.k2) ** (s / 2.0)
    if kind == "riesz":
        if s == 0:
            return np.ones(grid.shape)
        sym = np.zeros(grid.shape)
        nz = grid.k2 > 0
        sym[nz] = grid.k2[nz] ** (s / 2.0)
        return sym
    raise ValueError(f"multiplier kind must be 'riesz' or 'bessel', got {kind!r}")


def apply_multiplier(f: Field, kind: str, s: float) -> Field:
    """Apply the Riesz (|k|^s) or Bessel ((1+|k|^2)^(s/2)) multiplier.

    For ``riesz`` with s < 0 the mean mode has no finite image; it is zeroed
    and the result carries the ``"mean_zeroed"`` flag if it was nonzero.
    """
    sym = multiplier_symbol(f.grid, kind, s)
    flags = f.flags
    if kind == "riesz" and s < 0:
        zero = (Ellipsis,) + (0,) * f.grid.dim
        if np.any(f.coeffs[zero] != 0):
            flags = flags | {"mean_zeroed"}
    return f.with_coeffs(f.coeffs * sym, flags=flags)


def laplacian(f: Field) -> Field:
    return f.with_coeffs(-f.grid.k2 * f.coeffs)


def gradient(f: SpectralField) -> VectorField:
    if not isinstance(f, SpectralField):
        raise DimensionError("gradient expects a scalar field")
    ik = 1j * f.grid.deriv_kvec
    return VectorField(f.grid, ik * f.coeffs[None], f.is_real_symmetric)


def divergence(v: VectorField) -> SpectralField:
    if not isinstance(v, VectorField):
        raise DimensionError("divergence expects a vector field")
    ik = 1j * v.grid.deriv_kvec
    return SpectralField(v.grid, (ik * v.coeffs).sum(axis=0), v.is_real_symmetric)


def curl(v: VectorField) -> Field:
    """Scalar vorticity d1 u2 - d2 u1 in 2D, the curl vector in 3D."""
    if not isinstance(v, VectorField):
        raise DimensionError("curl expects a vector field")
    ik = 1j * v.grid.deriv_kvec
    c = v.coeffs
    if v.grid.dim == 2:
        return SpectralField(v.grid, ik[0] * c[1] - ik[1] * c[0], v.is_real_symmetric)
    out = np.stack([
        ik[1] * c[2] - ik[2] * c[1],
        ik[2] * c[0] - ik[0] * c[2],
        ik[0] * c[1] - ik[1] * c[0],
    ])
    return VectorField(v.grid, out, v.is_real_symmetric)


def jacobian(v: VectorField) -> np.ndarray:
    """Spectral coefficients of d_j v_i, shape ``(dim, dim, N, ...)`` indexed [i, j]."""
    ik = 1j * v.grid.deriv_kvec
    return ik[None, :] * v.coeffs[:, None]


def spectral_derivative(f: Field, op: str) -> Field:
    """Dispatch to :func:`gradient`, :func:`divergence` or :func:`curl`."""
    ops = {"gradient": gradient, "divergence": divergence, "curl": curl}
    if op not in ops:
        raise ValueError(f"unknown derivative {op!r}")
    return ops[op](f)


def leray_project(v: VectorField) -> VectorField:
    """Per-mode orthogonal projection onto divergence-free fields."""
    if not isinstance(v, VectorField):
        raise DimensionError("leray_project expects a vector field")
    return v.with_coeffs(kernels.leray_project(v.coeffs, v.grid.wavenumbers))


def dealias(f: Field) -> Field:
    """2/3 rule: zero every mode with some |k_i| > N/3."""
    return f.with_coeffs(f.coeffs * f.grid.dealias_mask)


def inner(a: Field, b: Field) -> float:
    """Real L2 inner product over the box, evaluated from coefficients."""
    _same_grid(a, b)
    return float(a.grid.volume * np.sum((a.coeffs * np.conj(b.coeffs)).real))


def product(a_phys: np.ndarray, b_phys: np.ndarray, grid: GridSpec) -> SpectralField:
    """Pointwise product of two physical scalars, returned dealiased."""
    return dealias(forward(a_phys * b_phys, grid))


def advect(u: VectorField, g: Field, form: str = "convective") -> Field:
    """Dealiased pseudo-spectral (u . grad) g for scalar or vector ``g``.

    ``form="divergence"`` evaluates div(u (x) g) instead; the two agree for
    divergence-free band-limited ``u``.
    """
    if u.grid != g.grid:
        raise DimensionError(f"fields live on different grids: {u.grid} vs {g.grid}")
    grid = u.grid
    up = u.physical()
    scalar = isinstance(g, SpectralField)
    gcoeffs = g.coeffs[None] if scalar else g.coeffs
    if form == "convective":
        ik = 1j * grid.deriv_kvec
        out = np.empty_like(gcoeffs)
        for i, gi in enumerate(gcoeffs):
            grad_phys = _to_physical(ik * gi[None], grid)
            out[i] = forward(kernels.contract(up, grad_phys), grid).coeffs
    elif form == "divergence":
        ik = 1j * grid.deriv_kvec
        gp = _to_physical(gcoeffs, grid)
        out = np.empty_like(gcoeffs)
        for i in range(gcoeffs.shape[0]):
            flux = forward(up * gp[i][None], grid).coeffs
            out[i] = (ik * flux).sum(axis=0)
    else:
        raise ValueError(f"unknown advection form {form!r}")
    out = out * grid.dealias_mask
    return g.with_coeffs(out[0] if scalar else out)


def hermitian_part(coeffs: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Average ``c(k)`` with ``conj(c(-k))`` over the last ``dim`` axes."""
    flipped = coeffs
    for ax in _axes(grid):
        flipped = np.roll(np.flip(flipped, axis=ax), 1, axis=ax)
    return 0.5 * (coeffs + np.conj(flipped))


def random_phases(grid: GridSpec, rng: np.random.Generator) -> np.ndarray:
    """Odd random phase field phi(-k) = -phi(k), so exp(i*phi) is Hermitian."""
    phi = rng.uniform(0.0, TWO_PI, size=grid.shape)
    flipped = phi
    for ax in range(grid.dim):
        flipped = np.roll(np.flip(flipped, axis=ax), 1, axis=ax)
    return phi - flipped


def nyquist_free(coeffs: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Zero every mode on a Nyquist plane (some k_i = -N/2)."""
    keep = np.all(grid.kvec != -(grid.n_points // 2), axis=0)
    return coeffs * keep


def random_scalar(grid: GridSpec, seed, *, mean_zero: bool = False, band: float | None = None,
                  decay: float = 0.0) -> SpectralField:
    """Random real field with |c_k| ~ (1+|k|^2)^(-decay/2), Nyquist-free.

    With ``band`` set, only modes with |k| <= band are populated and the
    coefficients are drawn on the fixed box [-band, band]^d, so the same seed
    yields the same function on every grid that resolves it.
    """
    rng = np.random.default_rng(seed)
    if band is None:
        values = rng.standard_normal(grid.shape)
        coeffs = forward(values, grid).coeffs
        coeffs = coeffs * (1.0 + grid.k2) ** (-decay / 2.0)
    else:
        coeffs = _band_coeffs(grid, rng, band, 1)[0]
        coeffs = coeffs * (1.0 + grid.k2) ** (-decay / 2.0)
    coeffs = nyquist_free(coeffs, grid)
    if mean_zero:
        coeffs[(0,) * grid.dim] = 0.0
    return SpectralField(grid, coeffs)


def random_vector(grid: GridSpec, seed, *, divergence_free: bool = False,
                  band: float | None = None, decay: float = 0.0) -> VectorField:
    rng = np.random.default_rng(seed)
    if band is None:
        values = rng.standard_normal((grid.dim,) + grid.shape)
        coeffs = forward(values, grid).coeffs
    else:
        coeffs = _band_coeffs(grid, rng, band, grid.dim)
    coeffs = nyquist_free(coeffs * (1.0 + grid.k2) ** (-decay / 2.0), grid)
    v = VectorField(grid, coeffs)
    return leray_project(v) if divergence_free else v


def _band_coeffs(grid: GridSpec, rng: np.random.Generator, band: float, ncomp: int) -> np.ndarray:
    K = int(math.floor(band))
    if K > grid.n_points // 2 - 1:
        raise ConfigurationError(f"band {band} not resolved on {grid}")
    side = 2 * K + 1
    raw = (rng.standard_normal((ncomp,) + (side,) * grid.dim)
           + 1j * rng.standard_normal((ncomp,) + (side,) * grid.dim))
    # symmetrize on the small box: index K is k = 0
    flipped = raw
    for ax in range(1, grid.dim + 1):
        flipped = np.flip(flipped, axis=ax)
    raw = 0.5 * (raw + np.conj(flipped))
    out = np.zeros((ncomp,) + grid.shape, dtype=complex)
    idx = np.arange(-K, K + 1) % grid.n_points
    out[np.ix_(range(ncomp), *([idx] * grid.dim))] = raw
    kb = np.arange(-K, K + 1)
    kk = np.array(np.meshgrid(*([kb] * grid.dim), indexing="ij"))
    inside = (kk**2).sum(axis=0) <= band * band
    out[np.ix_(range(ncomp), *([idx] * grid.dim))] *= inside
    return out
