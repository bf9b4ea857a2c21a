import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bsq import oracles
from bsq.errors import ConfigurationError, DimensionError
from bsq.norms import l2_norm
from bsq.spectral import (
    GridSpec,
    SpectralField,
    VectorField,
    advect,
    apply_multiplier,
    curl,
    dealias,
    divergence,
    forward,
    gradient,
    laplacian,
    leray_project,
    product,
    random_scalar,
    random_vector,
    spectral_derivative,
    transform,
    truncate,
)


def test_constant_field_is_dc_mode(grid16):
    c = forward(np.ones(grid16.shape)).coeffs
    assert c[0, 0] == pytest.approx(1.0)
    c[0, 0] = 0
    assert np.abs(c).max() < 1e-15


def test_cos3x_single_mode(grid16):
    x = grid16.coords[0]
    c = forward(np.cos(3 * x)).coeffs
    assert c[3, 0] == pytest.approx(0.5)
    assert c[-3, 0] == pytest.approx(0.5)
    c[3, 0] = c[-3, 0] = 0
    assert np.abs(c).max() < 1e-15


def test_forward_matches_direct_dft(rng):
    vals = rng.standard_normal((8, 8))
    fast = forward(vals).coeffs
    assert np.abs(fast - oracles.direct_dft(vals)).max() < 1e-12


def test_forward_inverse_roundtrip_3d(rng):
    vals = rng.standard_normal((3, 8, 8, 8))
    f = transform(vals, "forward")
    assert isinstance(f, VectorField)
    assert np.abs(transform(f, "inverse") - vals).max() < 1e-13


def test_transform_errors(grid16):
    with pytest.raises(DimensionError):
        forward(np.zeros((16, 8)))
    with pytest.raises(DimensionError):
        forward(np.zeros((16, 16)), GridSpec(2, 32))
    with pytest.raises(ValueError):
        transform(np.zeros((16, 16)), "sideways")
    with pytest.raises(DimensionError):
        transform(forward(np.zeros((16, 16))), "inverse", GridSpec(2, 32))


def test_grid_validation():
    with pytest.raises(ConfigurationError):
        GridSpec(4, 16)
    with pytest.raises(ConfigurationError):
        GridSpec(2, 12)


def test_truncate_band_limited_is_identity(grid16):
    f = random_scalar(grid16, 0, band=2)
    assert np.array_equal(truncate(f, 5).coeffs, f.coeffs)


def _cos3x(grid):
    c = np.zeros(grid.shape, complex)
    c[3, 0] = c[-3, 0] = 0.5
    return SpectralField(grid, c)


def test_truncate_removes_outside_mode(grid16):
    f = _cos3x(grid16)
    assert np.abs(truncate(f, 2).coeffs).max() == 0.0


def test_truncate_radius_checks(grid16):
    f = random_scalar(grid16, 0)
    for R in (0.0, -1.0, 7.5, math.nan):
        with pytest.raises(ConfigurationError):
            truncate(f, R)
    truncate(f, 7.0)


def test_closed_ball_includes_boundary(grid16):
    # k = (3, 4) has |k| = 5 exactly
    assert grid16.ball_mask(5.0)[3, 4]
    assert not grid16.ball_mask(4.999)[3, 4]


def test_multipliers(grid16):
    f = random_scalar(grid16, 1)
    assert np.array_equal(apply_multiplier(f, "bessel", 0).coeffs, f.coeffs)
    c3 = forward(np.cos(3 * grid16.coords[0]))
    out = apply_multiplier(c3, "riesz", 2).physical()
    assert np.abs(out - 9 * np.cos(3 * grid16.coords[0])).max() < 1e-12
    b = apply_multiplier(f, "bessel", 1.5).coeffs
    k2 = grid16.k2
    assert np.abs(b - f.coeffs * (1 + k2) ** 0.75).max() < 1e-14
    with pytest.raises(ValueError):
        apply_multiplier(f, "fourier", 1)


def test_negative_riesz_zeroes_and_flags_mean(grid16):
    f = random_scalar(grid16, 2)
    g = apply_multiplier(f, "riesz", -1)
    assert g.coeffs[0, 0] == 0
    assert "mean_zeroed" in g.flags
    h = apply_multiplier(random_scalar(grid16, 2, mean_zero=True), "riesz", -1)
    assert "mean_zeroed" not in h.flags


def test_riesz_matches_minus_laplacian(grid16):
    f = random_scalar(grid16, 3)
    assert np.abs(apply_multiplier(f, "riesz", 2).coeffs + laplacian(f).coeffs).max() < 1e-13


def test_gradient_of_constant_is_zero(grid16):
    g = gradient(forward(np.full(grid16.shape, 4.2)))
    assert np.abs(g.coeffs).max() == 0.0


def test_curl_2d_example(grid16):
    x, y = grid16.coords
    u = forward(np.stack([-np.sin(y), np.sin(x)]))
    assert np.abs(curl(u).physical() - (np.cos(x) + np.cos(y))).max() < 1e-13


def test_curl_of_gradient_vanishes_3d():
    grid = GridSpec(3, 8)
    f = random_scalar(grid, 4)
    assert np.abs(curl(gradient(f)).coeffs).max() < 1e-13
    assert np.abs(divergence(curl(random_vector(grid, 5))).coeffs).max() < 1e-13


def test_spectral_derivative_dispatch(grid16):
    f = random_scalar(grid16, 6)
    assert np.array_equal(spectral_derivative(f, "gradient").coeffs, gradient(f).coeffs)
    with pytest.raises(ValueError):
        spectral_derivative(f, "hessian")
    with pytest.raises(DimensionError):
        gradient(random_vector(grid16, 0))


def test_leray_examples(grid16):
    v = random_vector(grid16, 7, divergence_free=True)
    assert np.abs(leray_project(v).coeffs - v.coeffs).max() < 1e-14
    g = gradient(random_scalar(grid16, 8))
    assert np.abs(leray_project(g).coeffs).max() < 1e-14
    w = random_vector(grid16, 9)
    p = leray_project(w)
    assert l2_norm(p) <= l2_norm(w)
    # per-mode oracle at a few wavevectors
    for idx in [(1, 2), (5, -3), (-7, 4)]:
        k = grid16.kvec[(slice(None),) + idx]
        ref = oracles.project_mode(k, w.coeffs[(slice(None),) + idx])
        assert np.allclose(p.coeffs[(slice(None),) + idx], ref, atol=1e-15)


def test_dealias_examples(grid16):
    f = random_scalar(grid16, 10, band=4)
    assert np.array_equal(dealias(f).coeffs, f.coeffs)
    nyq = np.cos(8 * grid16.coords[0])
    assert np.abs(dealias(forward(nyq)).coeffs).max() == 0.0


def test_product_matches_convolution_oracle(grid16):
    a = dealias(random_scalar(grid16, 11))
    b = dealias(random_scalar(grid16, 12))
    fast = product(a.physical(), b.physical(), grid16).coeffs
    assert np.abs(fast - oracles.product(a.coeffs, b.coeffs)).max() < 1e-13


def test_advect_forms_agree_for_divergence_free(grid32):
    u = random_vector(grid32, 13, divergence_free=True, band=8)
    g = random_scalar(grid32, 14, band=8)
    a = advect(u, g).coeffs
    b = advect(u, g, form="divergence").coeffs
    assert np.abs(a - b).max() < 1e-13
    with pytest.raises(ValueError):
        advect(u, g, form="skew")
    with pytest.raises(DimensionError):
        advect(u, random_scalar(GridSpec(2, 16), 0))


def test_arithmetic_grid_mismatch():
    a = random_scalar(GridSpec(2, 16), 0)
    b = random_scalar(GridSpec(2, 32), 0)
    with pytest.raises(DimensionError):
        a + b


def test_band_draw_is_resolution_independent():
    a = random_scalar(GridSpec(2, 32), 5, band=6)
    b = random_scalar(GridSpec(2, 64), 5, band=6)
    for k in [(0, 0), (1, 3), (-4, 2), (6, 0)]:
        assert a.coeffs[k] == b.coeffs[k]
    assert np.abs(a.physical().imag if np.iscomplexobj(a.physical()) else 0).max() == 0


def test_random_fields_are_real(grid16):
    f = random_scalar(grid16, 3, decay=2)
    vals = np.fft.ifftn(f.coeffs) * grid16.size
    assert np.abs(vals.imag).max() < 1e-13


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), R=st.floats(1.0, 7.0))
def test_truncation_idempotent_and_contractive(seed, R):
    grid = GridSpec(2, 16)
    f = random_scalar(grid, seed)
    t = truncate(f, R)
    assert np.array_equal(truncate(t, R).coeffs, t.coeffs)
    assert np.all(np.abs(t.coeffs) <= np.abs(f.coeffs))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.sampled_from([2, 3]))
def test_leray_idempotent_property(seed, dim):
    grid = GridSpec(dim, 8)
    v = random_vector(grid, seed)
    p = leray_project(v)
    assert np.abs(leray_project(p).coeffs - p.coeffs).max() < 1e-14
    assert p.divergence_residual() < 1e-14


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_plancherel_property(seed):
    grid = GridSpec(2, 16)
    vals = np.random.default_rng(seed).standard_normal(grid.shape)
    f = forward(vals, grid)
    lhs = np.sum(vals**2) * grid.cell_volume
    rhs = grid.volume * np.sum(np.abs(f.coeffs) ** 2)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_spectral_field_shape_check(grid16):
    with pytest.raises(DimensionError):
        SpectralField(grid16, np.zeros((8, 8), complex))
    with pytest.raises(DimensionError):
        VectorField(grid16, np.zeros((3, 16, 16), complex))
