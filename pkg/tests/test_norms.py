import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bsq import norms, oracles
from bsq.errors import ConfigurationError, DimensionError, ParameterError
from bsq.spectral import GridSpec, SpectralField, forward, random_scalar, random_vector


def test_lebesgue_constant_p3():
    for dim, n in ((2, 16), (3, 8)):
        grid = GridSpec(dim, n)
        val = norms.lebesgue_norm(np.full(grid.shape, 2.0), 3, grid)
        assert val == pytest.approx(2 * (2 * math.pi) ** (dim / 3), rel=1e-13)


def test_lebesgue_cos_p2(grid16):
    val = norms.lebesgue_norm(np.cos(grid16.coords[0]), 2)
    assert val == pytest.approx(math.sqrt(2) * math.pi, rel=1e-13)


def test_lebesgue_p4_matches_direct_sum(rng, grid16):
    vals = rng.standard_normal(grid16.shape)
    direct = sum(float(v) ** 4 for v in vals.ravel()) * grid16.cell_volume
    assert norms.lebesgue_norm(vals, 4) == pytest.approx(direct ** 0.25, rel=1e-12)


def test_lebesgue_errors_and_inf(grid16):
    with pytest.raises(ParameterError):
        norms.lebesgue_norm(np.ones(grid16.shape), 0.5)
    vals = np.zeros(grid16.shape)
    vals[3, 4] = -7.0
    assert norms.lebesgue_norm(vals, math.inf) == 7.0


def test_vector_lebesgue_uses_euclidean_magnitude(grid16):
    v = np.stack([np.full(grid16.shape, 3.0), np.full(grid16.shape, 4.0)])
    assert norms.lebesgue_norm(v, math.inf, grid16) == pytest.approx(5.0)


def test_sobolev_examples(grid16):
    c = np.zeros(grid16.shape, complex)
    c[3, 0] = c[-3, 0] = 0.5
    c3 = SpectralField(grid16, c)
    assert norms.sobolev_norm(c3, 2, homogeneous=True) == pytest.approx(9 * norms.l2_norm(c3), rel=1e-13)
    f = random_scalar(grid16, 0)
    assert norms.sobolev_norm(f, 0) == pytest.approx(norms.lebesgue_norm(f, 2), rel=1e-12)


def test_interpolation_inequality_constant_one(grid32):
    for seed in range(10):
        f = random_scalar(grid32, seed, decay=1.0)
        lhs = norms.sobolev_norm(f, 1)
        rhs = norms.l2_norm(f) ** 0.5 * norms.sobolev_norm(f, 2) ** 0.5
        assert lhs <= rhs * (1 + 1e-14)


def test_homogeneous_dominated_by_inhomogeneous(grid16):
    f = random_scalar(grid16, 1, mean_zero=True)
    for s in (0.0, 0.5, 1, 2.5):
        assert norms.sobolev_norm(f, s, homogeneous=True) <= norms.sobolev_norm(f, s)


def test_homogeneous_warns_on_mean(grid16):
    f = random_scalar(grid16, 2)
    with pytest.warns(norms.MeanModeWarning):
        norms.sobolev_norm(f, 1, homogeneous=True)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        norms.sobolev_norm(random_scalar(grid16, 2, mean_zero=True), 1, homogeneous=True)


def test_bmo_constant_is_zero(grid16):
    assert norms.bmo_norm(np.full(grid16.shape, 5.0), grid=grid16) == 0.0


def test_bmo_step_field_matches_brute_force(grid16):
    step = np.sign(np.sin(grid16.coords[0]))
    fast = norms.bmo_norm(step, 3, grid16)
    assert fast == pytest.approx(oracles.bmo_all_cubes(step[None], 3), rel=1e-14)
    assert fast <= 2 * norms.lebesgue_norm(step, math.inf)


def test_bmo_vector_matches_brute_force():
    grid = GridSpec(3, 8)
    v = random_vector(grid, 3)
    assert norms.bmo_norm(v, 2) == pytest.approx(oracles.bmo_all_cubes(v.physical(), 2), rel=1e-13)


def test_bmo_invariances(grid32):
    f = random_scalar(grid32, 4)
    vals = f.physical()
    b = norms.bmo_norm(vals, grid=grid32)
    # exact for shifts and power-of-two scalings, round-off otherwise
    assert norms.bmo_norm(vals + 3.0, grid=grid32) == pytest.approx(b, rel=1e-14)
    assert norms.bmo_norm(-4.0 * vals, grid=grid32) == 4.0 * b
    assert norms.bmo_norm(0.3 * vals, grid=grid32) == pytest.approx(0.3 * b, rel=1e-14)


def test_bmo_monotone_in_depth(grid32):
    f = random_scalar(grid32, 5)
    vals = [norms.bmo_norm(f, d) for d in range(5)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_bmo_indivisible_grid(grid16):
    with pytest.raises(ConfigurationError):
        norms.bmo_norm(random_scalar(grid16, 0), 5)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), depth=st.integers(0, 3))
def test_bmo_le_twice_linf(seed, depth):
    grid = GridSpec(2, 16)
    f = random_scalar(grid, seed, decay=float(seed % 3))
    assert norms.bmo_norm(f, depth) <= 2 * norms.lebesgue_norm(f, math.inf)


def test_commutator_zero_cases(grid16):
    th = random_scalar(grid16, 1)
    u0 = random_vector(grid16, 2) * 0.0
    assert np.abs(norms.commutator(u0, th, 2).coeffs).max() == 0.0
    const = SpectralField(grid16, np.zeros(grid16.shape, complex))
    const.coeffs[0, 0] = 1.5
    u = random_vector(grid16, 3, divergence_free=True)
    assert np.abs(norms.commutator(u, const, 2).coeffs).max() == 0.0


def test_commutator_single_mode_oracle(grid16):
    x, y = grid16.coords
    u = forward(np.stack([np.cos(2 * y), np.zeros_like(y)]))
    th = forward(np.sin(3 * x + y))
    for kind in ("bessel", "riesz"):
        fast = norms.commutator(u, th, 2.5, kind).coeffs
        ref = oracles.commutator(u.coeffs, th.coeffs, 2.5, kind)
        assert np.abs(fast - ref).max() < 1e-10


def test_commutator_flags_and_errors(grid16):
    u = random_vector(grid16, 4)
    th = random_scalar(grid16, 5)
    assert "u_not_divergence_free" in norms.commutator(u, th, 1).flags
    with pytest.raises(DimensionError):
        norms.commutator(u, random_scalar(GridSpec(2, 32), 0), 1)
    with pytest.raises(DimensionError):
        norms.commutator(th, u, 1)


def test_commutator_probe_zero_cases(grid16):
    th = random_scalar(grid16, 1)
    pr = norms.commutator_probe(random_vector(grid16, 2) * 0.0, th, 2)
    assert pr.lhs_norm == 0 and pr.kp_ratio == 0 and pr.feff_ratio == 0
    const = SpectralField(grid16, np.zeros(grid16.shape, complex))
    const.coeffs[0, 0] = 2.0
    pr = norms.commutator_probe(random_vector(grid16, 3, divergence_free=True), const, 2)
    assert pr.lhs_norm == 0


def test_commutator_probe_finite(grid32):
    u = random_vector(grid32, 6, divergence_free=True, band=6, decay=2)
    th = random_scalar(grid32, 7, band=6, decay=2)
    pr = norms.commutator_probe(u, th, 2.0)
    assert 0 < pr.kp_ratio < math.inf and 0 < pr.feff_ratio < math.inf
