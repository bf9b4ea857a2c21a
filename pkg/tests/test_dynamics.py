import math

import numpy as np
import pytest

from bsq import norms, oracles
from bsq.errors import BlowupSignal, ConfigurationError, ParameterError
from bsq.dynamics import (
    ForcingSpec,
    State,
    StepperConfig,
    SystemSpec,
    cfl_dt,
    make_initial,
    rhs,
    run,
    step,
)
from bsq.spectral import GridSpec, VectorField, forward, leray_project, random_scalar, random_vector, truncate


def test_system_names():
    assert SystemSpec(nu=0.01).system == "B_nu_0"
    assert SystemSpec(nu=0, kappa=0.1).system == "B_0_kappa"
    assert SystemSpec(nu=0, kappa=0).system == "B_0_0"
    full = SystemSpec(nu=0.1, kappa=0.1)
    assert full.system == "full" and not full.is_core_system
    with pytest.raises(ParameterError):
        SystemSpec(nu=-1)


def test_radius_must_fit_dealiased_band(grid32):
    spec = SystemSpec(R=11)
    with pytest.raises(ConfigurationError):
        spec.validate_for(grid32)
    with pytest.raises(ConfigurationError):
        make_initial("taylor_green", grid32, 11)


def test_taylor_green_initial(grid32):
    st = make_initial("taylor_green", grid32, 10)
    x, y = grid32.coords
    up = st.u.physical()
    assert np.abs(up[0] + np.cos(x) * np.sin(y)).max() < 1e-14
    assert np.abs(up[1] - np.sin(x) * np.cos(y)).max() < 1e-14
    assert np.abs(st.theta.physical() - np.cos(x)).max() < 1e-14
    assert st.u.divergence_residual() < 1e-15


def test_single_mode_truncation_idempotent(grid32):
    st = make_initial("single_mode", grid32, 10, k=(3, 2))
    assert np.array_equal(truncate(st.u, 10).coeffs, st.u.coeffs)
    grid = GridSpec(3, 16)
    st3 = make_initial("single_mode", grid, 5, k=(1, 2, 0))
    assert st3.u.divergence_residual() < 1e-14
    with pytest.raises(ParameterError):
        make_initial("single_mode", grid32, 10, k=(0, 0))


def test_random_spectrum_slope():
    grid = GridSpec(2, 64)
    st = make_initial("random_spectrum", grid, 21, seed=7, decay_p=4.0)
    kmag = grid.kmag
    mag = np.sqrt((np.abs(st.u.coeffs) ** 2).sum(axis=0))
    shells = np.arange(2, 21)
    avg = [mag[(kmag >= k - 0.5) & (kmag < k + 0.5)].mean() for k in shells]
    slope = np.polyfit(np.log(shells), np.log(avg), 1)[0]
    assert abs(slope + 4.0) <= 0.2
    assert st.u.divergence_residual() < 1e-14


def test_unknown_initial_kind(grid32):
    with pytest.raises(ParameterError):
        make_initial("vortex_sheet", grid32, 10)


def test_rhs_no_advection_example(grid32):
    x, y = grid32.coords
    th = forward(np.cos(2 * y) + np.cos(x), grid32)
    u = VectorField(grid32, np.zeros((2,) + grid32.shape, complex))
    spec = SystemSpec(nu=0.3, kappa=0.05, R=10)
    du, dth = rhs(State(u, th), spec)
    buoy = np.zeros_like(u.coeffs)
    buoy[1] = th.coeffs
    assert np.abs(du.coeffs - leray_project(VectorField(grid32, buoy)).coeffs).max() < 1e-15
    assert np.abs(dth.coeffs + 0.05 * grid32.k2 * th.coeffs).max() < 1e-15


def test_taylor_green_is_steady_euler():
    grid = GridSpec(2, 64)
    st = make_initial("taylor_green", grid, 21, theta_amplitude=0.0)
    du, _ = rhs(st, SystemSpec(nu=0, forcing=ForcingSpec("zero"), R=21))
    assert np.abs(du.coeffs).max() <= 1e-12


def test_rhs_matches_galerkin_oracle_3d():
    grid = GridSpec(3, 8)
    R = 2.5
    u = truncate(random_vector(grid, 1, divergence_free=True), R)
    th = truncate(random_scalar(grid, 2), R)
    spec = SystemSpec(nu=0.02, kappa=0.01, R=R)
    du, dth = rhs(State(u, th), spec)
    ou, oth = oracles.galerkin_rhs(u.coeffs, th.coeffs, spec.nu, spec.kappa, R)
    assert np.abs(du.coeffs - ou).max() < 1e-12
    assert np.abs(dth.coeffs - oth).max() < 1e-12


def test_zero_state_is_fixed_point(grid32):
    z = State(VectorField(grid32, np.zeros((2,) + grid32.shape, complex)),
              forward(np.zeros(grid32.shape), grid32))
    out = step(z, SystemSpec(R=10), StepperConfig("rk4"), 0.1)
    assert np.abs(out.u.coeffs).max() == 0 and np.abs(out.theta.coeffs).max() == 0


def test_plain_rk4_diffusion_error_is_fifth_order(grid32):
    spec = SystemSpec(nu=0, kappa=0.1, forcing=ForcingSpec("zero"), R=10)
    st = make_initial("single_mode", grid32, 10, k=(3, 1), amplitude=0.0, theta_amplitude=1.0)
    errs = []
    for h in (0.1, 0.05):
        new = step(st, spec, StepperConfig("rk4"), h)
        exact = st.theta.coeffs[3, 1] * math.exp(-spec.kappa * 10 * h)
        errs.append(abs(new.theta.coeffs[3, 1] - exact))
    assert math.log2(errs[0] / errs[1]) == pytest.approx(5.0, abs=0.1)


def test_step_rejects_bad_dt(grid32):
    st = make_initial("taylor_green", grid32, 10)
    with pytest.raises(ParameterError):
        step(st, SystemSpec(R=10), StepperConfig("rk4"), None)


def test_cfl_examples():
    grid = GridSpec(2, 64)
    spec = SystemSpec(nu=0.0, R=21)
    stepper = StepperConfig(dt_max=0.02)
    zero = State(VectorField(grid, np.zeros((2,) + grid.shape, complex)), forward(np.zeros(grid.shape), grid))
    assert cfl_dt(zero, spec, stepper) == 0.02
    st = make_initial("taylor_green", grid, 21)
    umax = norms.lebesgue_norm(st.u, math.inf)
    loose = StepperConfig(dt_max=10.0)
    assert cfl_dt(st, spec, loose) == pytest.approx(0.5 * grid.dx / umax, rel=1e-15)
    st2 = State(st.u * 2.0, st.theta)
    assert cfl_dt(st2, spec, loose) == pytest.approx(0.5 * cfl_dt(st, spec, loose), rel=1e-15)


def test_cfl_diffusive_limit_only_for_plain_rk4():
    grid = GridSpec(2, 64)
    spec = SystemSpec(nu=5.0, R=21)
    st = make_initial("taylor_green", grid, 21)
    assert cfl_dt(st, spec, StepperConfig("rk4")) < cfl_dt(st, spec, StepperConfig("rk4_if"))


def test_run_zero_length(grid32):
    st = make_initial("taylor_green", grid32, 10)
    tr = run(st, SystemSpec(R=10), StepperConfig(), 0.0)
    assert len(tr.records) == 1 and tr.dts == [] and tr.records[0].t == 0.0


def test_run_fixed_dt_lands_on_t_end(grid32):
    st = make_initial("taylor_green", grid32, 10)
    tr = run(st, SystemSpec(R=10), StepperConfig("rk4", 0.03), 0.1, every=1)
    assert tr.final_state.t == 0.1 and len(tr.dts) == 4
    assert [r.t for r in tr.records][:3] == [0.0, 0.03, 0.06]


def test_run_errors(grid32):
    st = make_initial("taylor_green", grid32, 10)
    with pytest.raises(ParameterError):
        run(st, SystemSpec(R=10), StepperConfig(), -1.0)
    with pytest.raises(ParameterError):
        run(st, SystemSpec(R=10), StepperConfig(), 1.0, every=0)


def test_run_flags_ceiling(grid32):
    st = make_initial("random_spectrum", grid32, 10, amplitude=10.0)
    tr = run(st, SystemSpec(nu=0, R=10), StepperConfig(), 1.0, ceiling=1.0)
    assert tr.flagged and tr.records[-1].flagged and tr.blowup_t > 0
    assert "ceiling" in tr.blowup_reason


def test_robust_large_amplitude_run(grid32):
    st = make_initial("random_spectrum", grid32, 10, amplitude=10.0, seed=3)
    tr = run(st, SystemSpec(nu=0, R=10), StepperConfig(), 0.5, every=5)
    assert all(r.is_finite() for r in tr.records)


def test_nonfinite_state_is_reported(grid32):
    st = make_initial("taylor_green", grid32, 10)
    bad = State(st.u.with_coeffs(st.u.coeffs * np.nan), st.theta)
    with pytest.raises(BlowupSignal):
        step(bad, SystemSpec(R=10), StepperConfig("rk4"), 0.01)
    tr = run(bad, SystemSpec(R=10), StepperConfig(), 1.0)
    assert tr.flagged


def test_observers_see_every_record(grid32):
    seen = []
    st = make_initial("taylor_green", grid32, 10)
    tr = run(st, SystemSpec(R=10), StepperConfig("rk4", 0.01), 0.05, observers=[lambda s, r: seen.append(r.t)],
             every=2)
    assert seen == [r.t for r in tr.records]


def test_buoyancy_spectral_field_forcing(grid32):
    f = VectorField(grid32, np.zeros((2,) + grid32.shape, complex))
    f.coeffs[1, 0, 0] = 1.0
    spec_field = SystemSpec(forcing=ForcingSpec("spectral_field", f), R=10)
    spec_en = SystemSpec(R=10)
    assert ForcingSpec("spectral_field", f).potential_flag
    st = make_initial("random_spectrum", grid32, 10, seed=1)
    a, _ = rhs(st, spec_field)
    b, _ = rhs(st, spec_en)
    assert np.abs(a.coeffs - b.coeffs).max() < 1e-14
    with pytest.raises(ConfigurationError):
        ForcingSpec("spectral_field")


def test_two_dimensional_buoyancy_drives_velocity(grid32):
    st = make_initial("taylor_green", grid32, 10, amplitude=0.0, theta_amplitude=1.0)
    st = State(st.u, forward(np.cos(grid32.coords[0]), grid32))
    tr = run(st, SystemSpec(nu=0.01, R=10), StepperConfig("rk4_if", 0.01), 0.1)
    assert norms.l2_norm(tr.final_state.u) > 0
