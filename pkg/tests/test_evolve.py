import numpy as np
import pytest

from exact import NullComposedWave, RotatingGeodesic, restrict
from wavemap.errors import BlowUpError, ConfigError
from wavemap.evolve import FieldState, Solver, default_band, evolve, rhs, step
from wavemap.grid import GridSpec
from wavemap.pulse import PulseConfig, synthesize_cauchy_data


def periodic(n, L=1.0, **kw):
    return GridSpec(n=n, L_box=L, boundary="periodic", **kw)


def state_of(sol, grid, t=0.0):
    X1, X2 = grid.mesh()
    return FieldState(t, *sol.at(t, X1, X2))


# -- rhs ------------------------------------------------------------------------

def test_rhs_of_constant_map_vanishes():
    g = GridSpec(n=64, L_box=1.0)
    phi = np.zeros((64, 64, 3))
    phi[..., 2] = 1.0
    np.testing.assert_array_equal(rhs(FieldState(0.0, phi, np.zeros_like(phi)), g), 0.0)


def test_rhs_of_rotating_geodesic_is_exact():
    g = periodic(64)
    geo = RotatingGeodesic(omega=1.3)
    s = state_of(geo, g, 0.4)
    np.testing.assert_allclose(rhs(s, g), -1.3 ** 2 * s.phi, atol=1e-13)


def test_rhs_on_null_composed_wave_is_second_order():
    wave = NullComposedWave()
    errs = []
    for n in (64, 128):
        g = periodic(n)
        s = state_of(wave, g, 0.2)
        eps = 1e-4
        X1, X2 = g.mesh()
        tt = (wave.at(0.2 + eps, X1, X2)[0] - 2 * s.phi + wave.at(0.2 - eps, X1, X2)[0]) / eps ** 2
        errs.append(np.max(np.abs(rhs(s, g) - tt)))
    assert np.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.2)


def test_rhs_flags_non_finite_values():
    g = GridSpec(n=64, L_box=1.0)
    phi = np.zeros((64, 64, 3))
    phi[..., 2] = 1.0
    phi[5, 7] = np.nan
    with pytest.raises(BlowUpError, match=r"\(5, 7\)"):
        rhs(FieldState(0.0, phi, np.zeros_like(phi)), g)


# -- step -----------------------------------------------------------------------

def test_step_leaves_constant_map_unchanged():
    g = GridSpec(n=64, L_box=1.0)
    phi = np.zeros((64, 64, 3))
    phi[..., 2] = 1.0
    out = step(FieldState(0.0, phi, np.zeros_like(phi)), g)
    np.testing.assert_array_equal(out.phi, phi)
    assert out.t == pytest.approx(g.dt)


def test_geodesic_step_local_error_is_third_order():
    geo = RotatingGeodesic(omega=2.0)
    errs = []
    for dt in (0.02, 0.01):
        g = periodic(64, L=4.0, dt=dt)
        s = step(state_of(geo, g), g)
        errs.append(np.max(np.abs(s.phi - geo.at(dt, 0.0, 0.0)[0])))
    assert np.log2(errs[0] / errs[1]) == pytest.approx(3.0, abs=0.3)


def test_step_restores_constraints():
    g = periodic(64)
    s = step(state_of(NullComposedWave(), g), g)
    norm_err, tangent_err = s.constraint_error()
    assert norm_err < 1e-14 and tangent_err < 1e-13


def test_step_aborts_on_large_repair():
    g = periodic(64)
    with pytest.raises(BlowUpError, match="constraint repair"):
        step(state_of(NullComposedWave(), g), g, repair_abort=0.0)


# -- evolve ---------------------------------------------------------------------

def _final_error(sol, n, order=2, t_final=0.5, L=1.0, **kw):
    g = periodic(n, L=L, stencil_order=order, **kw)
    h = evolve(sol, g, t_final)
    X1, X2 = g.mesh()
    return h, np.sqrt(np.mean(np.sum((h.final.phi - sol.at(t_final, X1, X2)[0]) ** 2, -1)))


def test_trivial_data_gives_constant_history():
    g = GridSpec(n=64, L_box=5.0)
    data = synthesize_cauchy_data(g, PulseConfig(delta=0.2, profile_amp=0.0), min_points=0)
    h = evolve(data, g, -3.0, save_stride=10)
    for s in h.states:
        np.testing.assert_array_equal(s.phi[..., 2], 1.0)
    assert np.all(np.diff([s.t for s in h.states]) > 0)
    assert h.states[-1].t == pytest.approx(-3.0)
    assert not h.failed and h.energy.max() == 0.0


def test_geodesic_converges_at_second_order():
    geo = RotatingGeodesic(omega=1.5)
    errs = [_final_error(geo, 64, L=4.0, dt=dt, t_final=1.0)[1] for dt in (0.02, 0.01, 0.005)]
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    np.testing.assert_allclose(rates, 2.0, atol=0.2)


@pytest.mark.parametrize("order", [2, 4])
def test_null_composed_wave_error_ratio(order):
    wave = NullComposedWave()
    errs = [_final_error(wave, n, order=order)[1] for n in (64, 128, 256)]
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    # leapfrog in time keeps the scheme second order whatever the spatial stencil
    np.testing.assert_allclose(rates[-1], 2.0, atol=0.2)


def self_convergence_rate(sol, ns=(64, 128, 256), t_final=0.5):
    finals = [evolve(sol, periodic(n), t_final).final.phi for n in ns]
    d1 = np.sqrt(np.mean((finals[0] - restrict(finals[1])) ** 2))
    d2 = np.sqrt(np.mean((finals[1] - restrict(finals[2])) ** 2))
    return np.log2(d1 / d2)


def test_null_composed_wave_self_convergence():
    assert self_convergence_rate(NullComposedWave()) == pytest.approx(2.0, abs=0.2)


def test_energy_conserved_on_periodic_wave():
    drifts = [_final_error(NullComposedWave(), n, t_final=1.0)[0].summary()["energy_drift"] for n in (64, 128)]
    assert drifts[1] < 1e-3
    assert drifts[1] < drifts[0]


def test_time_reversal_returns_initial_state():
    wave = NullComposedWave()
    g = periodic(128)
    s0 = state_of(wave, g)
    fwd = evolve(s0, g, 0.3).final
    back = evolve(FieldState(0.0, fwd.phi, -fwd.pi), g, 0.3).final
    steps = round(0.3 / g.dt)
    err = np.max(np.abs(back.phi - s0.phi))
    assert err < steps * g.dt ** 2


def test_runs_are_bitwise_deterministic():
    g = periodic(64)
    a = evolve(NullComposedWave(), g, 0.2, threads=1).final
    b = evolve(NullComposedWave(), g, 0.2).final
    assert np.array_equal(a.phi, b.phi) and np.array_equal(a.pi, b.pi)


def test_blow_up_is_reported_with_time():
    g = periodic(64)
    h = evolve(NullComposedWave(), g, 0.5, gradient_factor=0.5)
    assert h.failed and "gradient" in h.failure
    assert h.t_fail == pytest.approx(g.dt)
    s = state_of(NullComposedWave(), g)
    s.pi[3, 3] = np.inf
    h2 = evolve(s, g, 0.5)
    assert h2.failed and "non-finite" in h2.failure
    assert h2.steps < round(0.5 / g.dt)


def test_unaligned_final_time_is_hit_exactly():
    g = periodic(64)
    h = evolve(RotatingGeodesic(), g, 0.123)
    assert h.t_final == pytest.approx(0.123, abs=1e-14)
    assert h.dt <= g.dt


def test_band_matches_full_grid_near_pulse():
    cfg = PulseConfig(delta=0.1)
    g = GridSpec(n=512, L_box=4.4, cfl=0.4)
    data = synthesize_cauchy_data(g, cfg)
    tf = -3.4
    full = evolve(data, g, tf).final
    band = evolve(data, g, tf, band=default_band(0.1, g.h)).final
    X1, X2 = g.mesh()
    near = (tf + np.hypot(X1, X2)) / 2 <= 0.2
    assert np.max(np.abs(full.phi - band.phi)[near]) < 1e-13


def test_solver_sample_interpolates_smooth_fields():
    g = periodic(128, stencil_order=4)
    wave = NullComposedWave()
    sol = Solver(g)
    sol.load(0.0, wave.sample)
    pts = np.array([[0.1234, -0.4321], [0.77, 0.05]])
    q = sol.sample(pts[:, 0], pts[:, 1])
    np.testing.assert_allclose(q[:, 0], wave.at(0.0, pts[:, 0], pts[:, 1])[0], atol=1e-6)
    np.testing.assert_allclose(q[:, 6], wave.at(0.0, pts[:, 0], pts[:, 1])[1], atol=1e-5)


def _hessian_error(width, n=64):
    """Max error of the sampled d11 phi for a single Fourier mode."""
    k = 2 * np.pi

    def field(X1, X2):
        a = 0.3 * np.sin(k * X1)
        return np.stack([np.cos(a), np.sin(a), 0 * a], -1), np.zeros(np.shape(X1) + (3,))

    sol = Solver(periodic(n), sample_width=width)
    sol.load(0.0, field)
    x1 = np.linspace(-0.9, 0.9, 37) + 0.013
    x2 = np.full_like(x1, 0.21)
    q = sol.sample(x1, x2)
    a, a1, a11 = 0.3 * np.sin(k * x1), 0.3 * k * np.cos(k * x1), -0.3 * k * k * np.sin(k * x1)
    exact = -np.sin(a) * a11 - np.cos(a) * a1 ** 2
    return np.max(np.abs(q[:, 3, 0] - exact))


def test_wider_sample_stencil_sharpens_second_derivatives():
    errs = [_hessian_error(w) for w in (6, 10, 14)]
    assert errs[1] < errs[0] / 30 and errs[2] < errs[1] / 30
    # second derivatives of a w-point interpolant converge at order w - 2
    rate = np.log2(_hessian_error(6, 64) / _hessian_error(6, 128))
    assert rate == pytest.approx(4.0, abs=0.4)


@pytest.mark.parametrize("width", [3, 5, 18])
def test_sample_width_validated(width):
    with pytest.raises(ConfigError, match="sample_width"):
        Solver(periodic(64), sample_width=width)
