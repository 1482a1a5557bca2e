import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wavemap.geometry import (AxisExclusionError, deformation_current, null_frame_derivatives,
                              stress_energy, to_null_coords)

finite = st.floats(-5, 5)


@given(finite, finite, finite)
def test_null_coordinates_roundtrip(t, x1, x2):
    c = to_null_coords(t, x1, x2)
    tt, y1, y2 = c.cartesian()
    assert c.u <= c.ub
    assert c.ub - c.u == pytest.approx(c.r)
    np.testing.assert_allclose([tt, y1, y2], [t, x1, x2], atol=1e-12)
    assert 0.0 <= c.theta < 2 * np.pi


def test_origin_is_flagged_on_axis():
    c = to_null_coords(np.array([0.0, 1.0]), np.array([0.0, 1.0]), np.array([0.0, 0.0]))
    assert c.on_axis.tolist() == [True, False]


def test_frame_decomposition_inverts(rng):
    n = 50
    c = to_null_coords(rng.normal(size=n), rng.uniform(0.1, 3, n), rng.uniform(-3, 3, n))
    g = rng.normal(size=(3, n, 3))
    d = null_frame_derivatives(g[0], g[1], g[2], c)
    back = d.cartesian_gradient(c.theta)
    for a, b in zip(back, g):
        np.testing.assert_allclose(a, b, atol=1e-13)


def test_axis_exclusion_raises():
    c = to_null_coords(np.array([0.0]), np.array([1e-9]), np.array([0.0]))
    g = np.zeros((1, 3))
    with pytest.raises(AxisExclusionError):
        null_frame_derivatives(g, g, g, c, r_min=1e-6)


@given(st.integers(0, 2 ** 31))
def test_stress_energy_frame_components_are_nonnegative(seed):
    rng = np.random.default_rng(seed)
    c = to_null_coords(rng.normal(size=20), rng.uniform(0.1, 3, 20), rng.uniform(-3, 3, 20))
    g = rng.normal(size=(3, 20, 3)) * 10 ** rng.uniform(-3, 3)
    d = null_frame_derivatives(g[0], g[1], g[2], c)
    for X, Y in (("L", "L"), ("L", "Lb"), ("Lb", "Lb")):
        assert np.all(stress_energy(d, X, Y) >= 0)


def test_deformation_currents_of_L_and_Lb_are_opposite(rng):
    c = to_null_coords(np.zeros(10), rng.uniform(0.5, 2, 10), rng.uniform(-2, 2, 10))
    g = rng.normal(size=(3, 10, 3))
    d = null_frame_derivatives(g[0], g[1], g[2], c)
    kl = deformation_current("L", d, c.r)
    np.testing.assert_allclose(kl, -deformation_current("Lb", d, c.r))
    np.testing.assert_array_equal(deformation_current("Omega", d, c.r), 0.0)
    expect = (np.sum(d.slash ** 2, -1) + np.sum(d.L * d.Lb, -1)) / (2 * c.r)
    np.testing.assert_allclose(kl, expect)
