import numpy as np
import pytest
from hypothesis import given, strategies as st

from wavemap.sobolev import (WHICH, BandLimited, CircleFunction, ConeFunction, PreconditionError,
                             sobolev_battery, sobolev_ratio, zoo, zoo_ratios)


@given(c=st.floats(0.1, 10), r=st.floats(0.5, 4), u=st.floats(-4, -0.5))
def test_constant_on_circle(c, r, u):
    """|f| = c: sup norm over (|u|^{-1/2} ||f||_2) = sqrt(|u| / (2 pi r))."""
    f = CircleFunction(np.full(32, c), r, u)
    assert sobolev_ratio(f, "circle_Linf") == pytest.approx(np.sqrt(abs(u) / (2 * np.pi * r)), rel=1e-12)


def test_zero_function_gives_zero_ratio():
    f = CircleFunction(np.zeros(16), 1.0, -1.0)
    assert sobolev_ratio(f, "circle_L6") == 0.0
    cone = ConeFunction("outgoing", np.linspace(0, 0.1, 9), np.linspace(2, 2.1, 9), np.full(9, -2.0),
                        np.zeros((9, 16)), np.zeros((9, 16)))
    assert sobolev_ratio(cone, "cone_Cu_L4") == 0.0


def test_cone_preconditions():
    m = BandLimited.random(np.random.default_rng(1), "incoming").sample(17, 16)
    with pytest.raises(PreconditionError, match="outgoing"):
        sobolev_ratio(m, "cone_Cu_L2")
    out = BandLimited.random(np.random.default_rng(1), "outgoing").sample(17, 16)
    shifted = ConeFunction(out.kind, out.coord, out.r, out.u, out.values + 1.0, out.deriv)
    with pytest.raises(PreconditionError, match="vanish"):
        sobolev_ratio(shifted, "cone_Cu_L4")
    with pytest.raises(ValueError, match="which"):
        sobolev_ratio(out, "cone_Cu_L3")


@pytest.mark.parametrize("which", WHICH)
def test_zoo_ratios_are_bounded_and_resolution_stable(which):
    members = zoo(np.random.default_rng(7), which, 40)
    base = zoo_ratios(members, which)
    fine = zoo_ratios(members, which, (65, 64))
    assert np.all(np.isfinite(base)) and np.all(base >= 0)
    np.testing.assert_allclose(fine, base, rtol=0.1)


def test_battery_passes_on_small_zoo():
    checks = sobolev_battery(seed=3, count=50)
    assert [c.which for c in checks] == list(WHICH)
    assert all(c.passed for c in checks), checks
