import numpy as np
import pytest

from wavemap.errors import ConfigError
from wavemap.grid import FIRST_DIFF, SECOND_DIFF, GridSpec, annulus_points


def test_cell_centred_coordinates_avoid_origin():
    g = GridSpec(n=64, L_box=1.0)
    x = g.coords()
    assert x[0] == pytest.approx(-1 + g.h / 2)
    assert np.min(np.abs(x)) == pytest.approx(g.h / 2)
    assert g.index_of(x[10]) == pytest.approx(10)


def test_dt_defaults_to_cfl_times_h():
    g = GridSpec(n=128, L_box=2.0, cfl=0.3)
    assert g.dt == pytest.approx(0.3 * g.h)
    g2 = GridSpec(n=128, L_box=2.0, dt=0.25 * 4.0 / 128)
    assert g2.cfl == pytest.approx(0.25)


def test_all_problems_reported_together():
    with pytest.raises(ConfigError) as exc:
        GridSpec(n=10, L_box=-1.0, cfl=0.9, stencil_order=3, boundary="open")
    assert len(exc.value.problems) == 5


@pytest.mark.parametrize("order", sorted(SECOND_DIFF))
def test_stencil_weights_are_consistent(order):
    c2, c1 = SECOND_DIFF[order], FIRST_DIFF[order]
    # second difference annihilates constants and reproduces x^2 -> 2
    assert c2[0] + 2 * sum(c2[1:]) == pytest.approx(0.0, abs=1e-14)
    assert 2 * sum(w * k * k for k, w in enumerate(c2)) == pytest.approx(2.0)
    # first difference reproduces x -> 1
    assert 2 * sum(w * k for k, w in enumerate(c1)) == pytest.approx(1.0)


@pytest.mark.parametrize("order", sorted(SECOND_DIFF))
def test_stencil_order_of_accuracy(order):
    def err(h):
        k = np.arange(len(SECOND_DIFF[order]))
        f = np.sin(k * h + 0.3) + np.sin(-k * h + 0.3)
        approx = (SECOND_DIFF[order][0] * np.sin(0.3) + np.sum(np.array(SECOND_DIFF[order])[1:] * f[1:])) / h ** 2
        return abs(approx + np.sin(0.3))
    rate = np.log2(err(0.1) / err(0.05))
    assert rate == pytest.approx(order, abs=0.2)


def test_annulus_points_lie_in_annulus():
    g = GridSpec(n=128, L_box=2.0)
    x1, x2 = annulus_points(g, 0.5, 1.0)
    r = np.hypot(x1, x2)
    assert x1.size > 0 and np.all((r >= 0.5) & (r <= 1.0))
