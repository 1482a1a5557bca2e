"""Uniform Cartesian grid description shared by the data builder and the solver."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

# symmetric second-derivative and antisymmetric first-derivative weights, offsets 0..R
SECOND_DIFF = {
    2: (-2.0, 1.0),
    4: (-5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0),
    6: (-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0),
}
FIRST_DIFF = {
    2: (0.0, 1.0 / 2.0),
    4: (0.0, 2.0 / 3.0, -1.0 / 12.0),
    6: (0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0),
}
BOUNDARIES = ("dirichlet", "periodic")


@dataclass
class GridSpec:
    """Square grid on [-L_box, L_box]^2 with n cell-centred points per side.

    Points sit at x_i = -L_box + (i + 1/2) h, h = 2 L_box / n, so the origin is
    never a grid point.  ``dt`` defaults to cfl * h.
    """

    n: int
    L_box: float
    cfl: float = 0.4
    dt: float | None = None
    stencil_order: int = 2
    boundary: str = "dirichlet"

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ConfigError(problems)
        if self.dt is None:
            self.dt = self.cfl * self.h
        else:
            self.cfl = self.dt / self.h

    def problems(self) -> list[str]:
        out = []
        if int(self.n) != self.n or self.n < 64:
            out.append(f"grid.n must be an integer >= 64, got {self.n}")
        if not self.L_box > 0:
            out.append(f"grid.L_box must be positive, got {self.L_box}")
        if self.dt is None and not 0 < self.cfl <= 0.5:
            out.append(f"grid.cfl must lie in (0, 0.5], got {self.cfl}")
        if self.dt is not None and self.L_box > 0 and self.n >= 1:
            if not 0 < self.dt <= 0.5 * 2 * self.L_box / self.n * (1 + 1e-12):
                out.append(f"grid.dt={self.dt} violates 0 < dt <= 0.5 h")
        if self.stencil_order not in SECOND_DIFF:
            out.append(f"grid.stencil_order must be one of {sorted(SECOND_DIFF)}, got {self.stencil_order}")
        if self.boundary not in BOUNDARIES:
            out.append(f"grid.boundary must be one of {BOUNDARIES}, got {self.boundary!r}")
        return out

    @property
    def h(self) -> float:
        return 2.0 * self.L_box / self.n

    @property
    def radius(self) -> int:
        return self.stencil_order // 2

    def coords(self) -> np.ndarray:
        return -self.L_box + (np.arange(self.n) + 0.5) * self.h

    def mesh(self):
        x = self.coords()
        return np.meshgrid(x, x, indexing="ij")

    def index_of(self, x) -> np.ndarray:
        """Fractional index of coordinate x (inverse of the point map)."""
        return (np.asarray(x) + self.L_box) / self.h - 0.5


def annulus_points(grid: GridSpec, r_lo: float, r_hi: float):
    """Grid points with r_lo <= r <= r_hi, enumerated row by row without an n^2 mask."""
    x = grid.coords()
    xs1, xs2 = [], []
    for i, x1 in enumerate(x):
        if abs(x1) > r_hi:
            continue
        lo2 = max(r_lo * r_lo - x1 * x1, 0.0)
        hi2 = r_hi * r_hi - x1 * x1
        a, b = np.sqrt(lo2), np.sqrt(hi2)
        for sgn in (-1.0, 1.0):
            lo, hi = (-b, -a) if sgn < 0 else (a, b)
            j0 = max(int(np.floor(grid.index_of(lo))), 0)
            j1 = min(int(np.ceil(grid.index_of(hi))), grid.n - 1)
            if j1 < j0:
                continue
            cols = x[j0:j1 + 1]
            r = np.hypot(x1, cols)
            keep = (r >= r_lo) & (r <= r_hi) & ((cols < 0) if sgn < 0 else (cols >= 0))
            xs1.append(np.full(int(keep.sum()), x1))
            xs2.append(cols[keep])
    if not xs1:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(xs1), np.concatenate(xs2)
