"""Space-time stencil probes: local jets of an evolved field from raw grid values.

A :class:`StencilProbe` is handed to ``evolve``; it snaps each requested
sample to the nearest grid point and time level and stores the
(2 half + 1)^2 patches at 2 time_half + 1 consecutive steps.  Finite-difference
derivatives of the patch build a :class:`~wavemap.jets.Jet`, on which the
commuted wave equations are evaluated exactly.
"""

from __future__ import annotations

from math import factorial

import numpy as np

from .errors import ConfigError
from .jets import Jet, SpacetimeJets, _monomials
from .nullform import COMMUTED, commuted_equation_rhs, commuted_operator


def fd_weights(offsets, max_deriv: int) -> np.ndarray:
    """Weights W[d, i] so that sum_i W[d, i] f(offsets[i]) ~ f^(d)(0) on unit spacing."""
    s = np.asarray(offsets, dtype=float)
    npts = s.size
    if max_deriv >= npts:
        raise ValueError(f"{npts} points cannot resolve derivative order {max_deriv}")
    A = np.array([s ** m / factorial(m) for m in range(npts)])
    inv = np.linalg.inv(A)
    return inv[:, :max_deriv + 1].T


class StencilProbe:
    """Collect raw patches around sample points (t, x1, x2) during a run."""

    def __init__(self, t, x1, x2, half: int = 4, time_half: int = 4):
        self.t_req = np.atleast_1d(np.asarray(t, dtype=float))
        self.x1_req = np.atleast_1d(np.asarray(x1, dtype=float))
        self.x2_req = np.atleast_1d(np.asarray(x2, dtype=float))
        if not self.t_req.shape == self.x1_req.shape == self.x2_req.shape:
            raise ValueError("t, x1, x2 must have equal shapes")
        self.half, self.time_half = int(half), int(time_half)
        self.dt = None
        self.h = None

    def start(self, t0: float, dt: float):
        self.t0, self.dt = t0, dt
        self.centre = np.rint((self.t_req - t0) / dt).astype(np.int64)
        if np.any(self.centre < self.time_half):
            bad = int(np.argmin(self.centre))
            raise ConfigError(f"probe {bad} at t={self.t_req[bad]} lacks {self.time_half} earlier steps")
        w = 2 * self.half + 1
        self.patches = np.full((self.t_req.size, 2 * self.time_half + 1, w, w, 3), np.nan)
        self.ci = self.cj = None

    def observe(self, step: int, solver):
        if self.ci is None:
            g = solver.grid
            self.h = g.h
            self.ci = np.rint(g.index_of(self.x1_req)).astype(np.int64)
            self.cj = np.rint(g.index_of(self.x2_req)).astype(np.int64)
            x = g.coords()
            self.x1 = x[np.clip(self.ci, 0, g.n - 1)]
            self.x2 = x[np.clip(self.cj, 0, g.n - 1)]
        lag = step - self.centre
        sel = np.flatnonzero(np.abs(lag) <= self.time_half)
        if sel.size == 0:
            return
        phi, _ = solver.patch(self.ci[sel], self.cj[sel], self.half)
        self.patches[sel, lag[sel] + self.time_half] = phi

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.centre * self.dt

    @property
    def complete(self) -> bool:
        return self.dt is not None and bool(np.all(np.isfinite(self.patches)))

    def field_jet(self, order: int):
        """(SpacetimeJets at the snapped points, Jet of phi with batch shape (P, 3))."""
        if not self.complete:
            raise ConfigError("probe patches incomplete (run ended before the probe window closed?)")
        wt = fd_weights(np.arange(-self.time_half, self.time_half + 1), order)
        ws = fd_weights(np.arange(-self.half, self.half + 1), order)
        monos = _monomials(3, order)
        coef = np.zeros((self.t_req.size, 3, len(monos)))
        for m, (a, b, c) in enumerate(monos):
            d = np.einsum("t,i,j,ptijc->pc", wt[a], ws[b], ws[c], self.patches)
            coef[:, :, m] = d / (self.dt ** a * self.h ** (b + c) * factorial(a) * factorial(b) * factorial(c))
        S = SpacetimeJets(self.times, self.x1, self.x2, order)
        return S, Jet(coef, 3, order)


def commuted_equation_residual_on_run(probe: StencilProbe, n: int, which: str) -> float:
    """max |box(D phi) - F_D| over the probe samples, D = Omega^n, L Omega^n or Lb Omega^n."""
    if which not in COMMUTED:
        raise ValueError(f"unknown commuted equation {which!r}")
    order = n + 3
    if 2 * probe.half < order or 2 * probe.time_half < order:
        raise ConfigError(f"probe stencils ({2 * probe.half + 1} points) too short for order-{order} jets")
    S, phi = probe.field_jet(order)
    lhs = S.box(commuted_operator(n, which, phi, S))
    rhs = commuted_equation_rhs(n, which, phi, S)
    return float(np.max(np.abs((lhs - rhs).value)))
