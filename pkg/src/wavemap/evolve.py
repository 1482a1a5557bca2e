"""Leapfrog evolution of the wave map system box(phi) = phi Q0(phi, phi) into S^2.

The update (kick-drift-kick with constraint repair) is

    v       = pi + dt/2 tan(acc),  pi_half = v - dt/2 |v|^2 phi
    phi     = normalise(phi + dt pi_half)
    acc     = Lap_h phi + phi |grad_h phi|^2
    pi      = tangential part of (pi_half + dt/2 (acc - phi |pi_half|^2))

so d_t^2 phi = Lap phi + phi(-|pi|^2 + |grad phi|^2), box = d_t^2 - Lap.  Fields
live on square tiles; in band mode only tiles meeting a moving annulus are
updated, which is exact for the region ub <= ub_max up to the band padding
(values there depend only on data with ub <= ub_max).
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass, field
from math import gcd

import numba
import numpy as np

from . import stencil as K
from .errors import BlowUpError, ConfigError
from .grid import FIRST_DIFF, SECOND_DIFF, GridSpec

# points per axis of the Lagrange stencil used by Solver.sample; second
# derivatives of the interpolant lose two orders, and null second derivatives
# such as Lb^2 phi cancel O(delta^-2) against their size
SAMPLE_WIDTH = 10


@dataclass
class FieldState:
    t: float
    phi: np.ndarray
    pi: np.ndarray

    def constraint_error(self) -> tuple[float, float]:
        """(max ||phi| - 1|, max |phi . pi|)."""
        norm = np.linalg.norm(self.phi, axis=-1)
        return float(np.max(np.abs(norm - 1.0))), float(np.max(np.abs(np.sum(self.phi * self.pi, axis=-1))))


@dataclass
class BandSpec:
    """Annulus of live tiles: r in [-t - pad_in, 2 (ub_max + pad_ub) - t]."""

    ub_max: float
    pad_ub: float
    pad_in: float

    def radial_range(self, t: float) -> tuple[float, float]:
        return -t - self.pad_in, 2.0 * (self.ub_max + self.pad_ub) - t


def default_band(delta: float, h: float, ub_max: float | None = None) -> BandSpec:
    ub_max = delta if ub_max is None else ub_max
    return BandSpec(ub_max=ub_max, pad_ub=max(delta, 24 * h), pad_in=max(delta, 24 * h))


def _tile_size(n: int, preferred: int = 32) -> int:
    b = gcd(n, preferred)
    if b >= 8:
        return b
    for cand in range(min(64, n), 7, -1):
        if n % cand == 0:
            return cand
    if n <= 256:
        return n
    raise ConfigError(f"grid.n={n} has no tile size in [8, 64]; use a multiple of 8")


class Solver:
    """Tiled field storage plus the stepping kernels."""

    def __init__(self, grid: GridSpec, band: BandSpec | None = None, tile: int = 32,
                 sample_width: int | None = None):
        self.grid = grid
        self.sample_width = SAMPLE_WIDTH if sample_width is None else int(sample_width)
        if self.sample_width % 2 or not 4 <= self.sample_width <= 16:
            raise ConfigError(f"sample_width must be even and in [4, 16], got {self.sample_width}")
        self.band = band
        self.B = _tile_size(grid.n, tile)
        self.nt = grid.n // self.B
        self.g = grid.radius
        self.periodic = grid.boundary == "periodic"
        if self.periodic and band is not None:
            raise ConfigError("band mode needs a non-periodic grid")
        self.c2 = np.array(SECOND_DIFF[grid.stencil_order])
        self.c1 = np.array(FIRST_DIFF[grid.stencil_order])
        self.slot_of = np.full((self.nt, self.nt), K.VACANT, dtype=np.int64)
        self.tile_ij = np.zeros((0, 2), dtype=np.int64)
        self.status = np.zeros(0, dtype=np.int8)        # 1 live, 0 frozen, -1 free
        pad = self.B + 2 * self.g
        self.phi = np.zeros((0, pad, pad, 3))
        self.pi = np.zeros((0, self.B, self.B, 3))
        self.acc = np.zeros((0, self.B, self.B, 3))
        self.free: list[int] = []
        self.t = 0.0
        self.sampler_fn = None

    # -- slots ---------------------------------------------------------------
    def _grow(self, extra: int):
        old = self.status.size
        cap = max(2 * old, old + extra, 16)
        pad = self.B + 2 * self.g

        def grow(a, shape):
            out = np.zeros((cap,) + shape)
            out[:old] = a
            return out

        self.phi = grow(self.phi, (pad, pad, 3))
        self.pi = grow(self.pi, (self.B, self.B, 3))
        self.acc = grow(self.acc, (self.B, self.B, 3))
        tij = np.zeros((cap, 2), dtype=np.int64)
        tij[:old] = self.tile_ij
        self.tile_ij = tij
        st = np.full(cap, -1, dtype=np.int8)
        st[:old] = self.status
        self.status = st
        self.free.extend(range(cap - 1, old - 1, -1))

    def _allocate(self, ti: int, tj: int) -> int:
        if not self.free:
            self._grow(1)
        s = self.free.pop()
        self.slot_of[ti, tj] = s
        self.tile_ij[s] = (ti, tj)
        self.status[s] = 1
        self.phi[s] = 0.0
        self.phi[s, :, :, 2] = 1.0
        self.pi[s] = 0.0
        self.acc[s] = 0.0
        return s

    def tile_coords(self, s: int):
        x = self.grid.coords()
        ti, tj = self.tile_ij[s]
        return x[ti * self.B:(ti + 1) * self.B], x[tj * self.B:(tj + 1) * self.B]

    def _load_tile(self, s: int, sample):
        xa, xb = self.tile_coords(s)
        X1, X2 = np.meshgrid(xa, xb, indexing="ij")
        p0, p1 = sample(X1, X2)
        self.phi[s, self.g:self.g + self.B, self.g:self.g + self.B] = p0
        self.pi[s] = p1

    def wanted_mask(self, t: float) -> np.ndarray:
        if self.band is None:
            return np.ones((self.nt, self.nt), dtype=bool)
        lo, hi = self.band.radial_range(t)
        return K.band_tiles(self.nt, self.B, self.grid.h, self.grid.L_box, lo, hi)

    def update_band(self, t: float):
        """Activate tiles entering the band (as the constant map), freeze those leaving."""
        want = self.wanted_mask(t)
        live = np.zeros_like(want)
        used = self.status == 1
        live[self.tile_ij[used, 0], self.tile_ij[used, 1]] = True
        for ti, tj in np.argwhere(want & ~live):
            s = self.slot_of[ti, tj]
            if s == K.RELEASED:
                raise BlowUpError(f"band re-entered released tile ({ti}, {tj}) at t={t:.6f}")
            if s >= 0:
                self.status[s] = 1
            else:
                self._allocate(ti, tj)
        for ti, tj in np.argwhere(live & ~want):
            self.status[self.slot_of[ti, tj]] = 0
        self._release_far_frozen()

    def _release_far_frozen(self):
        frozen = np.flatnonzero(self.status == 0)
        if frozen.size == 0:
            return
        livemap = np.zeros((self.nt + 2, self.nt + 2), dtype=bool)
        used = self.status == 1
        livemap[self.tile_ij[used, 0] + 1, self.tile_ij[used, 1] + 1] = True
        near = np.zeros_like(livemap)
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                near |= np.roll(np.roll(livemap, di, 0), dj, 1)
        for s in frozen:
            ti, tj = self.tile_ij[s]
            if not near[ti + 1, tj + 1]:
                self.slot_of[ti, tj] = K.RELEASED
                self.status[s] = -1
                self.free.append(int(s))

    @property
    def active(self) -> np.ndarray:
        return np.flatnonzero(self.status == 1).astype(np.int64)

    # -- state I/O -----------------------------------------------------------
    def load(self, t0: float, sample):
        """Initialise from ``sample(x1, x2) -> (phi, pi)`` on all wanted tiles."""
        self.t = t0
        for ti, tj in np.argwhere(self.wanted_mask(t0)):
            s = self._allocate(ti, tj)
            self._load_tile(s, sample)
        self.refresh_acc()

    def load_state(self, state: FieldState):
        phi, pi = np.asarray(state.phi), np.asarray(state.pi)
        if phi.shape != (self.grid.n, self.grid.n, 3):
            raise ValueError(f"state shape {phi.shape} does not match grid n={self.grid.n}")
        x = self.grid.coords()

        def sample(X1, X2):
            i = np.rint(self.grid.index_of(X1)).astype(int)
            j = np.rint(self.grid.index_of(X2)).astype(int)
            return phi[i, j], pi[i, j]

        del x
        self.load(state.t, sample)

    def to_state(self) -> FieldState:
        n, B, g = self.grid.n, self.B, self.g
        phi = np.zeros((n, n, 3))
        phi[..., 2] = 1.0
        pi = np.zeros((n, n, 3))
        for s in np.flatnonzero(self.status >= 0):
            ti, tj = self.tile_ij[s]
            phi[ti * B:(ti + 1) * B, tj * B:(tj + 1) * B] = self.phi[s, g:g + B, g:g + B]
            pi[ti * B:(ti + 1) * B, tj * B:(tj + 1) * B] = self.pi[s]
        return FieldState(self.t, phi, pi)

    # -- kernels -------------------------------------------------------------
    def _ghosts(self, active):
        bad = np.zeros(active.size, dtype=np.int64)
        K.fill_ghosts(self.phi, self.slot_of, self.tile_ij, active, self.B, self.g, self.periodic, bad)
        if bad.any():
            raise BlowUpError(f"stencil reached a released tile at t={self.t:.6f}")

    def _kick(self, active, dt, do_kick):
        m = np.zeros(active.size)
        e = np.zeros(active.size)
        ok = np.zeros(active.size, dtype=np.int64)
        K.kick(self.phi, self.pi, self.acc, active, self.B, self.g, self.grid.h, dt, self.c2, self.c1,
               do_kick, m, e, ok)
        h2 = self.grid.h ** 2
        finite = bool(ok.all())
        bad = None if finite else int(active[np.argmin(ok)])
        return (float(m.max()) if m.size else 0.0), float(np.sum(e)) * h2, finite, bad

    def refresh_acc(self):
        active = self.active
        self._ghosts(active)
        return self._kick(active, 0.0, False)

    def step(self, dt: float):
        """One leapfrog step; returns (repair, max_grad, energy, finite, bad_slot)."""
        active = self.active
        rep = np.zeros(active.size)
        K.drift(self.phi, self.pi, self.acc, active, self.B, self.g, dt, rep)
        self.t += dt
        if self.band is not None:
            self.update_band(self.t)
            active = self.active
        self._ghosts(active)
        mg, en, finite, bad = self._kick(active, dt, True)
        repair = float(rep.max()) if rep.size else 0.0
        return repair, mg, en, finite, bad

    def boundary_amplitude(self, width: int | None = None) -> float:
        active = self.active
        out = np.zeros(active.size)
        w = self.g if width is None else width
        K.boundary_amplitude(self.phi, self.pi, active, self.tile_ij, self.B, self.g, self.nt, w, out)
        return float(out.max()) if out.size else 0.0

    def sample(self, x1, x2) -> np.ndarray:
        """Interpolated (phi, grad phi, Hessian, pi, grad pi, acc) at points; shape (P, 10, 3).

        acc is the discrete acceleration Lap_h phi + phi |grad_h phi|^2 of the
        current state (refreshed by every kick).
        """
        x1 = np.ascontiguousarray(np.ravel(x1), dtype=float)
        x2 = np.ascontiguousarray(np.ravel(x2), dtype=float)
        out = np.zeros((x1.size, 10, 3))
        K.sample_points(self.phi, self.pi, self.acc, self.slot_of, self.B, self.g, self.nt, self.periodic,
                        self.grid.L_box, self.grid.h, x1, x2, self.sample_width, out)
        return out

    def patch(self, ci, cj, half: int):
        ci = np.asarray(ci, dtype=np.int64)
        cj = np.asarray(cj, dtype=np.int64)
        w = 2 * half + 1
        a = np.zeros((ci.size, w, w, 3))
        b = np.zeros((ci.size, w, w, 3))
        K.gather_patch(self.phi, self.pi, self.slot_of, self.B, self.g, self.nt, self.periodic,
                       ci, cj, half, a, b)
        return a, b

    def tile_extent(self) -> dict:
        return {"live": int(np.sum(self.status == 1)), "frozen": int(np.sum(self.status == 0)),
                "tiles": self.nt * self.nt, "tile": self.B}


# -- public operations ---------------------------------------------------------

def rhs(state: FieldState, grid: GridSpec) -> np.ndarray:
    """d_t^2 phi = Lap_h phi + phi(-|pi|^2 + |d1 phi|^2 + |d2 phi|^2) on the full grid."""
    if not (np.all(np.isfinite(state.phi)) and np.all(np.isfinite(state.pi))):
        bad = np.argwhere(~np.isfinite(state.phi).all(axis=-1) | ~np.isfinite(state.pi).all(axis=-1))[0]
        raise BlowUpError(f"non-finite field at index {tuple(int(i) for i in bad)}, t={state.t}")
    sol = Solver(grid)
    sol.load_state(state)
    full = sol.to_state()
    acc = np.zeros_like(full.phi)
    B = sol.B
    for s in np.flatnonzero(sol.status >= 0):
        ti, tj = sol.tile_ij[s]
        acc[ti * B:(ti + 1) * B, tj * B:(tj + 1) * B] = sol.acc[s]
    return acc - state.phi * np.sum(state.pi ** 2, axis=-1, keepdims=True)


def step(state: FieldState, grid: GridSpec, repair_abort: float = 1e-6) -> FieldState:
    """One leapfrog step with renormalisation and tangential projection."""
    sol = Solver(grid)
    sol.load_state(state)
    repair, _, _, finite, _ = sol.step(grid.dt)
    if not finite:
        raise BlowUpError(f"non-finite values after step at t={sol.t}")
    if repair > repair_abort:
        raise BlowUpError(f"constraint repair {repair:.3e} exceeds {repair_abort:.1e} at t={sol.t}")
    return sol.to_state()


@dataclass
class History:
    grid: GridSpec
    t0: float
    dt: float
    states: list = field(default_factory=list)
    t: np.ndarray | None = None
    max_grad: np.ndarray | None = None
    repair: np.ndarray | None = None
    energy: np.ndarray | None = None
    boundary: np.ndarray | None = None
    failed: bool = False
    failure: str | None = None
    t_fail: float | None = None
    gradient_ceiling: float = np.inf
    final: FieldState | None = None
    recorder: object | None = None
    probes: object | None = None
    elapsed: float = 0.0
    steps: int = 0
    band: BandSpec | None = None
    tiles: dict | None = None

    @property
    def t_final(self) -> float:
        return float(self.t[-1])

    def summary(self) -> dict:
        e = self.energy
        drift = float(np.max(np.abs(e - e[0])) / e[0]) if e is not None and e[0] > 0 else 0.0
        return {
            "completed": not self.failed, "failure": self.failure, "t_fail": self.t_fail,
            "t_final": self.t_final, "steps": self.steps, "dt": self.dt,
            "max_repair": float(np.max(self.repair)) if self.repair is not None else 0.0,
            "max_grad": float(np.max(self.max_grad)), "gradient_ceiling": self.gradient_ceiling,
            "energy_drift": drift, "boundary_amplitude": float(np.max(self.boundary)),
            "elapsed_s": self.elapsed, "band": self.band is not None,
        }


def evolve(data, grid: GridSpec, t_final: float, save_stride: int = 0, *, band: BandSpec | None = None,
           recorder=None, probes=None, gradient_factor: float = 1e4, repair_abort: float = 1e-6,
           keep_final: bool | None = None, threads: int | None = None, tile: int = 32,
           boundary_width: int | None = None, sample_width: int | None = None) -> History:
    """Evolve Cauchy data (or a FieldState) to ``t_final``.

    Blow-up (non-finite values, gradient above ``gradient_factor`` times the
    initial maximum, or a constraint repair above ``repair_abort``) ends the
    run early with ``failed`` set; the partial history is returned.
    """
    if threads:
        numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))
    start = _time.perf_counter()
    sol = Solver(grid, band=band, tile=tile, sample_width=sample_width)
    if isinstance(data, FieldState):
        sol.load_state(data)
        t0 = data.t
    else:
        t0 = data.t_init
        sol.load(t0, data.sample)
    span = t_final - t0
    if span < 0:
        raise ConfigError(f"t_final={t_final} precedes the initial time {t0}")
    nsteps = int(round(span / grid.dt))
    dt = grid.dt
    if abs(nsteps * dt - span) > 1e-9 * max(1.0, abs(span)):
        nsteps = int(np.ceil(span / grid.dt - 1e-9))
        dt = span / nsteps if nsteps else grid.dt
    g0, e0, finite, _ = sol.refresh_acc()
    ceiling = gradient_factor * g0 if g0 > 0 else np.inf
    ts = np.empty(nsteps + 1)
    mg = np.empty(nsteps + 1)
    rp = np.zeros(nsteps + 1)
    en = np.empty(nsteps + 1)
    bd = np.empty(nsteps + 1)
    ts[0], mg[0], en[0], bd[0] = t0, g0, e0, sol.boundary_amplitude(boundary_width)
    hist = History(grid=grid, t0=t0, dt=dt, gradient_ceiling=ceiling, recorder=recorder, probes=probes,
                   band=band)
    if save_stride:
        hist.states.append(sol.to_state())
    for obj in (recorder, probes):
        if obj is not None:
            obj.start(t0, dt)
            obj.observe(0, sol)
    last = 0
    for k in range(1, nsteps + 1):
        repair, gmax, energy, finite, bad = sol.step(dt)
        if k == nsteps:
            sol.t = t_final
        ts[k], mg[k], rp[k], en[k] = sol.t, gmax, repair, energy
        bd[k] = sol.boundary_amplitude(boundary_width)
        last = k
        problem = None
        if not finite:
            ti, tj = sol.tile_ij[bad]
            problem = f"non-finite values in tile ({ti}, {tj})"
        elif gmax > ceiling:
            problem = f"gradient {gmax:.3e} above ceiling {ceiling:.3e}"
        elif repair > repair_abort:
            problem = f"constraint repair {repair:.3e} above {repair_abort:.1e}"
        if problem:
            hist.failed, hist.failure, hist.t_fail = True, problem, float(sol.t)
            break
        for obj in (recorder, probes):
            if obj is not None:
                obj.observe(k, sol)
        if save_stride and k % save_stride == 0:
            hist.states.append(sol.to_state())
    sl = slice(0, last + 1)
    hist.t, hist.max_grad, hist.repair, hist.energy, hist.boundary = ts[sl], mg[sl], rp[sl], en[sl], bd[sl]
    hist.steps = last
    if keep_final is None:
        keep_final = grid.n <= 2048
    if keep_final:
        hist.final = sol.to_state()
        if save_stride and (not hist.states or hist.states[-1].t != sol.t):
            hist.states.append(hist.final)
    hist.tiles = sol.tile_extent()
    hist.elapsed = _time.perf_counter() - start
    return hist
