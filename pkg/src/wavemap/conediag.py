"""Double-null diagnostics reconstructed from a Cauchy evolution.

A :class:`ConeLattice` is attached to ``evolve`` as a recorder.  It samples the
field on the null lattice u_a = t0 + a D, ub_k = k D (D = ub_max / K) on rings
of ``theta_count`` angles: node (a, k) sits at time t0 + (a + k) D, so every
record time hits a diagonal of the lattice and nothing is interpolated in
time.  Per node it keeps phi, L phi, Lb phi, L^2 phi, Lb^2 phi and L Lb phi
(second derivatives from the interpolated Hessian, d_t pi and d_t^2 phi from
the equation).  Angular derivatives Omega^k = d_theta^k are spectral on rings.

Cone integrals use r dtheta dub on C_u and r dtheta du on Cb_ub.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .errors import ConfigError
from .geometry import to_null_coords
from .jets import SpacetimeJets

FIELDS = ("phi", "L", "Lb", "LL", "LbLb", "LLb")
_F = {name: i for i, name in enumerate(FIELDS)}


# -- samplers ------------------------------------------------------------------

def solver_sampler(solver):
    """Node sampler reading a live solver: (P, 9, 3) interpolants plus d_t^2 phi.

    d_t^2 phi is taken from the solver's discrete acceleration (tangential part
    plus the centripetal term -|pi|^2 phi), i.e. the time-stencil second
    derivative the scheme integrates.  Rebuilding it from the interpolated
    Hessian instead would mix the continuum and discrete dispersion relations
    and leave an O(1 - c) error in Lb^2 phi on an incoming pulse.
    """

    def sample(x1, x2):
        q = solver.sample(x1, x2)
        phi, pi, acc = q[:, 0], q[:, 6], q[:, 9]
        normal = np.sum(phi * acc, axis=-1, keepdims=True) + np.sum(pi * pi, axis=-1, keepdims=True)
        return q[:, :9], acc - normal * phi

    return sample


def jet_sampler(field, t: float):
    """Node sampler for an analytic field ``field(S) -> Jet`` at time t (exact derivatives)."""

    def sample(x1, x2):
        S = SpacetimeJets(np.full(x1.shape, t), x1, x2, 2)
        f = field(S)
        q = np.zeros(x1.shape + (9, 3))
        for i, alpha in enumerate(((0, 0, 0), (0, 1, 0), (0, 0, 1), (0, 2, 0), (0, 1, 1), (0, 0, 2),
                                   (1, 0, 0), (1, 1, 0), (1, 0, 1))):
            q[:, i] = np.broadcast_to(f.partial(alpha), x1.shape + (3,))
        return q, np.broadcast_to(f.partial((2, 0, 0)), x1.shape + (3,))

    return sample


def null_derivatives(q: np.ndarray, phi_tt: np.ndarray, x1, x2) -> np.ndarray:
    """Stack (phi, L, Lb, L^2, Lb^2, L Lb) at points from interpolants; shape (P, 6, 3)."""
    r = np.hypot(x1, x2)
    n1, n2 = (x1 / r)[:, None], (x2 / r)[:, None]
    phi, pi = q[:, 0], q[:, 6]
    dr = n1 * q[:, 1] + n2 * q[:, 2]
    drr = n1 * n1 * q[:, 3] + 2 * n1 * n2 * q[:, 4] + n2 * n2 * q[:, 5]
    dtr = n1 * q[:, 7] + n2 * q[:, 8]
    out = np.empty((x1.size, 6, 3))
    out[:, 0] = phi
    out[:, 1] = pi + dr
    out[:, 2] = pi - dr
    out[:, 3] = phi_tt + 2 * dtr + drr
    out[:, 4] = phi_tt - 2 * dtr + drr
    out[:, 5] = phi_tt - drr
    return out


# -- the recorder ------------------------------------------------------------------

class ConeLattice:
    """Null-lattice recorder; see the module docstring for the layout.

    Rows a = 0, s, 2s, ... (``row_stride`` s) up to ``rows`` - 1 are stored,
    each with all K + 1 rings.  ``t0`` is both the first record time and u of
    row 0.
    """

    def __init__(self, t0: float, ub_max: float, K: int, rows: int, theta_count: int = 64,
                 row_stride: int = 1, r_min: float = 0.0):
        if K < 16:
            raise ConfigError(f"lattice needs >= 16 intervals across [0, ub_max], got K={K}")
        if theta_count < 8 or theta_count % 2:
            raise ConfigError(f"theta_count must be even and >= 8, got {theta_count}")
        self.t0, self.ub_max, self.K, self.theta_count = float(t0), float(ub_max), int(K), int(theta_count)
        self.spacing = self.ub_max / self.K
        self.row_index = np.arange(0, rows, row_stride)
        self.row_stride = int(row_stride)
        self.u = self.t0 + self.row_index * self.spacing
        self.ub = np.arange(self.K + 1) * self.spacing
        self.theta = 2 * np.pi * np.arange(self.theta_count) / self.theta_count
        r = self.ub[None, :] - self.u[:, None]
        bad = np.argwhere(r <= r_min)
        if bad.size:
            a, k = bad[0]
            raise ConfigError(f"lattice node (u={self.u[a]:.6g}, ub={self.ub[k]:.6g}) has r={r[a, k]:.3g} "
                              f"<= r_min={r_min}")
        self.r = r
        self.data = np.zeros((self.u.size, self.K + 1, self.theta_count, len(FIELDS), 3))
        self.filled = np.zeros((self.u.size, self.K + 1), dtype=bool)
        self.steps_per_record = None
        self._cos, self._sin = np.cos(self.theta), np.sin(self.theta)

    @classmethod
    def for_pulse(cls, cfg, K: int = 32, theta_count: int = 64, u_end: float = -1.0, du: float = 0.01,
                  ub_max: float | None = None):
        """Lattice over u in [t_init, u_end] and ub in [0, ub_max] (default delta)."""
        ub_max = cfg.delta if ub_max is None else ub_max
        spacing = ub_max / K
        rows = int(np.floor((u_end - cfg.t_init) / spacing + 1e-9)) + 1
        stride = max(1, int(round(du / spacing)))
        last = (rows - 1) // stride * stride
        return cls(cfg.t_init, ub_max, K, last + 1, theta_count, stride)

    # times
    @property
    def record_count(self) -> int:
        return int(self.row_index[-1]) + self.K + 1

    @property
    def t_final(self) -> float:
        return self.t0 + (self.record_count - 1) * self.spacing

    def time_step(self, h: float, cfl: float) -> float:
        """Largest dt <= cfl h dividing the lattice spacing."""
        m = int(np.ceil(self.spacing / (cfl * h) - 1e-9))
        return self.spacing / m

    def start(self, t0: float, dt: float):
        m = self.spacing / dt
        if abs(m - round(m)) > 1e-6 or abs(t0 - self.t0) > 1e-9 * max(1.0, abs(t0)):
            raise ConfigError(f"time step {dt} / start {t0} not aligned with lattice spacing "
                              f"{self.spacing} / start {self.t0}")
        self.steps_per_record = int(round(m))

    def observe(self, step: int, solver):
        if step % self.steps_per_record == 0:
            self.record(step // self.steps_per_record, solver_sampler(solver))

    def diagonal(self, j: int):
        """Stored (row position, ring) pairs recorded at record step j."""
        k = np.arange(self.K + 1)
        a = j - k
        ok = (a >= 0) & (a <= self.row_index[-1]) & (a % self.row_stride == 0)
        return a[ok] // self.row_stride, k[ok]

    def record(self, j: int, sample):
        pos, ks = self.diagonal(j)
        if pos.size == 0:
            return
        r = self.r[pos, ks]
        x1 = (r[:, None] * self._cos[None, :]).ravel()
        x2 = (r[:, None] * self._sin[None, :]).ravel()
        q, phi_tt = sample(x1, x2)
        nd = null_derivatives(q, phi_tt, x1, x2)
        self.data[pos, ks] = nd.reshape(pos.size, self.theta_count, len(FIELDS), 3)
        self.filled[pos, ks] = True

    def record_field(self, field):
        """Fill every node from an analytic field (bypasses evolution)."""
        for j in range(self.record_count):
            self.record(j, jet_sampler(field, self.t0 + j * self.spacing))
        return self

    @property
    def complete(self) -> bool:
        return bool(self.filled.all())

    def nearest_row(self, u: float) -> int:
        return int(np.argmin(np.abs(self.u - u)))

    def ring_of(self, ub: float) -> int:
        k = int(round(ub / self.spacing))
        if not 0 <= k <= self.K or abs(k * self.spacing - ub) > 1e-9 + 1e-6 * self.spacing:
            raise ConfigError(f"ub={ub} is not a lattice ring (spacing {self.spacing}, max {self.ub_max})")
        return k

    def node_coordinates(self):
        """(t, x1, x2) of every node, shaped (rows, K + 1, theta_count)."""
        t = (self.u[:, None] + self.ub[None, :])[..., None] * np.ones(self.theta_count)
        return t, self.r[..., None] * self._cos, self.r[..., None] * self._sin


# -- cone slices -------------------------------------------------------------------

def _omega(values: np.ndarray, k: int, axis: int) -> np.ndarray:
    """Spectral d_theta^k along ``axis`` (the Nyquist mode is dropped for odd k)."""
    if k == 0:
        return values
    n = values.shape[axis]
    m = np.fft.fftfreq(n, 1.0 / n)
    if k % 2:
        m[n // 2] = 0.0
    shape = [1] * values.ndim
    shape[axis] = n
    mult = ((1j * m) ** k).reshape(shape)
    return np.real(np.fft.ifft(np.fft.fft(values, axis=axis) * mult, axis=axis))


def _mag2(v: np.ndarray) -> np.ndarray:
    return np.sum(v * v, axis=-1)


@dataclass
class ConeSlice:
    """Field data on C_u (kind 'outgoing', coord = ub) or Cb_ub (kind 'incoming', coord = u)."""

    kind: str
    level: float
    coord: np.ndarray
    theta: np.ndarray
    r: np.ndarray
    values: np.ndarray        # (Nc, Ntheta, 6, 3) ordered as FIELDS

    def __post_init__(self):
        if self.kind not in ("outgoing", "incoming"):
            raise ValueError(f"kind must be 'outgoing' or 'incoming', got {self.kind!r}")

    def field(self, name: str) -> np.ndarray:
        return self.values[..., _F[name], :]

    @property
    def rr(self) -> np.ndarray:
        return self.r[:, None, None]

    def omega(self, name: str, k: int) -> np.ndarray:
        return _omega(self.field(name), k, axis=1)

    def slash(self, k: int) -> np.ndarray:
        return self.omega("phi", k) / self.rr ** k

    def L_slash(self, k: int) -> np.ndarray:
        """L(r^-k Omega^k phi) = r^-k (Omega^k L phi - k r^-1 Omega^k phi)."""
        return (self.omega("L", k) - k * self.omega("phi", k) / self.rr) / self.rr ** k

    def Lb_slash(self, k: int) -> np.ndarray:
        return (self.omega("Lb", k) + k * self.omega("phi", k) / self.rr) / self.rr ** k

    def LL_slash(self, k: int) -> np.ndarray:
        rr = self.rr
        return (self.omega("LL", k) - 2 * k * self.omega("L", k) / rr
                + k * (k + 1) * self.omega("phi", k) / rr ** 2) / rr ** k

    def LbLb_slash(self, k: int) -> np.ndarray:
        rr = self.rr
        return (self.omega("LbLb", k) + 2 * k * self.omega("Lb", k) / rr
                + k * (k + 1) * self.omega("phi", k) / rr ** 2) / rr ** k

    def box(self, k: int = 0) -> np.ndarray:
        """box(Omega^k phi) = L Lb - (L - Lb)/(2r) - r^-2 Omega^2, from the stored null data."""
        rr = self.rr
        return (self.omega("LLb", k) - (self.omega("L", k) - self.omega("Lb", k)) / (2 * rr)
                - self.omega("phi", k + 2) / rr ** 2)

    def upto(self, limit: float | None) -> "ConeSlice":
        """Restriction to coord <= limit."""
        if limit is None:
            return self
        keep = self.coord <= limit + 1e-9 * max(1.0, abs(limit))
        return ConeSlice(self.kind, self.level, self.coord[keep], self.theta, self.r[keep], self.values[keep])

    def integrate(self, density: np.ndarray) -> float:
        """Integral of a (Nc, Ntheta) density with measure r dtheta d(coord)."""
        if self.coord.size < 2:
            return 0.0
        ring = density.sum(axis=1) * (2 * np.pi / self.theta.size) * self.r
        return float(simpson(ring, x=self.coord))

    def l2(self, values: np.ndarray) -> float:
        return float(np.sqrt(max(self.integrate(_mag2(values)), 0.0)))

    def linf(self, values: np.ndarray) -> float:
        return float(np.sqrt(np.max(_mag2(values)))) if values.size else 0.0

    def cartesian(self):
        if self.kind == "outgoing":
            t = self.level + self.coord
        else:
            t = self.coord + self.level
        t = t[:, None] * np.ones(self.theta.size)
        return t, self.rr[..., 0] * np.cos(self.theta), self.rr[..., 0] * np.sin(self.theta)

    def null_coords(self):
        return to_null_coords(*self.cartesian())


def extract_cone(source, kind: str, level: float) -> ConeSlice:
    """Cone slice from a recorded lattice (or a History carrying one).

    Outgoing cones snap to the nearest stored row and report its exact level;
    incoming levels must be lattice rings.
    """
    lat = getattr(source, "recorder", source)
    if not isinstance(lat, ConeLattice):
        raise ConfigError("source carries no ConeLattice recorder")
    if kind == "outgoing":
        if not lat.u[0] - lat.spacing <= level <= lat.u[-1] + lat.row_stride * lat.spacing:
            raise ConfigError(f"outgoing cone u={level} outside recorded range [{lat.u[0]}, {lat.u[-1]}]")
        a = lat.nearest_row(level)
        if not lat.filled[a].all():
            raise ConfigError(f"outgoing cone u={lat.u[a]} not fully recorded (run ended early?)")
        return ConeSlice("outgoing", float(lat.u[a]), lat.ub.copy(), lat.theta, lat.r[a].copy(),
                         lat.data[a].copy())
    if kind == "incoming":
        k = lat.ring_of(level)
        rows = lat.filled[:, k]
        if not rows.any():
            raise ConfigError(f"incoming cone ub={level} has no recorded nodes")
        last = int(np.argmin(rows)) if not rows.all() else rows.size
        return ConeSlice("incoming", float(lat.ub[k]), lat.u[:last].copy(), lat.theta, lat.r[:last, k].copy(),
                         lat.data[:last, k].copy())
    raise ValueError(f"kind must be 'outgoing' or 'incoming', got {kind!r}")


# -- energy norms ----------------------------------------------------------------------

@dataclass
class EnergyReport:
    u: float
    ub: float
    E: np.ndarray
    Eb: np.ndarray
    F: np.ndarray
    Fb: np.ndarray

    @property
    def aggregate(self) -> float:
        return float(self.E.sum() + self.Eb.sum() + self.F.sum() + self.Fb.sum())

    def row(self, delta: float) -> dict:
        out = {"delta": delta, "u": self.u, "ub": self.ub}
        out.update({f"E{i + 1}": float(v) for i, v in enumerate(self.E)})
        out.update({f"Eb{i + 1}": float(v) for i, v in enumerate(self.Eb)})
        out.update({f"F{i + 2}": float(v) for i, v in enumerate(self.F)})
        out.update({f"Fb{i + 2}": float(v) for i, v in enumerate(self.Fb)})
        return out


REPORT_COLUMNS = ("delta", "u", "ub", "E1", "E2", "E3", "Eb1", "Eb2", "Eb3", "F2", "F3", "Fb2", "Fb3")


def energy_report(cu: ConeSlice, cub: ConeSlice, delta: float) -> EnergyReport:
    """E_i, Eb_i, F_j, Fb_j at (u, ub) = (cu.level, cub.level) with the delta weights.

    C_u is cut to ub' <= ub and Cb_ub to u' <= u.
    """
    if cu.kind != "outgoing" or cub.kind != "incoming":
        raise ValueError("energy_report takes (outgoing, incoming) slices")
    out, inc = cu.upto(cub.level), cub.upto(cu.level)
    w = delta ** -0.5
    E = np.array([out.l2(out.L_slash(k)) + w * out.l2(out.slash(k + 1)) for k in range(3)])
    Eb = np.array([inc.l2(inc.slash(k + 1)) + w * inc.l2(inc.Lb_slash(k)) for k in range(3)])
    F = np.array([delta * out.l2(out.LL_slash(k)) for k in range(2)])
    Fb = np.array([inc.l2(inc.LbLb_slash(k)) for k in range(2)])
    return EnergyReport(cu.level, cub.level, E, Eb, F, Fb)


def energy_report_at(lattice: ConeLattice, u: float, ub: float, delta: float) -> EnergyReport:
    return energy_report(extract_cone(lattice, "outgoing", u), extract_cone(lattice, "incoming", ub), delta)


def initial_energy_report(norms: dict, cfg) -> EnergyReport:
    """Report on C_{u0} at ub = delta from closed-form cone norms (Cb terms vanish there)."""
    d = cfg.delta
    E = np.array([norms[f"L_slash{k}"]["L2"] + d ** -0.5 * norms[f"slash{k + 1}"]["L2"] for k in range(3)])
    F = np.array([d * norms[f"LL_slash{k}"]["L2"] for k in range(2)])
    return EnergyReport(cfg.u0, d, E, np.zeros(3), F, np.zeros(2))


def energy_series(lattice: ConeLattice, ub: float, delta: float, every: int = 1) -> list[EnergyReport]:
    """Reports at every ``every``-th stored row, all at the same ub."""
    cub = extract_cone(lattice, "incoming", ub)
    out = []
    for a in range(0, cub.coord.size, every):
        out.append(energy_report(extract_cone(lattice, "outgoing", lattice.u[a]), cub, delta))
    return out


def lb_phi_on_outgoing_cone(cu: ConeSlice, i: int = 0) -> float:
    """||Lb Omega^i phi||_{L2(C_u)} over the whole slice."""
    if i not in (0, 1):
        raise ValueError(f"i must be 0 or 1, got {i}")
    return cu.l2(cu.omega("Lb", i))


def lattice_sup(lattice: ConeLattice, name: str = "Lb") -> float:
    """Largest |field| over all recorded nodes."""
    v = lattice.data[..., _F[name], :][lattice.filled]
    return float(np.sqrt(np.max(_mag2(v)))) if v.size else 0.0


# -- energy identity ---------------------------------------------------------------------

def _q0(a: dict, b: dict) -> np.ndarray:
    """Q0 from null data: -(L a . Lb b + Lb a . L b)/2 + slash a . slash b (summed over target)."""
    return (-0.5 * (np.sum(a["L"] * b["Lb"], -1) + np.sum(a["Lb"] * b["L"], -1))
            + np.sum(a["slash"] * b["slash"], -1))


def _selected(lattice: ConeLattice, selector: str, source: str):
    """Null data of the selected field on all stored nodes: dict of (rows, K+1, Ntheta, c)."""
    d = lattice.data
    r = lattice.r[..., None, None]
    base = {"phi": d[..., 0, :], "L": d[..., 1, :], "Lb": d[..., 2, :]}
    base["slash"] = _omega(base["phi"], 1, axis=2) / r
    if selector.startswith("Omega"):
        i = int(selector[5:])
        comps = slice(None)
    elif selector == "phi":
        i, comps = 0, slice(None)
    elif selector.startswith("phi") and selector[3:].isdigit():
        i, comps = 0, slice(int(selector[3:]), int(selector[3:]) + 1)
    else:
        raise ValueError(f"unknown field selector {selector!r}")
    if i not in (0, 1, 2):
        raise ValueError(f"Omega power must be 0..2, got {i}")
    psi = {
        "L": _omega(base["L"], i, axis=2),
        "Lb": _omega(base["Lb"], i, axis=2),
        "slash": _omega(base["phi"], i + 1, axis=2) / r,
    }
    if source == "equation":
        phi_q0 = base["phi"] * _q0(base, base)[..., None]
        Phi = _omega(phi_q0, i, axis=2)
    elif source == "box":
        Phi = (_omega(d[..., 5, :], i, axis=2) - (psi["L"] - psi["Lb"]) / (2 * r)
               - _omega(base["phi"], i + 2, axis=2) / r ** 2)
    else:
        raise ValueError(f"source must be 'equation' or 'box', got {source!r}")
    psi["Phi"] = Phi
    return {k: v[..., comps] for k, v in psi.items()}


@dataclass
class FluxBalance:
    outgoing: float       # flux through C_u
    incoming: float       # flux through Cb_ub
    bottom: float         # flux through the first recorded outgoing cone
    left: float           # flux through Cb_0
    bulk: float           # integral of (K^X - Phi . X psi) over the enclosed domain
    u: float
    ub: float

    @property
    def lhs(self) -> float:
        return self.outgoing + self.incoming

    @property
    def rhs(self) -> float:
        return self.bottom + self.left - self.bulk

    def residual(self, floor: float = 1e-12) -> float:
        return abs(self.lhs - self.rhs) / (abs(self.lhs) + abs(self.rhs) + floor)


def flux_balance(lattice: ConeLattice, X: str, selector: str, u: float, ub: float,
                 source: str = "equation") -> FluxBalance:
    """Terms of the divergence identity for J = T(X, .) on D = [u_first, u] x [0, ub].

    flux(C_u) + flux(Cb_ub) = flux(C_{u_first}) + flux(Cb_0) - int_D (K^X - Phi . X psi) 2r du dub dtheta
    with flux(C) = int T(X, L) r dtheta dub on outgoing cones, T(X, Lb) r dtheta du on incoming
    ones, and Phi = box psi (box = d_t^2 - Lap): from the wave map equation when ``source`` is
    'equation', from the recorded second derivatives when it is 'box'.
    """
    if X not in ("L", "Lb"):
        raise ValueError(f"X must be 'L' or 'Lb', got {X!r}")
    a1 = lattice.nearest_row(u) + 1
    k1 = lattice.ring_of(ub) + 1
    if a1 < 2 or not lattice.filled[:a1, :k1].all():
        raise ConfigError(f"domain up to (u={u}, ub={ub}) is not fully recorded")
    psi = {k: v[:a1, :k1] for k, v in _selected(lattice, selector, source).items()}
    r = lattice.r[:a1, :k1]
    us, ubs = lattice.u[:a1], lattice.ub[:k1]
    dth = 2 * np.pi / lattice.theta_count
    s2 = {k: np.sum(v * v, -1) for k, v in psi.items() if k in ("L", "Lb", "slash")}
    t_out = s2["L"] if X == "L" else s2["slash"]        # T(X, L)
    t_in = s2["slash"] if X == "L" else s2["Lb"]        # T(X, Lb)
    kx = (s2["slash"] + np.sum(psi["L"] * psi["Lb"], -1)) / (2 * r[..., None])
    if X == "Lb":
        kx = -kx
    bulk_density = kx - np.sum(psi["Phi"] * psi[X], -1)

    def ring(v, rad):
        return v.sum(axis=-1) * dth * rad

    outgoing = float(simpson(ring(t_out[-1], r[-1]), x=ubs))
    bottom = float(simpson(ring(t_out[0], r[0]), x=ubs))
    incoming = float(simpson(ring(t_in[:, -1], r[:, -1]), x=us))
    left = float(simpson(ring(t_in[:, 0], r[:, 0]), x=us))
    inner = simpson(ring(bulk_density, 2 * r), x=ubs, axis=1)
    bulk = float(simpson(inner, x=us))
    return FluxBalance(outgoing, incoming, bottom, left, bulk, float(us[-1]), float(ubs[-1]))


def energy_identity_residual(source, X: str, field_selector: str, u: float, ub: float,
                             rhs_source: str = "equation") -> float:
    """Relative defect |LHS - RHS| / (|LHS| + |RHS| + 1e-12) of the flux identity."""
    lat = getattr(source, "recorder", source)
    return flux_balance(lat, X, field_selector, u, ub, rhs_source).residual()
