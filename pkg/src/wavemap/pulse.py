"""Short-pulse data on the initial outgoing cone and the Cauchy data built from it.

On the cone u = u0 the map is

    phi(ub, theta) = (delta^{1/2} psi0(ub/delta, theta) + e3) / sqrt(delta |psi0|^2 + 1)

with psi0 a smooth bump in s = ub/delta supported in (0, 1) and valued in the
plane orthogonal to e3, so |phi| = 1 identically.  Cauchy data on t = u0 + delta
come from the incoming-wave ansatz phi(t, x) = P((t + r)/2, theta).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Callable

import numpy as np

from .errors import ConfigError
from .grid import GridSpec, annulus_points
from .jets import Jet, SpacetimeJets, stack

E3 = np.array([0.0, 0.0, 1.0])


@dataclass
class PulseConfig:
    delta: float = 0.1
    u0: float = -4.0
    profile_amp: float = 10.0
    angular_modes: tuple = ((0, 1.0), (1, 0.25))
    delta_max: float = 0.2
    profile_support: tuple = (0.0, 1.0)

    def __post_init__(self):
        self.angular_modes = tuple((int(m), float(c)) for m, c in self.angular_modes)
        problems = self.problems()
        if problems:
            raise ConfigError(problems)

    def problems(self) -> list[str]:
        out = []
        if not 0 < self.delta <= self.delta_max:
            out.append(f"pulse.delta must lie in (0, {self.delta_max}], got {self.delta}")
        if not self.u0 < -1 or abs(self.u0) < 1 + self.delta:
            out.append(f"pulse.u0 must satisfy u0 < -1 and |u0| >= 1 + delta, got {self.u0}")
        if self.profile_amp < 0:
            out.append(f"pulse.profile_amp must be >= 0, got {self.profile_amp}")
        if tuple(self.profile_support) != (0.0, 1.0):
            out.append("pulse.profile_support is fixed to (0, 1)")
        if any(m < 0 for m, _ in self.angular_modes):
            out.append("pulse.angular_modes need nonnegative mode numbers")
        return out

    @property
    def t_init(self) -> float:
        return self.u0 + self.delta


def bump(s) -> np.ndarray:
    """exp(-1/(s(1-s))) on (0, 1), zero elsewhere."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = (s > 0) & (s < 1)
    with np.errstate(over="ignore"):  # subnormal s: exp(-inf) = 0 is the right value
        out[m] = np.exp(-1.0 / (s[m] * (1.0 - s[m])))
    return out


def psi0(s, theta, cfg: PulseConfig) -> np.ndarray:
    """Profile amp * bump(s) * sum_m c_m (cos m theta, sin m theta, 0)."""
    s = np.asarray(s, dtype=float)
    theta = np.asarray(theta, dtype=float)
    b = cfg.profile_amp * bump(s)
    ang = np.zeros(np.broadcast_shapes(s.shape, theta.shape) + (3,))
    for m, c in cfg.angular_modes:
        ang[..., 0] += c * np.cos(m * theta)
        ang[..., 1] += c * np.sin(m * theta)
    return b[..., None] * ang


def short_pulse_on_cone(ub, theta, cfg: PulseConfig) -> np.ndarray:
    """Unit vector (delta^{1/2} psi0 + e3) / sqrt(delta |psi0|^2 + 1)."""
    p = psi0(np.asarray(ub, dtype=float) / cfg.delta, theta, cfg)
    v = np.sqrt(cfg.delta) * p + E3
    return v / np.sqrt(cfg.delta * np.sum(p * p, axis=-1) + 1.0)[..., None]


# -- jet versions (exact derivatives) --------------------------------------

def _bump_jet(s: Jet) -> Jet:
    inside = (s.value > 0) & (s.value < 1)
    safe = s._new(s.coef.copy())
    safe.coef[..., 0] = np.where(inside, s.value, 0.5)
    out = ((safe * (1.0 - safe)).reciprocal() * -1.0).exp()
    out.coef[~inside] = 0.0
    return out


def pulse_jet(ub: Jet, cos1: Jet, sin1: Jet, cfg: PulseConfig) -> Jet:
    """P(ub, theta) as a jet, with theta entering through (cos theta, sin theta)."""
    b = _bump_jet(ub * (1.0 / cfg.delta)) * cfg.profile_amp
    zero = b * 0.0
    cm, sm = cos1 * 0.0 + 1.0, sin1 * 0.0
    top = max((m for m, _ in cfg.angular_modes), default=0)
    coss, sins = [cm], [sm]
    for _ in range(top):
        cm, sm = cm * cos1 - sm * sin1, sm * cos1 + cm * sin1
        coss.append(cm)
        sins.append(sm)
    a1, a2 = zero, zero
    for m, c in cfg.angular_modes:
        a1 = a1 + coss[m] * c
        a2 = a2 + sins[m] * c
    rd = np.sqrt(cfg.delta)
    v1, v2 = b * a1 * rd, b * a2 * rd
    inv = (v1 * v1 + v2 * v2 + 1.0).power(-0.5)
    return stack([v1 * inv, v2 * inv, inv])


def incoming_field(S: SpacetimeJets, cfg: PulseConfig) -> Jet:
    """Spacetime jet of the incoming-wave ansatz phi(t, x) = P((t + r)/2, theta)."""
    ub = (S.t + S.r) * 0.5
    return pulse_jet(ub, S.x1 * S.inv_r, S.x2 * S.inv_r, cfg)


# -- Cauchy data ---------------------------------------------------------------

@dataclass
class CauchyData:
    """Initial slice t = t_init.

    ``sample(x1, x2)`` returns (phi0, phi1) at arbitrary points; ``phi0`` and
    ``phi1`` hold full-grid arrays when the grid was materialised.  ``support``
    is the radial interval outside which the data is the constant map.
    """

    t_init: float
    grid: GridSpec
    sample: Callable
    phi0: np.ndarray | None = None
    phi1: np.ndarray | None = None
    support: tuple | None = None
    cfg: PulseConfig | None = None
    closed_form: Callable | None = field(default=None, repr=False)

    def materialize(self) -> "CauchyData":
        X1, X2 = self.grid.mesh()
        self.phi0, self.phi1 = self.sample(X1, X2)
        return self


def resolution_problems(grid: GridSpec, cfg: PulseConfig, min_points: float = 10.0) -> list[str]:
    """Extent and resolution requirements for placing the pulse on the grid."""
    out = []
    need_L = -cfg.u0 + 4 * cfg.delta
    if grid.L_box < need_L:
        out.append(f"grid.L_box={grid.L_box} must contain the disk r <= -u0 + 4 delta = {need_L:g}")
    across = 2 * cfg.delta / grid.h
    if across < min_points:
        need_n = int(np.ceil(min_points * 2 * grid.L_box / (2 * cfg.delta)))
        out.append(f"pulse support 2*delta={2 * cfg.delta:g} spans {across:.1f} grid points, need "
                   f">= {min_points:g}; use grid.n >= {need_n}")
    return out


def _sample_pulse(cfg: PulseConfig, x1, x2):
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    shape = np.broadcast_shapes(x1.shape, x2.shape)
    x1 = np.broadcast_to(x1, shape).ravel()
    x2 = np.broadcast_to(x2, shape).ravel()
    phi0 = np.zeros(x1.shape + (3,))
    phi0[:, 2] = 1.0
    phi1 = np.zeros_like(phi0)
    if cfg.profile_amp > 0:
        r = np.hypot(x1, x2)
        ub = 0.5 * (cfg.t_init + r)
        m = (ub > 0) & (ub < cfg.delta)
        if np.any(m):
            S = SpacetimeJets(np.full(int(m.sum()), cfg.t_init), x1[m], x2[m], 1)
            P = incoming_field(S, cfg)
            p0 = P.value
            p0 = p0 / np.linalg.norm(p0, axis=-1, keepdims=True)
            p1 = P.partial((1, 0, 0))
            p1 = p1 - np.sum(p0 * p1, axis=-1, keepdims=True) * p0
            phi0[m] = p0
            phi1[m] = p1
    return phi0.reshape(shape + (3,)), phi1.reshape(shape + (3,))


def synthesize_cauchy_data(grid: GridSpec, cfg: PulseConfig, materialize: bool | None = None,
                           min_points: float = 10.0) -> CauchyData:
    """Data (phi, d_t phi) at t_init = u0 + delta from the incoming-wave ansatz.

    phi1 = (1/2) d_ub P, projected onto the tangent plane of phi0; this makes
    Lb phi vanish on the slice at leading order.
    """
    problems = resolution_problems(grid, cfg, min_points)
    if problems:
        raise ConfigError(problems)
    t = cfg.t_init
    data = CauchyData(
        t_init=t, grid=grid,
        sample=lambda x1, x2: _sample_pulse(cfg, x1, x2),
        support=(-t, -t + 2 * cfg.delta), cfg=cfg,
        closed_form=lambda S: incoming_field(S, cfg),
    )
    if materialize is None:
        materialize = grid.n <= 1024
    return data.materialize() if materialize else data


# -- energies ------------------------------------------------------------------

def _tensor_norm2(jet: Jet, k: int, time_derivs: int) -> np.ndarray:
    """sum over ordered spatial index tuples of |d_t^j d_{i1..ik} f|^2."""
    total = 0.0
    for a in range(k + 1):
        mult = factorial(k) / (factorial(a) * factorial(k - a))
        d = jet.partial((time_derivs, a, k - a))
        total = total + mult * np.sum(d * d, axis=-1)
    return total


def _fft_gradient_tensor(f: np.ndarray, h: float, k: int) -> np.ndarray:
    """Pointwise sum over ordered k-tuples of |d^k f|^2 by spectral differentiation."""
    if k == 0:
        return np.sum(f * f, axis=-1)
    n = f.shape[0]
    kk = 2 * np.pi * np.fft.fftfreq(n, d=h)
    K1, K2 = np.meshgrid(kk, kk, indexing="ij")
    F = np.fft.fft2(f, axes=(0, 1))
    total = 0.0
    for a in range(k + 1):
        mult = factorial(k) / (factorial(a) * factorial(k - a))
        sym = (1j * K1) ** a * (1j * K2) ** (k - a)
        d = np.real(np.fft.ifft2(F * sym[..., None], axes=(0, 1)))
        total = total + mult * np.sum(d * d, axis=-1)
    return total


def cauchy_energy(data: CauchyData, k: int) -> float:
    """Energy_(k) = 1/2 int |nabla^k phi0|^2 + |nabla^{k-1} phi1|^2 dx, trapezoid on the grid.

    Integrands use exact derivatives when the data has a closed form and
    spectral derivatives of the grid arrays otherwise.
    """
    if not 1 <= k <= 3:
        raise ValueError(f"energy order must be 1..3, got {k}")
    h = data.grid.h
    if data.closed_form is not None:
        if data.cfg is not None and data.cfg.profile_amp == 0:
            return 0.0
        lo, hi = data.support
        x1, x2 = annulus_points(data.grid, max(lo - 2 * h, 0.0), hi + 2 * h)
        total = 0.0
        for sl in np.array_split(np.arange(x1.size), max(1, x1.size // 20000)):
            S = SpacetimeJets(np.full(sl.size, data.t_init), x1[sl], x2[sl], k)
            P = data.closed_form(S)
            dens = _tensor_norm2(P, k, 0) + _tensor_norm2(P, k - 1, 1)
            total += float(np.sum(dens))
        return 0.5 * total * h * h
    if data.phi0 is None:
        data.materialize()
    phi0 = data.phi0 - data.phi0[0, 0]
    dens = _fft_gradient_tensor(phi0, h, k) + _fft_gradient_tensor(data.phi1, h, k - 1)
    return 0.5 * float(np.sum(dens)) * h * h


# -- closed-form cone norms ------------------------------------------------------

def _cone_jets(cfg: PulseConfig, n_ub: int, n_theta: int, order: int):
    ub = np.linspace(0.0, cfg.delta, n_ub)
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    UB, TH = np.meshgrid(ub, theta, indexing="ij")
    ubj = Jet.variable(UB, 0, 2, order)
    thj = Jet.variable(TH, 1, 2, order)
    return ub, theta, pulse_jet(ubj, thj.cos(), thj.sin(), cfg)


def _norms(values: np.ndarray, r: np.ndarray, ub: np.ndarray, theta: np.ndarray):
    """(L-infinity, L2 with measure r dtheta dub) of a (n_ub, n_theta, 3) field."""
    mag2 = np.sum(values * values, axis=-1)
    ring = mag2.sum(axis=1) * (2 * np.pi / theta.size) * r
    return float(np.sqrt(mag2.max())), float(np.sqrt(np.trapezoid(ring, ub)))


def transverse_derivative_on_cone(cfg: PulseConfig, n_ub: int = 513, n_theta: int = 64):
    """Lb phi on C_{u0}, integrating the frame equation along L from the trivial sphere ub = 0.

    d_ub (Lb phi) = lap_slash phi + (L phi - Lb phi)/(2r) + phi (|slash phi|^2 - L phi . Lb phi)
    with r = ub - u0; classical RK4 on the ub grid (midpoints sampled exactly).
    """
    steps = n_ub - 1
    ub_f, theta, P = _cone_jets(cfg, 2 * steps + 1, n_theta, 2)
    phi = P.value
    Lphi = P.partial((1, 0))
    r = (ub_f - cfg.u0)[:, None, None]
    lap = P.partial((0, 2)) / r ** 2
    slash2 = np.sum(P.partial((0, 1)) ** 2, axis=-1, keepdims=True) / r ** 2

    def f(j, y):
        return (lap[j] + (Lphi[j] - y) / (2 * r[j]) + phi[j] * (slash2[j] - np.sum(Lphi[j] * y, axis=-1,
                                                                                   keepdims=True)))

    h = ub_f[2] - ub_f[0]
    y = np.zeros_like(phi[0])
    out = [y]
    for i in range(steps):
        j = 2 * i
        k1 = f(j, y)
        k2 = f(j + 1, y + 0.5 * h * k1)
        k3 = f(j + 1, y + 0.5 * h * k2)
        k4 = f(j + 2, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(y)
    return ub_f[::2], theta, np.array(out)


def initial_cone_norms(cfg: PulseConfig, resolution=(513, 64), transverse: bool = True) -> dict:
    """L-infinity and L2(C_{u0}) norms of the closed-form data and its derivatives.

    Keys: ``L_slash{k}`` for L nabla_slash^k phi, ``slash{k+1}`` for
    nabla_slash^{k+1} phi, ``LL_slash{k}`` for L^2 nabla_slash^k phi (k = 0..2),
    ``phi_e3`` for phi - e3 and, optionally, ``Lb`` for the transverse
    derivative.  nabla_slash^k acts as r^{-k} Omega^k with Omega = d_theta, and
    L is applied after it (L r = 1 along the cone).
    Each value is a dict with entries ``Linf`` and ``L2``.
    """
    n_ub, n_theta = resolution
    ub, theta, P = _cone_jets(cfg, n_ub, n_theta, 4)
    r = ub - cfg.u0
    rr = r[:, None, None]
    table = {}
    table["phi_e3"] = _norms(P.value - E3, r, ub, theta)
    for k in range(3):
        om = [P.partial((j, k)) for j in range(3)]
        table[f"L_slash{k}"] = _norms((om[1] - k * om[0] / rr) / rr ** k, r, ub, theta)
        table[f"slash{k + 1}"] = _norms(P.partial((0, k + 1)) / rr ** (k + 1), r, ub, theta)
        table[f"LL_slash{k}"] = _norms((om[2] - 2 * k * om[1] / rr + k * (k + 1) * om[0] / rr ** 2) / rr ** k,
                                       r, ub, theta)
    if transverse:
        ub_t, th_t, lb = transverse_derivative_on_cone(cfg, n_ub, n_theta)
        table["Lb"] = _norms(lb, ub_t - cfg.u0, ub_t, th_t)
    return {k: {"Linf": v[0], "L2": v[1]} for k, v in table.items()}
