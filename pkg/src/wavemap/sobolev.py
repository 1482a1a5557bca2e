"""Sobolev inequalities on circles S_{ub,u} and on the cones C_u, Cb_ub, as measured ratios.

Each ratio is LHS / RHS of one inequality, evaluated by quadrature with the
induced measure r dtheta on circles and r dtheta d(coord) on cones.  The
inequalities hold up to an unspecified constant, so callers calibrate the
largest ratio on a test zoo and then check that it does not grow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

WHICH = ("circle_Linf", "circle_L6", "cone_Cu_L4", "cone_Cu_L2", "cone_Cb_L4", "cone_Cb_L2")


class PreconditionError(ValueError):
    """The tested function violates the hypothesis of the inequality."""


def _abs2(v: np.ndarray) -> np.ndarray:
    return v * v if v.ndim == 1 or v.shape[-1] != 3 else np.sum(v * v, axis=-1)


def _d_theta(values: np.ndarray, axis: int) -> np.ndarray:
    n = values.shape[axis]
    m = np.fft.fftfreq(n, 1.0 / n)
    m[n // 2] = 0.0
    shape = [1] * values.ndim
    shape[axis] = n
    return np.real(np.fft.ifft(np.fft.fft(values, axis=axis) * (1j * m).reshape(shape), axis=axis))


def _ratio(lhs: float, rhs: float) -> float:
    if rhs == 0.0:
        return 0.0 if lhs == 0.0 else np.inf
    return lhs / rhs


@dataclass
class CircleFunction:
    """Samples of f on the circle of radius r at equally spaced angles; |u| enters the weights."""

    values: np.ndarray    # (Ntheta,) or (Ntheta, 3)
    r: float
    u: float

    def _int(self, density) -> float:
        return float(np.sum(density) * 2 * np.pi / density.shape[0] * self.r)

    def slash(self) -> np.ndarray:
        return _d_theta(self.values, 0) / self.r


@dataclass
class ConeFunction:
    """f on C_u (kind 'outgoing', coord ub, deriv = L f) or Cb_ub ('incoming', coord u, deriv = Lb f)."""

    kind: str
    coord: np.ndarray     # (Nc,)
    r: np.ndarray         # (Nc,)
    u: np.ndarray         # (Nc,) the u value of each circle
    values: np.ndarray    # (Nc, Ntheta[, 3])
    deriv: np.ndarray

    @property
    def n_theta(self) -> int:
        return self.values.shape[1]

    def circle_int(self, density: np.ndarray) -> np.ndarray:
        return density.sum(axis=1) * (2 * np.pi / self.n_theta) * self.r

    def cone_l2(self, v: np.ndarray, weight=None) -> float:
        dens = _abs2(v)
        if weight is not None:
            dens = dens * weight[:, None] ** 2
        return float(np.sqrt(max(simpson(self.circle_int(dens), x=self.coord), 0.0)))

    def slash(self) -> np.ndarray:
        return _d_theta(self.values, 1) / self.r.reshape((-1,) + (1,) * (self.values.ndim - 1))

    def circle_lp(self, p: int) -> np.ndarray:
        return self.circle_int(_abs2(self.values) ** (p / 2)) ** (1.0 / p)


def circle_ratio(f: CircleFunction, which: str) -> float:
    a2 = _abs2(f.values)
    au = abs(f.u)
    if which == "circle_Linf":
        lhs = float(np.sqrt(a2.max()))
        rhs = au ** 0.5 * np.sqrt(f._int(_abs2(f.slash()))) + au ** -0.5 * np.sqrt(f._int(a2))
        return _ratio(lhs, float(rhs))
    if which == "circle_L6":
        lhs = f._int(a2 ** 3)
        rhs = f._int(a2 ** 2) * (au * f._int(_abs2(f.slash())) + f._int(a2) / au)
        return _ratio(lhs, float(rhs))
    raise ValueError(f"not a circle inequality: {which!r}")


def cone_ratio(f: ConeFunction, which: str, vanish_tol: float = 1e-6) -> float:
    if which.startswith("cone_Cu"):
        if f.kind != "outgoing":
            raise PreconditionError(f"{which} needs a function on an outgoing cone")
        scale = float(np.sqrt(_abs2(f.values).max())) if f.values.size else 0.0
        edge = float(np.sqrt(_abs2(f.values[0]).max()))
        if abs(f.coord[0]) > 1e-12 or edge > vanish_tol * max(scale, 1e-300):
            raise PreconditionError(f"{which}: f must vanish on S_(0,u); |f| = {edge:.3e} at ub = {f.coord[0]}")
        Lf, fn = f.cone_l2(f.deriv), f.cone_l2(f.values)
        au = np.abs(f.u)
        if which == "cone_Cu_L4":
            lhs = float(np.max(au ** 0.25 * f.circle_lp(4)))
            rhs = Lf ** 0.5 * (fn ** 0.5 + au[0] ** 0.5 * f.cone_l2(f.slash()) ** 0.5)
        elif which == "cone_Cu_L2":
            lhs = float(np.max(f.circle_lp(2)))
            rhs = Lf ** 0.5 * fn ** 0.5
        else:
            raise ValueError(f"unknown inequality {which!r}")
        return _ratio(lhs, float(rhs))
    if which.startswith("cone_Cb"):
        if f.kind != "incoming":
            raise PreconditionError(f"{which} needs a function on an incoming cone")
        Lbf, fn = f.cone_l2(f.deriv), f.cone_l2(f.values)
        au = np.abs(f.u)
        if which == "cone_Cb_L4":
            lp = f.circle_lp(4)
            lhs = float(np.max(au ** 0.25 * lp))
            rhs = au[0] ** 0.25 * lp[0] + Lbf ** 0.5 * (fn ** 0.5 + f.cone_l2(f.slash(), weight=au) ** 0.5)
        elif which == "cone_Cb_L2":
            lp = f.circle_lp(2)
            lhs = float(np.max(lp))
            rhs = lp[0] + Lbf ** 0.5 * fn ** 0.5
        else:
            raise ValueError(f"unknown inequality {which!r}")
        return _ratio(lhs, float(rhs))
    raise ValueError(f"unknown inequality {which!r}")


def sobolev_ratio(obj, which: str, **kw) -> float:
    """LHS / RHS of inequality ``which`` for a CircleFunction or ConeFunction (0/0 -> 0)."""
    if which not in WHICH:
        raise ValueError(f"which must be one of {WHICH}, got {which!r}")
    if isinstance(obj, CircleFunction):
        return circle_ratio(obj, which)
    if isinstance(obj, ConeFunction):
        return cone_ratio(obj, which, **kw)
    raise TypeError(f"expected CircleFunction or ConeFunction, got {type(obj).__name__}")


def cone_functions(slice_, subtract=(0.0, 0.0, 1.0)) -> list[ConeFunction]:
    """Components of phi - e3 on a ConeSlice as scalar cone functions."""
    phi = slice_.field("phi") - np.asarray(subtract)
    deriv = slice_.field("L" if slice_.kind == "outgoing" else "Lb")
    if slice_.kind == "outgoing":
        u = np.full(slice_.coord.size, slice_.level)
    else:
        u = slice_.coord
    return [ConeFunction(slice_.kind, slice_.coord, slice_.r, u, phi[..., c], deriv[..., c]) for c in range(3)]


# -- seeded test zoos ----------------------------------------------------------------

@dataclass
class BandLimited:
    """Analytic test function sum_{j,m} c_{jm} s_j(x) e_m(theta) with band limits J, M.

    On circles only the angular part is used.  For outgoing cones s_j(x) =
    sin(j pi x / (2 width)) (vanishing at x = 0); for incoming cones
    s_j(x) = cos((j - 1) pi x / width + phase_j).
    """

    kind: str             # circle | outgoing | incoming
    coef: np.ndarray      # (J, 2M + 1)
    phase: np.ndarray     # (J,)
    r0: float             # circle radius, or ub - u offset data below
    u0: float
    width: float

    @classmethod
    def random(cls, rng: np.random.Generator, kind: str, J: int = 3, M: int = 4):
        decay = 1.0 / (1.0 + np.arange(-M, M + 1) ** 2)
        coef = rng.normal(size=(J, 2 * M + 1)) * decay * 10 ** rng.uniform(-1, 1)
        coef *= (rng.uniform(size=(J, 2 * M + 1)) < 0.7)
        phase = rng.uniform(0, 2 * np.pi, size=J)
        if kind == "circle":
            r = rng.uniform(1.0, 4.0)
            return cls(kind, coef[:1], phase[:1], r, -r + rng.uniform(0, 0.1), 0.0)
        if kind == "outgoing":
            return cls(kind, coef, phase, 0.0, rng.uniform(-4.0, -1.0), rng.uniform(0.0125, 0.1))
        if kind == "incoming":
            return cls(kind, coef, phase, rng.uniform(0.0, 0.1), -4.0, rng.uniform(1.0, 3.0))
        raise ValueError(kind)

    def _angular(self, theta):
        M = (self.coef.shape[1] - 1) // 2
        m = np.arange(-M, M + 1)
        return np.where(m[:, None] >= 0, np.cos(m[:, None] * theta), np.sin(-m[:, None] * theta))

    def sample(self, n_coord: int, n_theta: int):
        theta = 2 * np.pi * np.arange(n_theta) / n_theta
        ang = self._angular(theta)                              # (2M+1, Nt)
        if self.kind == "circle":
            return CircleFunction(self.coef[0] @ ang, self.r0, self.u0)
        x = np.linspace(0.0, self.width, n_coord)
        j = np.arange(1, self.coef.shape[0] + 1)[:, None]
        if self.kind == "outgoing":
            k = j * np.pi / (2 * self.width)
            s, ds = np.sin(k * x), k * np.cos(k * x)
            coord, u = x, np.full(n_coord, self.u0)
            r = coord - self.u0
        else:
            k = (j - 1) * np.pi / self.width
            s, ds = np.cos(k * x + self.phase[:, None]), -k * np.sin(k * x + self.phase[:, None])
            coord = self.u0 + x
            u = coord
            r = self.r0 - coord
        vals = np.einsum("jm,jc,mt->ct", self.coef, s, ang)
        der = np.einsum("jm,jc,mt->ct", self.coef, ds, ang)
        return ConeFunction(self.kind, coord, r, u, vals, der)


def zoo(rng: np.random.Generator, which: str, count: int) -> list[BandLimited]:
    kind = "circle" if which.startswith("circle") else ("outgoing" if "Cu" in which else "incoming")
    return [BandLimited.random(rng, kind) for _ in range(count)]


def zoo_ratios(members, which: str, resolution=(33, 32)) -> np.ndarray:
    return np.array([sobolev_ratio(f.sample(*resolution), which) for f in members])


@dataclass
class SobolevCheck:
    which: str
    c_sob: float               # max ratio at the baseline resolution
    max_refined: float         # max ratio at doubled resolution
    max_rel_change: float      # largest per-function relative change under doubling

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.c_sob) and self.max_refined <= self.c_sob * 1.1
                    and self.max_rel_change < 0.1)


def sobolev_battery(seed: int = 0, count: int = 1000, resolution=(33, 32)) -> list[SobolevCheck]:
    """Calibrate C_sob per inequality on a seeded zoo, then re-measure at doubled resolution."""
    out = []
    fine = (2 * resolution[0] - 1, 2 * resolution[1])
    for i, which in enumerate(WHICH):
        members = zoo(np.random.default_rng([seed, i]), which, count)
        base = zoo_ratios(members, which, resolution)
        ref = zoo_ratios(members, which, fine)
        scale = np.maximum(np.abs(base), 1e-300)
        change = np.where((base == 0) & (ref == 0), 0.0, np.abs(ref - base) / scale)
        out.append(SobolevCheck(which, float(base.max()), float(ref.max()), float(change.max())))
    return out
