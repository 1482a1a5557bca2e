"""Null-polar coordinates, null frames and stress-energy components on R^{2+1}.

Conventions: metric signature (-, +, +); u = (t - r)/2, ub = (t + r)/2;
L = d_t + d_r, Lb = d_t - d_r, Omega = x1 d_2 - x2 d_1 = d_theta and the
angular derivative ``slash = r^{-1} Omega``.  All functions accept scalars or
broadcastable arrays; target-space vectors live on the trailing axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi

MULTIPLIERS = ("L", "Lb", "Omega")
NORMALS = ("L", "Lb")


class AxisExclusionError(ValueError):
    """Raised when a null-frame quantity is requested too close to r = 0."""


@dataclass(frozen=True)
class NullCoords:
    u: np.ndarray | float
    ub: np.ndarray | float
    r: np.ndarray | float
    theta: np.ndarray | float
    on_axis: np.ndarray | bool = False

    @property
    def t(self):
        return self.u + self.ub

    def cartesian(self):
        """Reconstruct (t, x1, x2)."""
        return self.u + self.ub, self.r * np.cos(self.theta), self.r * np.sin(self.theta)


def to_null_coords(t, x1, x2) -> NullCoords:
    t = np.asarray(t, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    r = np.hypot(x1, x2)
    on_axis = r == 0.0
    theta = np.mod(np.arctan2(x2, x1), TWO_PI)
    # mod can round 2pi - tiny up to exactly 2pi
    theta = np.where(theta >= TWO_PI, 0.0, theta)
    theta = np.where(on_axis, 0.0, theta)
    u = 0.5 * (t - r)
    ub = 0.5 * (t + r)
    if u.ndim == 0:
        return NullCoords(float(u), float(ub), float(r), float(theta), bool(on_axis))
    return NullCoords(u, ub, r, theta, on_axis)


@dataclass
class NullFrameDeriv:
    """Null-frame derivatives of a target-valued field at one or more points.

    ``L``, ``Lb`` and ``slash`` have the target components on the last axis.
    ``Omega_k``/``L_Omega_k``/``Lb_Omega_k`` optionally hold higher angular
    entries keyed by k (k <= 2).
    """

    L: np.ndarray
    Lb: np.ndarray
    slash: np.ndarray
    r: np.ndarray | float | None = None
    Omega_k: dict | None = None
    L_Omega_k: dict | None = None
    Lb_Omega_k: dict | None = None

    @property
    def dt(self):
        return 0.5 * (self.L + self.Lb)

    @property
    def dr(self):
        return 0.5 * (self.L - self.Lb)

    def cartesian_gradient(self, theta):
        """Return (d_t, d_1, d_2) rebuilt from the frame; inverse of the decomposition."""
        c = np.cos(theta)[..., None]
        s = np.sin(theta)[..., None]
        dr = self.dr
        return self.dt, c * dr - s * self.slash, s * dr + c * self.slash


def null_frame_derivatives(grad_t, grad_x1, grad_x2, coords: NullCoords,
                           r_min: float = 0.0) -> NullFrameDeriv:
    """Decompose a Cartesian gradient into (L, Lb, slash) components.

    Gradients have the target components on the last axis; ``coords`` may be
    batched over the leading axes.
    """
    r = np.asarray(coords.r, dtype=float)
    bad = r <= r_min
    if np.any(bad):
        where = np.argwhere(np.atleast_1d(bad))[0]
        raise AxisExclusionError(
            f"null frame requested at r={np.atleast_1d(r)[tuple(where)]:.3e} <= r_min={r_min:.3e} "
            f"(index {tuple(int(i) for i in where)})")
    grad_t = np.asarray(grad_t, dtype=float)
    grad_x1 = np.asarray(grad_x1, dtype=float)
    grad_x2 = np.asarray(grad_x2, dtype=float)
    c = np.cos(coords.theta)[..., None]
    s = np.sin(coords.theta)[..., None]
    dr = c * grad_x1 + s * grad_x2
    slash = -s * grad_x1 + c * grad_x2
    return NullFrameDeriv(L=grad_t + dr, Lb=grad_t - dr, slash=slash, r=r)


def _dot(a, b):
    return np.sum(np.asarray(a) * np.asarray(b), axis=-1)


def stress_energy(d: NullFrameDeriv, X: str, Y: str) -> np.ndarray:
    """Frame component T(X, Y), summed over target components.

    T(L,L) = |L phi|^2, T(L,Lb) = |slash phi|^2, T(Lb,Lb) = |Lb phi|^2 and
    T(Omega, Y) = Omega phi . Y phi (g(Omega, L) = g(Omega, Lb) = 0).
    """
    if X not in MULTIPLIERS or Y not in NORMALS:
        raise ValueError(f"unsupported frame pair ({X}, {Y})")
    if X == "Omega":
        if d.r is None:
            raise ValueError("T(Omega, .) needs the radius on the frame derivative")
        omega = np.asarray(d.r)[..., None] * d.slash
        return _dot(omega, d.L if Y == "L" else d.Lb)
    if X == Y:
        return _dot(d.L, d.L) if X == "L" else _dot(d.Lb, d.Lb)
    return _dot(d.slash, d.slash)


def deformation_current(X: str, d: NullFrameDeriv, r) -> np.ndarray:
    """Bulk current K^X = T^{mu nu} (X)pi_{mu nu} for X in {L, Lb, Omega}."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("deformation current needs r > 0")
    if X == "Omega":
        return np.zeros(np.broadcast_shapes(r.shape, d.L.shape[:-1]))
    k = (_dot(d.slash, d.slash) + _dot(d.L, d.Lb)) / (2.0 * r)
    if X == "L":
        return k
    if X == "Lb":
        return -k
    raise ValueError(f"unknown multiplier {X!r}")
