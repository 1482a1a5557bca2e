"""The null form Q0, its frame expansion and the commutator identities.

Sign conventions: Q0(dphi, dpsi) = -d_t phi d_t psi + d_1 phi d_1 psi + d_2 phi d_2 psi
and box = d_t^2 - Delta, so the wave map system reads box(phi) = phi Q0(dphi, dphi)
with Q0 summed over the target index.  The covariant wave operator of the
(-,+,+) metric is box_g = -box; the classical commutator table
[box_g, L] = (1/2r^2)(L - Lb) + (2/r) lap_slash holds for box_g, so every
correction term below carries the opposite sign when written for box.

Identity checks evaluate analytic test fields through :mod:`wavemap.jets`,
so residuals measure the identities and not a discretisation.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Callable

import numpy as np

from .geometry import NullCoords, null_frame_derivatives
from .jets import Jet, SpacetimeJets, dot, stack


@dataclass
class GradientPair:
    """Spacetime gradients of two target-valued fields.

    ``dphi`` and ``dpsi`` have shape (..., 3, 3): axis -2 is the spacetime
    index (t, x1, x2), axis -1 the target component.
    """

    dphi: np.ndarray
    dpsi: np.ndarray

    def __post_init__(self):
        self.dphi = np.asarray(self.dphi, dtype=float)
        self.dpsi = np.asarray(self.dpsi, dtype=float)
        if self.dphi.shape[-2:] != (3, 3) or self.dpsi.shape[-2:] != (3, 3):
            raise ValueError("gradients must have trailing shape (3 spacetime, 3 target)")
        if not (np.all(np.isfinite(self.dphi)) and np.all(np.isfinite(self.dpsi))):
            raise ValueError("gradient entries must be finite")


def q0(p: GradientPair) -> np.ndarray:
    """Componentwise null form, contracted over the spacetime index only."""
    a, b = p.dphi, p.dpsi
    return -a[..., 0, :] * b[..., 0, :] + a[..., 1, :] * b[..., 1, :] + a[..., 2, :] * b[..., 2, :]


def q0_frame(p: GradientPair, coords: NullCoords, r_min: float = 0.0) -> np.ndarray:
    """Q0 rebuilt from the null frame: -(L phi Lb psi + Lb phi L psi)/2 + slash phi slash psi.

    No L phi L psi product appears, which is the whole point of the null structure.
    """
    da = null_frame_derivatives(p.dphi[..., 0, :], p.dphi[..., 1, :], p.dphi[..., 2, :], coords, r_min)
    db = null_frame_derivatives(p.dpsi[..., 0, :], p.dpsi[..., 1, :], p.dpsi[..., 2, :], coords, r_min)
    return -0.5 * (da.L * db.Lb + da.Lb * db.L) + da.slash * db.slash


def q0_null_bound_ratio(p: GradientPair, coords: NullCoords, r_min: float = 0.0) -> np.ndarray:
    """|Q0| / (|L phi||Lb psi| + |Lb phi||L psi| + |slash phi||slash psi|), with 0/0 := 0.

    |Q0| is the Euclidean norm of the componentwise form and the frame norms
    are over the target index.  By Cauchy-Schwarz and the frame expansion the
    ratio never exceeds 1.
    """
    num = np.linalg.norm(q0(p), axis=-1)
    da = null_frame_derivatives(p.dphi[..., 0, :], p.dphi[..., 1, :], p.dphi[..., 2, :], coords, r_min)
    db = null_frame_derivatives(p.dpsi[..., 0, :], p.dpsi[..., 1, :], p.dpsi[..., 2, :], coords, r_min)
    n = lambda v: np.linalg.norm(v, axis=-1)  # noqa: E731
    den = n(da.L) * n(db.Lb) + n(da.Lb) * n(db.L) + n(da.slash) * n(db.slash)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    return out


# -- analytic-field identity checks -------------------------------------------

Field = Callable[[SpacetimeJets], Jet]


def _jets_at(samples: NullCoords, order: int, r_min: float) -> SpacetimeJets:
    r = np.asarray(samples.r, dtype=float)
    if np.any(r <= r_min):
        i = int(np.argmin(r))
        raise ValueError(f"sample {i} at r={r.flat[i]:.3e} violates axis exclusion r > {r_min}")
    return SpacetimeJets.from_null(samples, order)


def commutator_residual_q0(X: str, testpair: tuple[Field, Field], samples: NullCoords,
                           r_min: float = 0.0) -> float:
    """Max residual of X Q0(phi,psi) - Q0(X phi,psi) - Q0(phi,X psi) + s/r (2Q0 + L phi Lb psi + Lb phi L psi).

    s = +1 for X = L and -1 for X = Lb.
    """
    if X not in ("L", "Lb"):
        raise ValueError(f"X must be 'L' or 'Lb', got {X!r}")
    S = _jets_at(samples, 3, r_min)
    phi, psi = testpair[0](S), testpair[1](S)
    op = S.L if X == "L" else S.Lb
    sign = 1.0 if X == "L" else -1.0
    ir = S._b(S.inv_r, phi)
    res = (op(S.q0(phi, psi)) - S.q0(op(phi), psi) - S.q0(phi, op(psi))
           + (S.q0(phi, psi) * 2.0 + S.L(phi) * S.Lb(psi) + S.Lb(phi) * S.L(psi)) * ir * sign)
    return float(np.max(np.abs(res.value)))


VECTORFIELD_IDENTITIES = (
    "Omega_nablaslash", "box_Omega", "box_L", "box_Lb", "L_Omega", "Lb_Omega", "L_Lb",
)


def _box_frame_correction(S: SpacetimeJets, f: Jet, sign: float) -> Jet:
    """[box, X] f for X = L (sign +1) or Lb (sign -1), box = d_t^2 - Delta."""
    ir = S._b(S.inv_r, f)
    return -sign * ((S.L(f) - S.Lb(f)) * ir * ir * 0.5 + S.lap_slash(f) * ir * 2.0)


def commutator_residual_vectorfields(identity_id: str, testfield: Field, samples: NullCoords,
                                     r_min: float = 0.0) -> float:
    """Max residual of one commutator identity applied to an analytic field."""
    if identity_id not in VECTORFIELD_IDENTITIES:
        raise ValueError(f"unknown identity {identity_id!r}; known: {', '.join(VECTORFIELD_IDENTITIES)}")
    S = _jets_at(samples, 4, r_min)
    f = testfield(S)
    if identity_id == "Omega_nablaslash":
        res = S.omega(S.slash(f)) - S.slash(S.omega(f))
    elif identity_id == "box_Omega":
        res = S.box(S.omega(f)) - S.omega(S.box(f))
    elif identity_id == "box_L":
        res = S.box(S.L(f)) - S.L(S.box(f)) - _box_frame_correction(S, f, 1.0)
    elif identity_id == "box_Lb":
        res = S.box(S.Lb(f)) - S.Lb(S.box(f)) - _box_frame_correction(S, f, -1.0)
    elif identity_id == "L_Omega":
        res = S.L(S.omega(f)) - S.omega(S.L(f))
    elif identity_id == "Lb_Omega":
        res = S.Lb(S.omega(f)) - S.omega(S.Lb(f))
    else:
        res = S.L(S.Lb(f)) - S.Lb(S.L(f))
    return float(np.max(np.abs(res.value)))


COMMUTED = ("Omega_n", "L_Omega_n", "Lb_Omega_n")


def _omega_powers(S: SpacetimeJets, f: Jet, n: int) -> list[Jet]:
    out = [f]
    for _ in range(n):
        out.append(S.omega(out[-1]))
    return out


def _triples(n: int):
    for i in range(n + 1):
        for p in range(n + 1 - i):
            q = n - i - p
            yield i, p, q, factorial(n) // (factorial(i) * factorial(p) * factorial(q))


def commuted_equation_rhs(n: int, which: str, jet: Jet, S: SpacetimeJets) -> Jet:
    """Right-hand side F_D with box(D phi) = F_D whenever box(phi) = phi Q0(phi, phi).

    D is Omega^n, L Omega^n or Lb Omega^n.  The expansion is exact (multinomial
    constants included) and holds as an algebraic identity
    box(D phi) - F_D = D(box(phi) - phi Q0(phi, phi)) for any smooth phi.
    ``jet`` is the target-valued field jet over the coordinates ``S`` and must
    carry at least n + 3 derivatives.  Returns a jet; take ``.value`` for the
    pointwise vector.
    """
    if n not in (0, 1, 2):
        raise ValueError(f"commuted equations are implemented for n <= 2, got {n}")
    if which not in COMMUTED:
        raise ValueError(f"unknown commuted equation {which!r}")
    om = _omega_powers(S, jet, n)
    bq = lambda a, b: S._b(S.q0_dot(a, b), a)  # noqa: E731  (scalar Q0 broadcast over target)
    out = None
    if which == "Omega_n":
        for i, p, q, c in _triples(n):
            term = om[i] * bq(om[p], om[q]) * float(c)
            out = term if out is None else out + term
        return out
    X = S.L if which == "L_Omega_n" else S.Lb
    sign = 1.0 if which == "L_Omega_n" else -1.0
    for i, p, q, c in _triples(n):
        ir = S._b(S.inv_r, om[i])
        frame = S._b(dot(S.L(om[p]), S.Lb(om[q])) + dot(S.Lb(om[p]), S.L(om[q])), om[i])
        term = (X(om[i]) * bq(om[p], om[q])
                + om[i] * (bq(X(om[p]), om[q]) + bq(om[p], X(om[q])))
                - om[i] * (bq(om[p], om[q]) * 2.0 + frame) * ir * sign) * float(c)
        out = term if out is None else out + term
    return out + _box_frame_correction(S, om[n], sign)


def commuted_operator(n: int, which: str, jet: Jet, S: SpacetimeJets) -> Jet:
    """The derivative D phi whose wave equation :func:`commuted_equation_rhs` describes."""
    f = _omega_powers(S, jet, n)[-1]
    if which == "Omega_n":
        return f
    return S.L(f) if which == "L_Omega_n" else S.Lb(f)


def commuted_equation_residual(n: int, which: str, field: Field, samples: NullCoords,
                               r_min: float = 0.0) -> float:
    """Max |box(D phi) - F_D - D(box phi - phi Q0)| for an analytic field (zero identically)."""
    S = _jets_at(samples, n + 4, r_min)
    phi = field(S)
    lhs = S.box(commuted_operator(n, which, phi, S))
    rhs = commuted_equation_rhs(n, which, phi, S)
    defect = S.box(phi) - phi * S._b(S.q0_dot(phi, phi), phi)
    res = lhs - rhs - commuted_operator(n, which, defect, S)
    return float(np.max(np.abs(res.value)))


# -- analytic test-field zoo --------------------------------------------------

@dataclass
class ZooField:
    """Random smooth field: sums of polynomial x trigonometric x Gaussian-bump terms.

    Each of the three target components is sum_j a_j P_j(t,x) sin(k_j.(t,x) + c_j)
    exp(-b_j |x - x_j|^2) with low-degree polynomials P_j.
    """

    amp: np.ndarray       # (3, J)
    wave: np.ndarray      # (3, J, 3) wave vector over (t, x1, x2)
    phase: np.ndarray     # (3, J)
    poly: np.ndarray      # (3, J, 4) coefficients of 1, t, x1, x2*x1
    width: np.ndarray     # (3, J)
    centre: np.ndarray    # (3, J, 2)

    @classmethod
    def random(cls, rng: np.random.Generator, terms: int = 2) -> "ZooField":
        return cls(
            amp=rng.normal(size=(3, terms)),
            wave=rng.normal(size=(3, terms, 3)),
            phase=rng.uniform(0, 2 * np.pi, size=(3, terms)),
            poly=rng.normal(size=(3, terms, 4)) * np.array([1.0, 0.5, 0.5, 0.3]),
            width=rng.uniform(0.05, 0.5, size=(3, terms)),
            centre=rng.normal(size=(3, terms, 2)),
        )

    def __call__(self, S: SpacetimeJets) -> Jet:
        comps = []
        for a in range(3):
            f = None
            for j in range(self.amp.shape[1]):
                k = self.wave[a, j]
                arg = S.t * k[0] + S.x1 * k[1] + S.x2 * k[2] + self.phase[a, j]
                c = self.poly[a, j]
                poly = S.t * c[1] + S.x1 * c[2] + S.x2 * S.x1 * c[3] + c[0]
                dx1 = S.x1 - self.centre[a, j, 0]
                dx2 = S.x2 - self.centre[a, j, 1]
                bump = ((dx1 * dx1 + dx2 * dx2) * -self.width[a, j]).exp()
                term = arg.sin() * poly * bump * self.amp[a, j]
                f = term if f is None else f + term
            comps.append(f)
        return stack(comps)


def equatorial_wave_map(waves: np.ndarray) -> Field:
    """Exact wave map (cos a, sin a, 0) with a = sum_j A_j sin(k_j.x - |k_j| t + c_j).

    ``waves`` has rows (A, k1, k2, c).  Any free linear wave works for a since
    the equator is a geodesic.
    """
    waves = np.atleast_2d(np.asarray(waves, dtype=float))

    def field(S: SpacetimeJets) -> Jet:
        alpha = None
        for A, k1, k2, c in waves:
            w = np.hypot(k1, k2)
            term = (S.x1 * k1 + S.x2 * k2 - S.t * w + c).sin() * A
            alpha = term if alpha is None else alpha + term
        return stack([alpha.cos(), alpha.sin(), alpha * 0.0])

    return field


def random_samples(rng: np.random.Generator, count: int, r_range=(0.3, 3.0),
                   t_range=(-2.0, 2.0)) -> NullCoords:
    """Uniformly scattered sample points away from the axis, as null coordinates."""
    r = rng.uniform(*r_range, size=count)
    theta = rng.uniform(0, 2 * np.pi, size=count)
    t = rng.uniform(*t_range, size=count)
    return NullCoords(0.5 * (t - r), 0.5 * (t + r), r, theta, np.zeros(count, dtype=bool))


def zoo_gradient_pairs(rng: np.random.Generator, fields: int, points: int):
    """Exact gradients of ``fields`` random zoo pairs, each at ``points`` random points."""
    dphi, dpsi, cs = [], [], []
    for _ in range(fields):
        coords = random_samples(rng, points)
        S = SpacetimeJets.from_null(coords, 1)
        f, g = ZooField.random(rng)(S), ZooField.random(rng)(S)
        dphi.append(np.stack([f.partial(e) for e in ((1, 0, 0), (0, 1, 0), (0, 0, 1))], axis=-2))
        dpsi.append(np.stack([g.partial(e) for e in ((1, 0, 0), (0, 1, 0), (0, 0, 1))], axis=-2))
        cs.append(coords)
    cat = lambda name: np.concatenate([getattr(c, name) for c in cs])  # noqa: E731
    coords = NullCoords(cat("u"), cat("ub"), cat("r"), cat("theta"), cat("on_axis"))
    return GradientPair(np.concatenate(dphi), np.concatenate(dpsi)), coords


def null_plane_pair(rng: np.random.Generator, count: int):
    """Gradients of phi = f(xi.x), psi = g(xi.x) for random null covectors xi."""
    ang = rng.uniform(0, 2 * np.pi, size=count)
    xi = np.stack([-np.ones(count), np.cos(ang), np.sin(ang)], axis=-1) * rng.uniform(0.2, 5, (count, 1))
    fa = rng.normal(size=(count, 3)) * 10 ** rng.uniform(-2, 2, size=(count, 1))
    gb = rng.normal(size=(count, 3)) * 10 ** rng.uniform(-2, 2, size=(count, 1))
    return GradientPair(xi[:, :, None] * fa[:, None, :], xi[:, :, None] * gb[:, None, :])
