"""Truncated multivariate Taylor arithmetic.

A :class:`Jet` holds the Taylor coefficients of a (batch of) smooth functions
about a base point, truncated at a fixed total degree.  Arithmetic and
composition with elementary functions are exact up to that degree, so
derivatives of analytic test fields come out to rounding error.  This is the
oracle used throughout the identity checks: no finite differences involved.

Coefficient layout: the last axis indexes monomials ``dz^alpha`` with
``|alpha| <= order``; the stored value is ``d^alpha f / alpha!``.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import product
from math import factorial

import numpy as np


@lru_cache(maxsize=None)
def _monomials(nvar: int, order: int) -> tuple[tuple[int, ...], ...]:
    monos = [a for a in product(range(order + 1), repeat=nvar) if sum(a) <= order]
    monos.sort(key=lambda a: (sum(a), tuple(-x for x in a)))
    return tuple(monos)


@lru_cache(maxsize=None)
def _tables(nvar: int, order: int):
    monos = _monomials(nvar, order)
    index = {m: i for i, m in enumerate(monos)}
    degree = np.array([sum(m) for m in monos])
    left, right, target = [], [], []
    for i, a in enumerate(monos):
        for j, b in enumerate(monos):
            c = tuple(x + y for x, y in zip(a, b))
            if sum(c) <= order:
                left.append(i)
                right.append(j)
                target.append(index[c])
    left = np.array(left)
    right = np.array(right)
    target = np.array(target)
    scatter = np.zeros((len(left), len(monos)))
    scatter[np.arange(len(left)), target] = 1.0
    pair_degree = degree[left] + degree[right]
    # d/dz_v: coefficient of alpha in the derivative is (alpha_v+1) c[alpha+e_v]
    shift_src = np.zeros((nvar, len(monos)), dtype=int)
    shift_fac = np.zeros((nvar, len(monos)))
    for v in range(nvar):
        for i, a in enumerate(monos):
            up = list(a)
            up[v] += 1
            up = tuple(up)
            if up in index:
                shift_src[v, i] = index[up]
                shift_fac[v, i] = a[v] + 1
    fact = np.array([np.prod([factorial(x) for x in m]) for m in monos], dtype=float)
    return monos, index, degree, left, right, scatter, pair_degree, shift_src, shift_fac, fact


class Jet:
    """Batch of truncated Taylor series in ``nvar`` variables.

    ``coef`` has shape ``(..., M)``; ``order`` may be lower than the space
    order after differentiation, in which case higher coefficients are zero
    and must not be trusted.
    """

    __array_priority__ = 100

    def __init__(self, coef, nvar: int, space_order: int, order: int | None = None):
        self.coef = np.asarray(coef, dtype=float)
        self.nvar = nvar
        self.space_order = space_order
        self.order = space_order if order is None else order

    # -- construction -------------------------------------------------
    @classmethod
    def constant(cls, value, nvar, order):
        value = np.asarray(value, dtype=float)
        m = len(_monomials(nvar, order))
        coef = np.zeros(value.shape + (m,))
        coef[..., 0] = value
        return cls(coef, nvar, order)

    @classmethod
    def variable(cls, value, var: int, nvar, order):
        """The coordinate function ``z_var`` expanded about ``value``."""
        jet = cls.constant(value, nvar, order)
        if order >= 1:
            idx = _tables(nvar, order)[1][tuple(1 if v == var else 0 for v in range(nvar))]
            jet.coef[..., idx] = 1.0
        return jet

    def _new(self, coef, order=None):
        return Jet(coef, self.nvar, self.space_order, self.order if order is None else order)

    def _lift(self, other):
        if isinstance(other, Jet):
            return other
        other = np.asarray(other, dtype=float)
        coef = np.zeros(other.shape + (self.coef.shape[-1],))
        coef[..., 0] = other
        return Jet(coef, self.nvar, self.space_order, self.space_order)

    # -- access -------------------------------------------------------
    @property
    def value(self):
        return self.coef[..., 0]

    @property
    def shape(self):
        return self.coef.shape[:-1]

    def partial(self, alpha) -> np.ndarray:
        """Value of the mixed partial derivative ``d^alpha f`` at the base point."""
        alpha = tuple(alpha)
        if sum(alpha) > self.order:
            raise ValueError(f"derivative {alpha} exceeds jet order {self.order}")
        tab = _tables(self.nvar, self.space_order)
        i = tab[1][alpha]
        return self.coef[..., i] * tab[9][i]

    def __getitem__(self, item):
        """Index the batch dimensions (never the monomial axis)."""
        if not isinstance(item, tuple):
            item = (item,)
        if any(i is Ellipsis for i in item):
            raise IndexError("use Jet.comp for trailing-axis selection")
        return self._new(self.coef[item])

    def comp(self, c: int) -> "Jet":
        """Select entry ``c`` of the last batch axis (e.g. a target component)."""
        return self._new(self.coef[..., c, :])

    # -- arithmetic ---------------------------------------------------
    def __add__(self, other):
        o = self._lift(other)
        return self._new(self.coef + o.coef, min(self.order, o.order))

    __radd__ = __add__

    def __neg__(self):
        return self._new(-self.coef)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            return self._new(self.coef * other[..., None])
        order = min(self.order, other.order)
        tab = _tables(self.nvar, self.space_order)
        left, right, scatter, pair_degree = tab[3], tab[4], tab[5], tab[6]
        keep = pair_degree <= order
        if keep.all():
            prod = self.coef[..., left] * other.coef[..., right]
            return self._new(prod @ scatter, order)
        prod = self.coef[..., left[keep]] * other.coef[..., right[keep]]
        return self._new(prod @ scatter[keep], order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)) and p >= 0:
            out = self._lift(np.ones(self.shape))
            for _ in range(p):
                out = out * self
            return out
        return self.power(float(p))

    # -- calculus -----------------------------------------------------
    def d(self, var: int) -> "Jet":
        """Partial derivative with respect to variable ``var``."""
        tab = _tables(self.nvar, self.space_order)
        src, fac, degree = tab[7][var], tab[8][var], tab[2]
        coef = self.coef[..., src] * fac
        order = self.order - 1
        coef[..., degree > order] = 0.0
        return self._new(coef, order)

    def _compose(self, derivs) -> "Jet":
        """``g(self)`` given ``derivs[k] = g^(k)(value)`` for k = 0..order."""
        base = self.value
        nil = self - base
        nil.coef[..., 0] = 0.0
        out = self._lift(derivs[0])
        out.order = self.order
        power = None
        for k in range(1, self.order + 1):
            power = nil if power is None else power * nil
            out = out + power * (derivs[k] / factorial(k))
        return out

    def exp(self):
        e = np.exp(self.value)
        return self._compose([e] * (self.order + 1))

    def sin(self):
        s, c = np.sin(self.value), np.cos(self.value)
        cyc = [s, c, -s, -c]
        return self._compose([cyc[k % 4] for k in range(self.order + 1)])

    def cos(self):
        s, c = np.sin(self.value), np.cos(self.value)
        cyc = [c, -s, -c, s]
        return self._compose([cyc[k % 4] for k in range(self.order + 1)])

    def power(self, p: float):
        v = self.value
        derivs = []
        coef = 1.0
        for k in range(self.order + 1):
            derivs.append(coef * v ** (p - k))
            coef *= p - k
        return self._compose(derivs)

    def reciprocal(self):
        return self.power(-1.0)

    def sqrt(self):
        return self.power(0.5)


def dot(a: Jet, b: Jet, axis: int = -1) -> Jet:
    """Contract two vector-valued jets over a component axis of their batch shape."""
    prod = a * b
    ax = axis if axis >= 0 else axis - 1
    return prod._new(prod.coef.sum(axis=ax))


def stack(jets, axis: int = -1) -> Jet:
    ax = axis if axis >= 0 else axis - 1
    first = jets[0]
    return Jet(np.stack([j.coef for j in jets], axis=ax), first.nvar, first.space_order,
               min(j.order for j in jets))


def spacetime_coordinates(t, x1, x2, order: int):
    """Jets of the coordinate functions (t, x1, x2) about the given points."""
    t = np.asarray(t, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    shape = np.broadcast_shapes(t.shape, x1.shape, x2.shape)
    return tuple(Jet.variable(np.broadcast_to(v, shape), i, 3, order)
                 for i, v in enumerate((t, x1, x2)))


class SpacetimeJets:
    """Coordinate jets about a batch of base points, with the frame operators.

    Operators take and return :class:`Jet` objects whose batch shape starts
    with the base-point shape (a trailing target axis is allowed).  Each
    first-order operator lowers the trusted jet order by one.
    """

    def __init__(self, t, x1, x2, order: int):
        self.t, self.x1, self.x2 = spacetime_coordinates(t, x1, x2, order)
        self.order = order
        self.r = (self.x1 * self.x1 + self.x2 * self.x2).sqrt()
        self.inv_r = self.r.reciprocal()

    @classmethod
    def from_null(cls, coords, order: int):
        t, x1, x2 = coords.cartesian()
        return cls(t, x1, x2, order)

    def _b(self, coord: Jet, f: Jet) -> Jet:
        # broadcast a base-point jet against a field with trailing target axes
        extra = f.coef.ndim - coord.coef.ndim
        if extra <= 0:
            return coord
        return coord._new(coord.coef.reshape(coord.coef.shape[:-1] + (1,) * extra
                                             + coord.coef.shape[-1:]))

    @staticmethod
    def grad(f: Jet):
        return f.d(0), f.d(1), f.d(2)

    def omega(self, f: Jet) -> Jet:
        return self._b(self.x1, f) * f.d(2) - self._b(self.x2, f) * f.d(1)

    def radial(self, f: Jet) -> Jet:
        return (self._b(self.x1, f) * f.d(1) + self._b(self.x2, f) * f.d(2)) * self._b(self.inv_r, f)

    def L(self, f: Jet) -> Jet:
        return f.d(0) + self.radial(f)

    def Lb(self, f: Jet) -> Jet:
        return f.d(0) - self.radial(f)

    def slash(self, f: Jet) -> Jet:
        return self.omega(f) * self._b(self.inv_r, f)

    def lap_slash(self, f: Jet) -> Jet:
        ir = self._b(self.inv_r, f)
        return self.omega(self.omega(f)) * ir * ir

    @staticmethod
    def box(f: Jet) -> Jet:
        """The d'Alembertian with the sign d_t^2 - d_1^2 - d_2^2."""
        return f.d(0).d(0) - f.d(1).d(1) - f.d(2).d(2)

    @staticmethod
    def q0(f: Jet, g: Jet) -> Jet:
        """Null form contracted over the spacetime index only (componentwise)."""
        return -f.d(0) * g.d(0) + f.d(1) * g.d(1) + f.d(2) * g.d(2)

    @classmethod
    def q0_dot(cls, f: Jet, g: Jet) -> Jet:
        """Null form additionally summed over the trailing target axis."""
        return dot(f.d(0), g.d(0)) * -1.0 + dot(f.d(1), g.d(1)) + dot(f.d(2), g.d(2))
