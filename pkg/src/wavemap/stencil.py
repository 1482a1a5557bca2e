"""Numba kernels for the tiled leapfrog stepper and point sampling.

Storage: the n x n grid is cut into square tiles of side B.  ``slot_of[ti, tj]``
maps a tile to its storage slot, VACANT (-1, the constant map) or RELEASED
(-2, no longer available).  ``phi`` tiles carry a ghost frame of width g (the
stencil radius); ``pi`` and ``acc`` tiles hold interior points only.
Per-slot reductions are written to arrays and reduced serially afterwards, so
results do not depend on the thread count.
"""

from __future__ import annotations

import numba as nb
import numpy as np

VACANT = -1
RELEASED = -2


@nb.njit(cache=True, inline="always")
def _neighbor(ti, tj, di, dj, nt, periodic):
    ni, nj = ti + di, tj + dj
    if periodic:
        return ni % nt, nj % nt, True
    if ni < 0 or nj < 0 or ni >= nt or nj >= nt:
        return ni, nj, False
    return ni, nj, True


@nb.njit(cache=True, parallel=True)
def fill_ghosts(phi, slot_of, tile_ij, active, B, g, periodic, bad):
    """Copy neighbour strips into the ghost frame of every active tile."""
    nt = slot_of.shape[0]
    for a in nb.prange(active.size):
        s = active[a]
        ti, tj = tile_ij[s, 0], tile_ij[s, 1]
        for side in range(4):
            di = -1 if side == 0 else (1 if side == 1 else 0)
            dj = -1 if side == 2 else (1 if side == 3 else 0)
            ni, nj, inside = _neighbor(ti, tj, di, dj, nt, periodic)
            ns = slot_of[ni, nj] if inside else VACANT
            if ns == RELEASED:
                bad[a] = 1
            for k in range(g):
                for m in range(B):
                    if di != 0:
                        gi = (g + B + k) if di > 0 else k
                        si = (g + k) if di > 0 else (B + k)
                        gj = g + m
                        sj = g + m
                    else:
                        gj = (g + B + k) if dj > 0 else k
                        sj = (g + k) if dj > 0 else (B + k)
                        gi = g + m
                        si = g + m
                    for c in range(3):
                        if ns >= 0:
                            phi[s, gi, gj, c] = phi[ns, si, sj, c]
                        else:
                            phi[s, gi, gj, c] = 1.0 if c == 2 else 0.0


@nb.njit(cache=True, parallel=True)
def drift(phi, pi, acc, active, B, g, dt, repair):
    """Half kick, full drift, renormalisation; pi keeps the half-step value.

    The half kick uses the tangential part of acc, v = pi + dt/2 tan(acc), and
    the centripetal term of v itself, pi_half = v - dt/2 |v|^2 phi.  Then
    |phi + dt pi_half|^2 = 1 + dt^4 |v|^4 / 4, so ``repair`` (the largest
    ||phi| - 1| undone by renormalisation) flags only steps where the map
    turns by a large angle.
    """
    for a in nb.prange(active.size):
        s = active[a]
        worst = 0.0
        for i in range(B):
            for j in range(B):
                fa = 0.0
                for c in range(3):
                    fa += phi[s, i + g, j + g, c] * acc[s, i, j, c]
                vv = 0.0
                for c in range(3):
                    v = pi[s, i, j, c] + 0.5 * dt * (acc[s, i, j, c] - fa * phi[s, i + g, j + g, c])
                    pi[s, i, j, c] = v
                    vv += v * v
                nn = 0.0
                for c in range(3):
                    f = phi[s, i + g, j + g, c]
                    ph = pi[s, i, j, c] - 0.5 * dt * vv * f
                    pi[s, i, j, c] = ph
                    f = f + dt * ph
                    phi[s, i + g, j + g, c] = f
                    nn += f * f
                nn = np.sqrt(nn)
                d = abs(nn - 1.0)
                if not (d <= worst):
                    worst = d if d == d else np.inf
                for c in range(3):
                    phi[s, i + g, j + g, c] /= nn
        repair[a] = worst


@nb.njit(cache=True, parallel=True)
def kick(phi, pi, acc, active, B, g, h, dt, c2, c1, do_kick, maxgrad, energy, finite):
    """Stencil pass: fresh acceleration, second half kick, tangential projection.

    acc = Lap phi + phi |grad phi|^2.  With ``do_kick`` False only acc is
    refreshed (used at start-up).  Energy density 1/2(|pi|^2 + |grad phi|^2) is
    summed per tile (interior points, weight h^2 applied by the caller).
    """
    R = c2.size - 1
    ih2 = 1.0 / (h * h)
    ih = 1.0 / h
    for a in nb.prange(active.size):
        s = active[a]
        gmax = 0.0
        en = 0.0
        ok = 1
        for i in range(B):
            ii = i + g
            for j in range(B):
                jj = j + g
                lap0 = 0.0
                lap1 = 0.0
                lap2 = 0.0
                grad2 = 0.0
                for c in range(3):
                    centre = phi[s, ii, jj, c]
                    lap = 2.0 * c2[0] * centre
                    d1 = 0.0
                    d2 = 0.0
                    for m in range(1, R + 1):
                        lap += c2[m] * (phi[s, ii + m, jj, c] + phi[s, ii - m, jj, c]
                                        + phi[s, ii, jj + m, c] + phi[s, ii, jj - m, c])
                        d1 += c1[m] * (phi[s, ii + m, jj, c] - phi[s, ii - m, jj, c])
                        d2 += c1[m] * (phi[s, ii, jj + m, c] - phi[s, ii, jj - m, c])
                    d1 *= ih
                    d2 *= ih
                    grad2 += d1 * d1 + d2 * d2
                    if c == 0:
                        lap0 = lap * ih2
                    elif c == 1:
                        lap1 = lap * ih2
                    else:
                        lap2 = lap * ih2
                f0 = phi[s, ii, jj, 0]
                f1 = phi[s, ii, jj, 1]
                f2 = phi[s, ii, jj, 2]
                a0 = lap0 + f0 * grad2
                a1 = lap1 + f1 * grad2
                a2 = lap2 + f2 * grad2
                acc[s, i, j, 0] = a0
                acc[s, i, j, 1] = a1
                acc[s, i, j, 2] = a2
                p0 = pi[s, i, j, 0]
                p1 = pi[s, i, j, 1]
                p2 = pi[s, i, j, 2]
                if do_kick:
                    pp = p0 * p0 + p1 * p1 + p2 * p2
                    p0 += 0.5 * dt * (a0 - f0 * pp)
                    p1 += 0.5 * dt * (a1 - f1 * pp)
                    p2 += 0.5 * dt * (a2 - f2 * pp)
                    dot = f0 * p0 + f1 * p1 + f2 * p2
                    p0 -= dot * f0
                    p1 -= dot * f1
                    p2 -= dot * f2
                    pi[s, i, j, 0] = p0
                    pi[s, i, j, 1] = p1
                    pi[s, i, j, 2] = p2
                if not (grad2 <= gmax):
                    if grad2 == grad2:
                        gmax = grad2
                    else:
                        ok = 0
                en += 0.5 * (p0 * p0 + p1 * p1 + p2 * p2 + grad2)
        maxgrad[a] = np.sqrt(gmax)
        energy[a] = en
        finite[a] = ok if en == en and abs(en) < np.inf else 0


@nb.njit(cache=True, parallel=True)
def boundary_amplitude(phi, pi, active, tile_ij, B, g, nt, width, out):
    """Max of |phi - e3| + |pi| over points within ``width`` of the outer edge."""
    n = nt * B
    for a in nb.prange(active.size):
        s = active[a]
        ti, tj = tile_ij[s, 0], tile_ij[s, 1]
        worst = 0.0
        for i in range(B):
            gi = ti * B + i
            for j in range(B):
                gj = tj * B + j
                if gi < width or gj < width or gi >= n - width or gj >= n - width:
                    v = (abs(phi[s, i + g, j + g, 0]) + abs(phi[s, i + g, j + g, 1])
                         + abs(phi[s, i + g, j + g, 2] - 1.0)
                         + abs(pi[s, i, j, 0]) + abs(pi[s, i, j, 1]) + abs(pi[s, i, j, 2]))
                    if v > worst:
                        worst = v
        out[a] = worst


@nb.njit(cache=True)
def _value(phi, pi, slot_of, B, g, nt, periodic, gi, gj, c, which):
    n = nt * B
    if periodic:
        gi %= n
        gj %= n
    elif gi < 0 or gj < 0 or gi >= n or gj >= n:
        if which == 0:
            return 1.0 if c == 2 else 0.0
        return 0.0
    ti = gi // B
    tj = gj // B
    s = slot_of[ti, tj]
    if s == RELEASED:
        return np.nan
    if s < 0:
        if which == 0:
            return 1.0 if c == 2 else 0.0
        return 0.0
    if which == 0:
        return phi[s, gi - ti * B + g, gj - tj * B + g, c]
    return pi[s, gi - ti * B, gj - tj * B, c]


@nb.njit(cache=True, inline="always")
def _lagrange(x, w, dw, ddw):
    """Lagrange weights at x on nodes 0..w.size-1, with first and second derivatives."""
    npts = w.shape[0]
    for j in range(npts):
        wj = 1.0
        dj = 0.0
        ddj = 0.0
        den = 1.0
        for m in range(npts):
            if m != j:
                den *= (j - m)
        for m in range(npts):
            if m == j:
                continue
            wj *= (x - m)
        # product rule over the npts - 1 linear factors
        for m in range(npts):
            if m == j:
                continue
            t = 1.0
            for q in range(npts):
                if q != j and q != m:
                    t *= (x - q)
            dj += t
            for q in range(npts):
                if q == j or q == m:
                    continue
                t2 = 1.0
                for p in range(npts):
                    if p != j and p != m and p != q:
                        t2 *= (x - p)
                ddj += t2
        w[j] = wj / den
        dw[j] = dj / den
        ddw[j] = ddj / den


@nb.njit(cache=True, parallel=True)
def sample_points(phi, pi, acc, slot_of, B, g, nt, periodic, L_box, h, x1, x2, npts, out):
    """Interpolate at arbitrary points with npts-point (even) Lagrange stencils per axis.

    out[p, q, c] with q: 0 phi, 1 d1 phi, 2 d2 phi, 3 d11 phi, 4 d12 phi,
    5 d22 phi, 6 pi, 7 d1 pi, 8 d2 pi, 9 acc (the discrete acceleration).
    """
    for p in nb.prange(x1.size):
        f1 = (x1[p] + L_box) / h - 0.5
        f2 = (x2[p] + L_box) / h - 0.5
        i0 = int(np.floor(f1)) - npts // 2 + 1
        j0 = int(np.floor(f2)) - npts // 2 + 1
        wa = np.empty(npts)
        da = np.empty(npts)
        dda = np.empty(npts)
        wb = np.empty(npts)
        db = np.empty(npts)
        ddb = np.empty(npts)
        _lagrange(f1 - i0, wa, da, dda)
        _lagrange(f2 - j0, wb, db, ddb)
        for q in range(10):
            for c in range(3):
                out[p, q, c] = 0.0
        for a in range(npts):
            for b in range(npts):
                for c in range(3):
                    v = _value(phi, pi, slot_of, B, g, nt, periodic, i0 + a, j0 + b, c, 0)
                    out[p, 0, c] += wa[a] * wb[b] * v
                    out[p, 1, c] += da[a] * wb[b] * v / h
                    out[p, 2, c] += wa[a] * db[b] * v / h
                    out[p, 3, c] += dda[a] * wb[b] * v / (h * h)
                    out[p, 4, c] += da[a] * db[b] * v / (h * h)
                    out[p, 5, c] += wa[a] * ddb[b] * v / (h * h)
                    w = _value(phi, pi, slot_of, B, g, nt, periodic, i0 + a, j0 + b, c, 1)
                    out[p, 6, c] += wa[a] * wb[b] * w
                    out[p, 7, c] += da[a] * wb[b] * w / h
                    out[p, 8, c] += wa[a] * db[b] * w / h
                    z = _value(phi, acc, slot_of, B, g, nt, periodic, i0 + a, j0 + b, c, 1)
                    out[p, 9, c] += wa[a] * wb[b] * z


@nb.njit(cache=True)
def gather_patch(phi, pi, slot_of, B, g, nt, periodic, ci, cj, half, out_phi, out_pi):
    """Raw grid values in the (2 half + 1)^2 patch centred on grid point (ci, cj)."""
    for p in range(ci.size):
        for a in range(2 * half + 1):
            for b in range(2 * half + 1):
                for c in range(3):
                    out_phi[p, a, b, c] = _value(phi, pi, slot_of, B, g, nt, periodic,
                                                 ci[p] - half + a, cj[p] - half + b, c, 0)
                    out_pi[p, a, b, c] = _value(phi, pi, slot_of, B, g, nt, periodic,
                                                ci[p] - half + a, cj[p] - half + b, c, 1)


@nb.njit(cache=True)
def band_tiles(nt, B, h, L_box, r_lo, r_hi):
    """Mask of tiles whose radial extent meets [r_lo, r_hi]."""
    mask = np.zeros((nt, nt), dtype=np.bool_)
    side = B * h
    for ti in range(nt):
        a0 = -L_box + ti * side
        a1 = a0 + side
        for tj in range(nt):
            b0 = -L_box + tj * side
            b1 = b0 + side
            nx = 0.0 if a0 <= 0.0 <= a1 else min(abs(a0), abs(a1))
            ny = 0.0 if b0 <= 0.0 <= b1 else min(abs(b0), abs(b1))
            fx = max(abs(a0), abs(a1))
            fy = max(abs(b0), abs(b1))
            rmin = np.sqrt(nx * nx + ny * ny)
            rmax = np.sqrt(fx * fx + fy * fy)
            mask[ti, tj] = rmax >= r_lo and rmin <= r_hi
    return mask
