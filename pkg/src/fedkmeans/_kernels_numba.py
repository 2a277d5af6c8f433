"""Numba-compiled kernel implementations (default backend).

Hot inner loops of clustering (distance scans, weighted accumulation)
and of aggregate decoding (polynomial root finding over small prime
fields). Mirrors the contracts of `_kernels_numpy`.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_F8 = np.float64
_I8 = np.int64


@njit(cache=True, nogil=True)
def assign_points(points, centers):
    n, d = points.shape
    k = centers.shape[0]
    labels = np.empty(n, dtype=_I8)
    sqd = np.empty(n, dtype=_F8)
    for i in range(n):
        best = 0
        bestv = np.inf
        for c in range(k):
            s = 0.0
            for m in range(d):
                t = points[i, m] - centers[c, m]
                s += t * t
            if s < bestv:
                bestv = s
                best = c
        labels[i] = best
        sqd[i] = bestv
    return labels, sqd


@njit(cache=True, nogil=True)
def update_min_sqdist(points, center, d2):
    n, d = points.shape
    for i in range(n):
        s = 0.0
        for m in range(d):
            t = points[i, m] - center[m]
            s += t * t
        if s < d2[i]:
            d2[i] = s


@njit(cache=True, nogil=True)
def cluster_sums(points, weights, labels, k):
    n, d = points.shape
    wsum = np.zeros((k, d), dtype=_F8)
    wtot = np.zeros(k, dtype=_F8)
    for i in range(n):
        c = labels[i]
        w = weights[i]
        wtot[c] += w
        for m in range(d):
            wsum[c, m] += w * points[i, m]
    return wsum, wtot


@njit(cache=True, nogil=True)
def poly_roots_scan(h, p, total_bins):
    """Roots of h (ascending coeffs mod p, p < 2^31) among 1..total_bins."""
    m = h.shape[0] - 1
    roots = np.empty(m, dtype=_I8)
    found = 0
    for x in range(1, total_bins + 1):
        v = h[m] % p
        for i in range(m - 1, -1, -1):
            v = (v * x + h[i]) % p
        if v == 0:
            if found == m:
                return roots[:0]  # more roots than degree: invalid input
            roots[found] = x
            found += 1
    return roots[:found]


# ---- small-field polynomial arithmetic (p < 2^31, int64 products safe) ----

@njit(cache=True, nogil=True)
def _modpow(base, exp, p):
    r = 1
    b = base % p
    e = exp
    while e > 0:
        if e & 1:
            r = r * b % p
        b = b * b % p
        e >>= 1
    return r


@njit(cache=True, nogil=True)
def _poly_norm_len(a, la):
    while la > 1 and a[la - 1] == 0:
        la -= 1
    return la


@njit(cache=True, nogil=True)
def _poly_mod_inplace(a, la, g, lg, p):
    """Reduce a (length la) mod monic g (length lg) in place; new length."""
    dg = lg - 1
    for i in range(la - 1, dg - 1, -1):
        c = a[i]
        if c != 0:
            a[i] = 0
            for t in range(dg):
                a[i - dg + t] = (a[i - dg + t] - c * g[t]) % p
    return _poly_norm_len(a, min(la, dg) if dg > 0 else 1)


@njit(cache=True, nogil=True)
def _poly_mulmod(a, la, b, lb, g, lg, p, out):
    """out = a*b mod monic g. Returns length of out."""
    lo = la + lb - 1
    for i in range(lo):
        out[i] = 0
    for i in range(la):
        ai = a[i]
        if ai != 0:
            for j in range(lb):
                out[i + j] = (out[i + j] + ai * b[j]) % p
    return _poly_mod_inplace(out, lo, g, lg, p)


@njit(cache=True, nogil=True)
def _poly_gcd(a, la, b, lb, p):
    """Monic gcd of a and b; returns (buffer, length)."""
    x = a[:la].copy()
    lx = _poly_norm_len(x, la)
    y = b[:lb].copy()
    ly = _poly_norm_len(y, lb)
    while not (ly == 1 and y[0] == 0):
        # x mod y
        inv = _modpow(y[ly - 1], p - 2, p)
        for i in range(lx - 1, ly - 2, -1):
            c = x[i]
            if c != 0:
                f = c * inv % p
                x[i] = 0
                for t in range(ly - 1):
                    x[i - (ly - 1) + t] = (x[i - (ly - 1) + t] - f * y[t]) % p
        lx = _poly_norm_len(x, min(lx, ly - 1) if ly > 1 else 1)
        tmp = x
        x = y
        y = tmp
        lt = lx
        lx = ly
        ly = lt
    if not (lx == 1 and x[0] == 0):
        inv = _modpow(x[lx - 1], p - 2, p)
        for i in range(lx):
            x[i] = x[i] * inv % p
    return x, lx


@njit(cache=True, nogil=True)
def poly_roots_cz(h, p, seed):
    """Distinct roots of h over F_p via equal-degree splitting.

    h: ascending int64 coefficients mod odd p < 2^31, squarefree with all
    roots in F_p (guaranteed for protocol-valid inputs). Returns an array
    of roots; fewer than deg(h) found means the input was invalid.
    """
    lh = _poly_norm_len(h, h.shape[0])
    deg = lh - 1
    roots = np.empty(deg, dtype=_I8)
    nroots = 0
    if deg == 0:
        return roots[:0]
    # Monic working copy on an explicit stack of factor polynomials.
    cap = lh
    stack = np.zeros((2 * deg + 4, cap), dtype=_I8)
    slen = np.zeros(2 * deg + 4, dtype=_I8)
    inv = _modpow(h[lh - 1], p - 2, p)
    for i in range(lh):
        stack[0, i] = h[i] * inv % p
    slen[0] = lh
    top = 1
    state = np.uint64(seed * 2 + 1)
    half = (p - 1) // 2
    work = np.empty(2 * cap, dtype=_I8)
    base = np.empty(cap, dtype=_I8)
    acc = np.empty(cap, dtype=_I8)
    tries = 0
    while top > 0:
        top -= 1
        lf = int(slen[top])
        f = stack[top, :lf].copy()
        while True:
            if lf == 1:
                break
            if lf == 2:
                roots[nroots] = (p - f[0]) % p
                nroots += 1
                break
            # roots may sit at x = 0 only for invalid inputs; split on gcd
            # with (x+c)^((p-1)/2) - 1 for random c.
            tries += 1
            if tries > 64 * deg + 256:
                return roots[:0]
            state = state * np.uint64(6364136223846793005) + np.uint64(1442695040888963407)
            c = int(state >> np.uint64(33)) % p
            # acc = (x + c)^half mod f
            for i in range(lf):
                acc[i] = 0
                base[i] = 0
            acc[0] = 1
            lacc = 1
            base[0] = c % p
            if lf > 1:
                base[1] = 1
            lbase = _poly_norm_len(base, min(2, lf))
            e = half
            while e > 0:
                if e & 1:
                    lacc = _poly_mulmod(acc, lacc, base, lbase, f, lf, p, work)
                    for i in range(lacc):
                        acc[i] = work[i]
                e >>= 1
                if e > 0:
                    lbase = _poly_mulmod(base, lbase, base, lbase, f, lf, p, work)
                    for i in range(lbase):
                        base[i] = work[i]
            # gcd(f, acc - 1)
            acc[0] = (acc[0] - 1) % p
            g1, lg1 = _poly_gcd(f, lf, acc, max(lacc, 1), p)
            if (lg1 == 1) or lg1 == lf:
                continue  # useless split, retry with fresh c
            # f2 = f / g1 by repeated synthetic division is wrong for
            # non-linear g1; do polynomial division instead.
            lf2 = lf - lg1 + 1
            quot = np.zeros(lf2, dtype=_I8)
            rem = f[:lf].copy()
            lrem = lf
            invl = _modpow(g1[lg1 - 1], p - 2, p)
            for i in range(lrem - 1, lg1 - 2, -1):
                cc = rem[i]
                if cc != 0:
                    q = cc * invl % p
                    quot[i - (lg1 - 1)] = q
                    for t in range(lg1):
                        rem[i - (lg1 - 1) + t] = (rem[i - (lg1 - 1) + t] - q * g1[t]) % p
            # push the smaller part, keep splitting the larger in place
            for i in range(lg1):
                stack[top, i] = g1[i]
            slen[top] = lg1
            top += 1
            for i in range(lf2):
                f[i] = quot[i]
            lf = _poly_norm_len(f, lf2)
    return roots[:nroots]


def warmup():
    """Trigger JIT compilation of every kernel on tiny inputs."""
    pts = np.array([[0.0, 0.0], [1.0, 1.0]])
    ctr = np.array([[0.0, 0.0]])
    assign_points(pts, ctr)
    d2 = np.full(2, np.inf)
    update_min_sqdist(pts, ctr[0], d2)
    cluster_sums(pts, np.ones(2), np.zeros(2, dtype=np.int64), 1)
    h = np.array([12, 1], dtype=np.int64)  # x - 1 mod 13
    poly_roots_scan(h, 13, 4)
    poly_roots_cz(np.array([2, 10, 1], dtype=np.int64), 13, 7)

