"""Polynomial machinery behind aggregate decoding.

Provides Berlekamp-Massey minimal-recurrence synthesis (generic over a
field), root finding of the connection polynomial over F_p, and the
structured solve of the power-sum (Vandermonde) system.

Polynomials are lists/arrays of coefficients in ascending order. Root
finding works on h(x) = x^deg(g) * g(1/x): since g(x) = prod(1 - j*x),
the roots of h are the occupied bin indices j themselves, which avoids a
field inversion per root.

Large moduli (p up to 2^126) use numpy int64 limb convolutions for
polynomial products: coefficients are split into 25-bit limbs, limb
columns are convolved pairwise, and carries are recombined in Python
ints. Accumulations stay below 2^63 for lengths up to 4096.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kernels
from .errors import DecodeFailureError
from .field import field_inverse_int

_LIMB_BITS = 25
_LIMB_MASK = (1 << _LIMB_BITS) - 1
_MAX_LIMB_LEN = 4096
_SCHOOLBOOK_CUTOFF = 64 * 64  # len(a)*len(b) below this: plain Python loops
_SMALL_PRIME_LIMIT = 1 << 31
_SCAN_WORK_LIMIT = 1 << 16


# ---------------------------------------------------------------------------
# Field-operation bundles for the generic Berlekamp-Massey.

class PrimeFieldOps:
    """Arithmetic on ints mod p."""

    def __init__(self, p: int):
        self.p = p
        self.zero = 0
        self.one = 1 % p

    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def mul(self, a, b):
        return a * b % self.p

    def div(self, a, b):
        return a * field_inverse_int(b, self.p) % self.p

    def is_zero(self, a):
        return a == 0


class RationalFieldOps:
    """Exact arithmetic on Fractions (the real-field decoder path)."""

    def __init__(self):
        self.zero = Fraction(0)
        self.one = Fraction(1)

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def div(self, a, b):
        return a / b

    def is_zero(self, a):
        return a == 0


def berlekamp_massey(seq: Sequence, ops) -> list:
    """Minimal connection polynomial c (ascending, c[0]=1) of ``seq``.

    Returns the shortest c with sum_k c[k] * seq[i-k] = 0 for all
    i >= deg(c). An all-zero sequence yields [1].
    """
    n = len(seq)
    c = [ops.one]
    b = [ops.one]
    length = 0
    m = 1
    last_d = ops.one
    for i in range(n):
        d = seq[i]
        for k in range(1, length + 1):
            d = ops.add(d, ops.mul(c[k], seq[i - k]))
        if ops.is_zero(d):
            m += 1
            continue
        coef = ops.div(d, last_d)
        if 2 * length <= i:
            old_c = list(c)
            if len(c) < len(b) + m:
                c = c + [ops.zero] * (len(b) + m - len(c))
            for k in range(len(b)):
                c[k + m] = ops.sub(c[k + m], ops.mul(coef, b[k]))
            length = i + 1 - length
            b = old_c
            last_d = d
            m = 1
        else:
            if len(c) < len(b) + m:
                c = c + [ops.zero] * (len(b) + m - len(c))
            for k in range(len(b)):
                c[k + m] = ops.sub(c[k + m], ops.mul(coef, b[k]))
            m += 1
    c = c[:length + 1]
    while len(c) > 1 and ops.is_zero(c[-1]):
        c.pop()
    return c


# ---------------------------------------------------------------------------
# Plain helpers over F_p (Python ints).

def poly_trim(a: list[int]) -> list[int]:
    n = len(a)
    while n > 1 and a[n - 1] == 0:
        n -= 1
    return a[:n]


def poly_eval(a: Sequence[int], x: int, p: int) -> int:
    v = 0
    for coef in reversed(a):
        v = (v * x + coef) % p
    return v


def poly_mul(a: list[int], b: list[int], p: int, trunc: int | None = None) -> list[int]:
    """Product of two coefficient lists mod p, optionally truncated."""
    if not a or not b:
        return [0]
    if len(a) * len(b) <= _SCHOOLBOOK_CUTOFF:
        out = [0] * (len(a) + len(b) - 1)
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    out[i + j] += ai * bj
        out = [v % p for v in out]
    else:
        out = _limb_mul(a, b, p)
    if trunc is not None:
        out = out[:trunc]
    return out


def _limb_mul(a: list[int], b: list[int], p: int) -> list[int]:
    if max(len(a), len(b)) > _MAX_LIMB_LEN:
        raise ValueError(f"polynomial length exceeds limb kernel limit {_MAX_LIMB_LEN}")
    nl = max(1, -(-p.bit_length() // _LIMB_BITS))
    la = _to_limbs(a, nl)
    lb = _to_limbs(b, nl)
    out_len = len(a) + len(b) - 1
    cols = [np.zeros(out_len, dtype=np.int64) for _ in range(2 * nl - 1)]
    for i in range(nl):
        ai = la[:, i]
        if not ai.any():
            continue
        for j in range(nl):
            bj = lb[:, j]
            if not bj.any():
                continue
            cols[i + j] += np.convolve(ai, bj)
    out = [0] * out_len
    for t, col in enumerate(cols):
        shift = t * _LIMB_BITS
        lst = col.tolist()
        for k in range(out_len):
            v = lst[k]
            if v:
                out[k] += v << shift
    return [v % p for v in out]


def _to_limbs(a: Sequence[int], nl: int) -> np.ndarray:
    out = np.empty((len(a), nl), dtype=np.int64)
    for k, c in enumerate(a):
        for i in range(nl):
            out[k, i] = c & _LIMB_MASK
            c >>= _LIMB_BITS
    return out


def poly_mod(f: list[int], g: list[int], p: int) -> list[int]:
    """Remainder of f mod g (schoolbook; g need not be monic)."""
    f = [v % p for v in f]
    g = poly_trim([v % p for v in g])
    dg = len(g) - 1
    if dg == 0:
        return [0]
    inv = field_inverse_int(g[-1], p)
    for i in range(len(f) - 1, dg - 1, -1):
        c = f[i]
        if c:
            q = c * inv % p
            f[i] = 0
            for t in range(dg):
                f[i - dg + t] = (f[i - dg + t] - q * g[t]) % p
    return poly_trim(f[:dg])


def poly_gcd(a: list[int], b: list[int], p: int) -> list[int]:
    """Monic gcd over F_p."""
    a = poly_trim([v % p for v in a])
    b = poly_trim([v % p for v in b])
    while b != [0]:
        a, b = b, poly_mod(a, b, p)
    if a != [0]:
        inv = field_inverse_int(a[-1], p)
        a = [v * inv % p for v in a]
    return a


def _poly_monic(a: list[int], p: int) -> list[int]:
    a = poly_trim([v % p for v in a])
    inv = field_inverse_int(a[-1], p)
    return [v * inv % p for v in a]


def newton_inverse(a: list[int], k: int, p: int) -> list[int]:
    """Series inverse of a mod x^k (requires a[0] invertible)."""
    inv = [field_inverse_int(a[0], p)]
    t = 1
    while t < k:
        t = min(2 * t, k)
        prod = poly_mul(a[:t], inv, p, trunc=t)
        corr = [(-v) % p for v in prod]
        corr[0] = (corr[0] + 2) % p
        inv = poly_mul(inv, corr, p, trunc=t)
    return inv


class _BigModCtx:
    """Fast repeated reduction mod a fixed monic g via a Newton inverse."""

    def __init__(self, g: list[int], p: int):
        self.p = p
        self.g = g
        self.dg = len(g) - 1
        self.rev_g = g[::-1]
        self.prec = max(self.dg, 1)
        self.inv_rev = newton_inverse(self.rev_g, self.prec, p) if self.dg > 0 else [0]

    def reduce(self, f: list[int]) -> list[int]:
        f = poly_trim(f)
        df = len(f) - 1
        if df < self.dg:
            return f
        k = df - self.dg + 1
        if k > self.prec:
            self.prec = k
            self.inv_rev = newton_inverse(self.rev_g, k, self.p)
        rev_f = f[::-1]
        q_rev = poly_mul(rev_f[:k], self.inv_rev[:k], self.p, trunc=k)
        q = q_rev[::-1]
        qg = poly_mul(q, self.g, self.p, trunc=self.dg)
        r = [(f[i] - (qg[i] if i < len(qg) else 0)) % self.p for i in range(self.dg)]
        return poly_trim(r) if r else [0]

    def mulmod(self, a: list[int], b: list[int]) -> list[int]:
        return self.reduce(poly_mul(a, b, self.p))


def _powmod_linear(c: int, e: int, ctx: _BigModCtx) -> list[int]:
    """(x + c)^e mod ctx.g."""
    acc = [1 % ctx.p]
    base = ctx.reduce([c % ctx.p, 1])
    while e > 0:
        if e & 1:
            acc = ctx.mulmod(acc, base)
        e >>= 1
        if e:
            base = ctx.mulmod(base, base)
    return acc


def _roots_cz_python(h: list[int], p: int, seed: int) -> list[int]:
    """Distinct roots of squarefree h over F_p (p odd), generic path."""
    h = _poly_monic(h, p)
    deg = len(h) - 1
    roots: list[int] = []
    rng = random.Random(seed)
    stack = [h]
    tries = 0
    while stack:
        f = stack.pop()
        while True:
            if len(f) == 1:
                break
            if len(f) == 2:
                roots.append((p - f[0]) % p)
                break
            ctx = _BigModCtx(f, p)
            split = None
            while split is None:
                tries += 1
                if tries > 64 * deg + 256:
                    return []
                c = rng.randrange(p)
                s = _powmod_linear(c, (p - 1) // 2, ctx)
                s = list(s)
                s[0] = (s[0] - 1) % p
                g1 = poly_gcd(f, s, p)
                if 1 <= len(g1) - 1 < len(f) - 1:
                    split = g1
            # f = split * quotient; recurse on both halves
            quot = _poly_divexact(f, split, p)
            stack.append(split)
            f = quot
    return roots


def _poly_divexact(f: list[int], g: list[int], p: int) -> list[int]:
    """Exact quotient f/g for monic g dividing f."""
    f = list(f)
    dg = len(g) - 1
    q = [0] * (len(f) - dg)
    for i in range(len(f) - 1, dg - 1, -1):
        c = f[i]
        if c:
            q[i - dg] = c
            f[i] = 0
            for t in range(dg):
                f[i - dg + t] = (f[i - dg + t] - c * g[t]) % p
    return q


def find_connection_roots(g: list[int], p: int, total_bins: int,
                          seed: int = 0x5EED) -> list[int]:
    """Occupied bin indices: all j in [1, total_bins] with g(1/j) = 0.

    Raises DecodeFailureError when fewer than deg(g) distinct in-range
    roots exist (non-protocol input).
    """
    g = poly_trim([v % p for v in g])
    deg = len(g) - 1
    if deg == 0:
        return []
    h = g[::-1]  # roots of h are the bin indices themselves
    roots: list[int]
    if p < _SMALL_PRIME_LIMIT and total_bins * (deg + 1) <= _SCAN_WORK_LIMIT:
        arr = kernels.poly_roots_scan(np.asarray(h, dtype=np.int64), p, total_bins)
        roots = [int(v) for v in arr]
    elif p < _SMALL_PRIME_LIMIT and kernels.HAS_CZ_KERNEL and p > 2:
        arr = kernels.poly_roots_cz(np.asarray(h, dtype=np.int64), p, seed)
        roots = [int(v) for v in arr]
    else:
        roots = _roots_cz_python(h, p, seed)
    roots = sorted(r for r in set(roots) if 1 <= r <= total_bins)
    if len(roots) != deg:
        raise DecodeFailureError(
            f"connection polynomial of degree {deg} has {len(roots)} "
            f"distinct roots in [1, {total_bins}]"
        )
    return roots


def solve_powersum_counts(roots: Sequence[int], syndromes: Sequence[int], p: int) -> list[int]:
    """Solve S_i = sum_k q_k * r_k^(i-1), i = 1..m, for the counts q_k.

    Structured O(m^2) solve: q_k is the dot product of S with the
    coefficients of the k-th Lagrange basis polynomial over the nodes r.
    """
    m = len(roots)
    if m == 0:
        return []
    if len(syndromes) < m:
        raise ValueError("need at least as many syndromes as roots")
    # master polynomial N(x) = prod (x - r_k)
    master = [1]
    for r in roots:
        nxt = [0] * (len(master) + 1)
        for i, c in enumerate(master):
            nxt[i + 1] = (nxt[i + 1] + c) % p
            nxt[i] = (nxt[i] - c * r) % p
        master = nxt
    counts = []
    s = [v % p for v in syndromes[:m]]
    for r in roots:
        # N_k = N / (x - r) by synthetic division (ascending output)
        nk = [0] * m
        carry = master[m]
        for i in range(m - 1, -1, -1):
            nk[i] = carry
            carry = (master[i] + carry * r) % p
        dk = poly_eval(nk, r, p)
        inv = field_inverse_int(dk, p)
        acc = 0
        for i in range(m):
            acc += nk[i] * s[i]
        counts.append(acc % p * inv % p)
    return counts


def gaussian_solve_mod_p(matrix: list[list[int]], rhs: list[int], p: int) -> list[int]:
    """Dense Gaussian elimination over F_p (small systems; test oracle)."""
    n = len(rhs)
    a = [[matrix[i][j] % p for j in range(n)] + [rhs[i] % p] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col]), None)
        if piv is None:
            raise ValueError("singular system")
        a[col], a[piv] = a[piv], a[col]
        inv = field_inverse_int(a[col][col], p)
        a[col] = [v * inv % p for v in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [(a[r][j] - f * a[col][j]) % p for j in range(n + 1)]
    return [a[i][n] for i in range(n)]
