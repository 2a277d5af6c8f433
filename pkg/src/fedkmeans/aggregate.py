"""Secure sparse multiset aggregation.

Clients hold sparse count vectors over the grid bins (at most K nonzero
entries each). Instead of shipping the length-B^d vector, a client sends
2KL masked power sums S_i = sum_j q_j * j^(i-1) + z_i (mod p). Masks
cancel across clients, so the server sees only the aggregate power sums,
from which it recovers the exact aggregate multiset: Berlekamp-Massey
gives the connection polynomial g(x) = prod(1 - j*x) over occupied bins,
root finding identifies the bins, and a structured Vandermonde solve
recovers the counts. Decoding is exact, never approximate.

A multiset is a plain dict {bin_index: count} with positive counts and
1-based indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import rng as rng_mod
from .errors import DecodeFailureError, ModulusTooSmallError, ProtocolError
from .polyring import (
    PrimeFieldOps,
    RationalFieldOps,
    berlekamp_massey,
    find_connection_roots,
    poly_trim,
    solve_powersum_counts,
)

Multiset = dict[int, int]

_WIRE_MAGIC = b"FKM1"
_WIRE_HEADER_LEN = 56
_U128_MAX = (1 << 128) - 1


def multiset_sum(parts: Iterable[Multiset]) -> Multiset:
    total: Multiset = {}
    for q in parts:
        for j, c in q.items():
            total[j] = total.get(j, 0) + c
    return {j: c for j, c in total.items() if c}


def multiset_total(q: Multiset) -> int:
    return sum(q.values())


def validate_multiset(q: Multiset, max_nonzeros: int | None = None,
                      total_bins: int | None = None) -> None:
    for j, c in q.items():
        if c < 1:
            raise ValueError(f"count for bin {j} must be positive, got {c}")
        if j < 1 or (total_bins is not None and j > total_bins):
            raise ValueError(f"bin index {j} outside [1, {total_bins}]")
    if max_nonzeros is not None and len(q) > max_nonzeros:
        raise ValueError(f"multiset has {len(q)} nonzero bins, cap is {max_nonzeros}")


# ---------------------------------------------------------------------------
# Masks: pairwise-cancelling uniform field elements.

def gen_masks(num_clients: int, length: int, modulus: int, master_seed: int,
              round_id: int = 0) -> list[list[int]]:
    """Additive mask shares summing to zero mod ``modulus``.

    Share construction: z^(l) = sum_{l'>l} PRG(l,l') - sum_{l'<l} PRG(l',l),
    where each pair stream is a disjoint counter block of one Philox
    generator keyed by (master_seed, round_id). Draws are rejection-sampled
    to be uniform on [0, modulus). A single client gets the all-zero share.
    """
    if num_clients < 1:
        raise ValueError("need at least one client")
    if num_clients == 1 or length == 0 or modulus == 1:
        return [[0] * length for _ in range(num_clients)]
    gen = rng_mod.derive_generator(master_seed, rng_mod.MASKS, round_id)
    acc = _ModAccumulator(num_clients, length, modulus)
    pairs = [(a, b) for a in range(num_clients) for b in range(a + 1, num_clients)]
    chunk_rows = max(1, (1 << 21) // max(length, 1))
    for start in range(0, len(pairs), chunk_rows):
        batch = pairs[start:start + chunk_rows]
        rows = _draw_uniform(gen, (len(batch), length), modulus)
        for t, (a, b) in enumerate(batch):
            acc.add(a, rows, t)
            acc.sub(b, rows, t)
    return acc.to_ints()


_PLANE_MASK = np.int64((1 << 32) - 1)


def _draw_uniform(gen: np.random.Generator, shape: tuple[int, int], modulus: int):
    """Uniform draws on [0, modulus) as little-endian 32-bit int64 planes.

    The top plane is drawn on [0, p_top] and only the boundary stripe
    top == p_top gets rejection-resampled, so the reject rate is at most
    1/(p_top + 1).
    """
    bits = modulus.bit_length()
    if bits <= 63:
        vals = gen.integers(0, modulus, size=shape, dtype=np.int64)
        planes = [vals & _PLANE_MASK, vals >> 32]
        return planes[: max(1, -(-bits // 32))]
    nplanes = -(-bits // 32)
    p_planes = [(modulus >> (32 * i)) & 0xFFFFFFFF for i in range(nplanes)]
    p_top = modulus >> (32 * (nplanes - 1))

    def draw(size):
        low = gen.integers(0, 1 << 32, size=(nplanes - 1,) + size, dtype=np.uint32)
        top = gen.integers(0, p_top + 1, size=size, dtype=np.int64)
        return low, top

    def boundary(low, top):
        # value >= modulus, decided lexicographically below the top plane
        geq = np.zeros(top.shape, dtype=bool)
        tie = np.ones(top.shape, dtype=bool)
        for i in range(nplanes - 2, -1, -1):
            geq |= tie & (low[i] > np.uint32(p_planes[i]))
            tie &= low[i] == np.uint32(p_planes[i])
        return (top == p_top) & (geq | tie)

    low, top = draw(shape)
    idx = np.nonzero(boundary(low, top))
    while idx[0].size:
        rl, rt = draw((idx[0].size,))
        for i in range(nplanes - 1):
            low[(i,) + idx] = rl[i]
        top[idx] = rt
        still = boundary(rl, rt)
        idx = tuple(a[still] for a in idx)
    return [low[i] for i in range(nplanes - 1)] + [top]


class _ModAccumulator:
    """Per-client +/- accumulation of drawn vectors, reduced mod p once.

    Sums are kept as carry-free 32-bit planes in int64 (headroom for 2^31
    added rows); positive and negative sides combine into Python ints
    only at the end.
    """

    def __init__(self, num_clients: int, length: int, modulus: int):
        self.p = modulus
        self.nplanes = max(1, -(-modulus.bit_length() // 32))
        self.pos = np.zeros((num_clients, self.nplanes, length), dtype=np.int64)
        self.neg = np.zeros((num_clients, self.nplanes, length), dtype=np.int64)

    def add(self, client: int, planes, t: int) -> None:
        for i in range(self.nplanes):
            self.pos[client, i] += planes[i][t]

    def sub(self, client: int, planes, t: int) -> None:
        for i in range(self.nplanes):
            self.neg[client, i] += planes[i][t]

    def to_ints(self) -> list[list[int]]:
        out = []
        length = self.pos.shape[2]
        for c in range(self.pos.shape[0]):
            pos_pl = [self.pos[c, i].tolist() for i in range(self.nplanes)]
            neg_pl = [self.neg[c, i].tolist() for i in range(self.nplanes)]
            row = []
            for e in range(length):
                pos = 0
                neg = 0
                for i in range(self.nplanes - 1, -1, -1):
                    pos = (pos << 32) + pos_pl[i][e]
                    neg = (neg << 32) + neg_pl[i][e]
                row.append((pos - neg) % self.p)
            out.append(row)
        return out


# ---------------------------------------------------------------------------
# Encoding and decoding.

def power_sums(q: Multiset, modulus: int, length: int) -> list[int]:
    """Unmasked power sums S_i = sum_j q_j * j^(i-1) mod modulus."""
    js = list(q.keys())
    cs = [q[j] for j in js]
    for j, c in zip(js, cs):
        if not 0 < j < modulus:
            raise ModulusTooSmallError(f"bin index {j} not in [1, {modulus})")
        if not 0 < c < modulus:
            raise ModulusTooSmallError(f"count {c} not in [1, {modulus})")
    out = []
    pw = [1] * len(js)
    for _ in range(length):
        s = 0
        for t in range(len(js)):
            s += cs[t] * pw[t]
            pw[t] = pw[t] * js[t] % modulus
        out.append(s % modulus)
    return out


def encode_client(q: Multiset, mask: Sequence[int], modulus: int,
                  length: int) -> list[int]:
    """Masked syndromes for one client; an empty multiset encodes to the mask."""
    if len(mask) != length:
        raise ProtocolError(f"mask length {len(mask)} != syndrome length {length}")
    sums = power_sums(q, modulus, length)
    return [(s + z) % modulus for s, z in zip(sums, mask)]


def aggregate_syndromes(vectors: Sequence[Sequence[int]], modulus: int) -> list[int]:
    """Component-wise modular sum of client syndrome vectors."""
    if not vectors:
        raise ProtocolError("no syndrome vectors to aggregate")
    length = len(vectors[0])
    for v in vectors:
        if len(v) != length:
            raise ProtocolError("syndrome vectors have mismatched lengths")
    out = [0] * length
    for v in vectors:
        for i in range(length):
            out[i] += v[i]
    return [v % modulus for v in out]


def connection_polynomial(syndromes: Sequence[int], modulus: int) -> list[int]:
    """Berlekamp-Massey: minimal g with g(0)=1 matching the syndrome recurrence."""
    return berlekamp_massey([s % modulus for s in syndromes], PrimeFieldOps(modulus))


def decode(syndromes: Sequence[int], modulus: int, total_bins: int,
           verify: bool = True) -> Multiset:
    """Recover the aggregate multiset from unmasked aggregate syndromes.

    Exact for protocol-valid inputs; raises DecodeFailureError for inputs
    that no valid aggregate could have produced. ``verify`` re-encodes the
    result and compares all syndromes, which catches corrupt inputs whose
    prefix happens to decode.
    """
    syn = [s % modulus for s in syndromes]
    if all(s == 0 for s in syn):
        return {}
    g = connection_polynomial(syn, modulus)
    degree = len(poly_trim(g)) - 1
    if degree == 0 or 2 * degree > len(syn):
        raise DecodeFailureError(
            f"recurrence of degree {degree} is inconsistent with "
            f"{len(syn)} syndromes"
        )
    roots = find_connection_roots(g, modulus, total_bins)
    counts = solve_powersum_counts(roots, syn, modulus)
    if any(c == 0 for c in counts):
        raise DecodeFailureError("solved count of zero contradicts root membership")
    q = {j: c for j, c in zip(roots, counts)}
    if verify and power_sums(q, modulus, len(syn)) != syn:
        raise DecodeFailureError("decoded multiset does not reproduce the syndromes")
    return q


# ---------------------------------------------------------------------------
# Deterministic big-integer decoder (no field arithmetic, no randomness).

def big_modulus_for(k_max: int, num_clients: int, total_bins: int, n_total: int) -> int:
    """A modulus so large no power sum can wrap: arithmetic stays integral."""
    kl = k_max * num_clients
    bound = max(
        kl * total_bins ** (2 * kl),
        max(n_total, 1) * total_bins ** (2 * kl - 1),
        n_total,
    )
    return bound + 1


def decode_big_deterministic(syndromes: Sequence[int], big_modulus: int,
                             total_bins: int) -> Multiset:
    """Deterministic decode over the integers.

    Assumes ``big_modulus`` exceeds every possible power sum, so the
    residues are the true integer power sums. Runs Berlekamp-Massey over
    the rationals, then finds the integer roots of
    h(x) = x^deg(g) * g(1/x) by exact bisection (derivative recursion for
    even degree), and solves the count system exactly.
    """
    syn = [s % big_modulus for s in syndromes]
    if len(syn) > 128:
        raise ValueError("big-integer decoder is gated to small syndrome counts")
    if all(s == 0 for s in syn):
        return {}
    g_frac = berlekamp_massey([Fraction(s) for s in syn], RationalFieldOps())
    if any(c.denominator != 1 for c in g_frac):
        raise DecodeFailureError("connection polynomial is not integral")
    g = [int(c) for c in g_frac]
    degree = len(g) - 1
    if degree == 0 or 2 * degree > len(syn):
        raise DecodeFailureError("degenerate recurrence from big-integer syndromes")
    h = g[::-1]  # monic (g[0] = 1); roots are the occupied bins
    roots = _integer_roots(h, total_bins)
    counts = _solve_counts_exact(roots, syn)
    q = {j: c for j, c in zip(roots, counts)}
    if _integer_power_sums(q, len(syn)) != syn:
        raise DecodeFailureError("big-integer decode does not reproduce the syndromes")
    return q


def _integer_power_sums(q: Multiset, length: int) -> list[int]:
    out = []
    pw = {j: 1 for j in q}
    for _ in range(length):
        out.append(sum(c * pw[j] for j, c in q.items()))
        for j in q:
            pw[j] *= j
    return out


def _poly_eval_int(poly: Sequence[int], x: int) -> int:
    v = 0
    for c in reversed(poly):
        v = v * x + c
    return v


def _bisect_integer_root(poly: Sequence[int], lo: int, hi: int) -> int:
    """Integer root in [lo, hi] given a sign change; exact arithmetic."""
    va = _poly_eval_int(poly, lo)
    vb = _poly_eval_int(poly, hi)
    if va == 0:
        return lo
    if vb == 0:
        return hi
    if (va > 0) == (vb > 0):
        raise DecodeFailureError("bisection bracket failure")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        vm = _poly_eval_int(poly, mid)
        if vm == 0:
            return mid
        if (vm > 0) == (va > 0):
            lo, va = mid, vm
        else:
            hi, vb = mid, vm
    raise DecodeFailureError("no integer root in bracket")


def _integer_roots(h: list[int], total_bins: int) -> list[int]:
    """All roots of monic integer-rooted h, via bisection on [0, total_bins+1]."""
    roots: list[int] = []
    work = list(h)
    hi = total_bins + 1
    while len(work) > 2:
        degree = len(work) - 1
        if degree % 2 == 1:
            r = _bisect_integer_root(work, 0, hi)
        else:
            # Even degree: h > 0 at both ends. h' runs - to + across the
            # range; a - to + crossing of h' is a local minimum of h,
            # which for a real-rooted h lies in a negative stretch.
            hp = [i * work[i] for i in range(1, len(work))]
            t = _local_min_point(hp, work, hi)
            vt = _poly_eval_int(work, t)
            r = t if vt == 0 else _bisect_integer_root(work, 0, t)
        roots.append(r)
        work = _divide_out_root(work, r)
    if len(work) == 2:
        roots.append(-work[0] // work[1])
    roots = sorted(roots)
    if len(set(roots)) != len(roots) or any(not 1 <= r <= total_bins for r in roots):
        raise DecodeFailureError("integer roots outside the bin range or repeated")
    return roots


def _local_min_point(hp: list[int], h: list[int], hi: int) -> int:
    """Integer point t with h(t) <= 0, located via a - to + crossing of h'."""
    lo = 0
    va = _poly_eval_int(hp, lo)
    vb = _poly_eval_int(hp, hi)
    if not (va < 0 < vb):
        raise DecodeFailureError("bisection bracket failure")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        vm = _poly_eval_int(hp, mid)
        if vm == 0:
            if _poly_eval_int(h, mid) <= 0:
                return mid
            # exact critical point with h > 0 is a local maximum; a - to +
            # crossing of h' remains to its left
            hi = mid
            continue
        if vm < 0:
            lo = mid
        else:
            hi = mid
    for t in (lo, hi):
        if _poly_eval_int(h, t) <= 0:
            return t
    raise DecodeFailureError("bisection bracket failure")


def _divide_out_root(poly: list[int], root: int) -> list[int]:
    """Exact synthetic division of a monic integer polynomial by (x - root)."""
    out = [0] * (len(poly) - 1)
    carry = poly[-1]
    for i in range(len(poly) - 2, -1, -1):
        out[i] = carry
        carry = poly[i] + carry * root
    if carry != 0:
        raise DecodeFailureError(f"{root} is not an exact root")
    return out


def _solve_counts_exact(roots: Sequence[int], syndromes: Sequence[int]) -> list[int]:
    """Exact rational solve of the power-sum system; counts must be positive ints."""
    m = len(roots)
    master = [Fraction(1)]
    for r in roots:
        nxt = [Fraction(0)] * (len(master) + 1)
        for i, c in enumerate(master):
            nxt[i + 1] += c
            nxt[i] -= c * r
        master = nxt
    counts = []
    for r in roots:
        nk = [Fraction(0)] * m
        carry = master[m]
        for i in range(m - 1, -1, -1):
            nk[i] = carry
            carry = master[i] + carry * r
        dk = sum(nk[i] * r ** i for i in range(m))
        acc = sum(nk[i] * syndromes[i] for i in range(m))
        val = acc / dk
        if val.denominator != 1 or val <= 0:
            raise DecodeFailureError("counts are not positive integers")
        counts.append(int(val))
    return counts


# ---------------------------------------------------------------------------
# Wire format.

@dataclass(frozen=True)
class WireHeader:
    client_id: int
    k_max: int
    num_clients: int
    syndrome_count: int
    elem_bits: int
    modulus: int
    total_bins: int


def encode_message(client_id: int, k_max: int, num_clients: int, modulus: int,
                   total_bins: int, syndromes: Sequence[int]) -> bytes:
    """Serialize one client message: fixed header + bit-packed field elements.

    Elements are packed LSB-first at exactly ceil(log2 p) bits each, so the
    payload is ceil(2KL * elem_bits / 8) bytes.
    """
    if modulus > _U128_MAX or total_bins > _U128_MAX:
        raise ProtocolError("modulus/total_bins exceed the 128-bit wire fields")
    bits = (modulus - 1).bit_length()
    header = (
        _WIRE_MAGIC
        + int(client_id).to_bytes(4, "little")
        + int(k_max).to_bytes(4, "little")
        + int(num_clients).to_bytes(4, "little")
        + len(syndromes).to_bytes(4, "little")
        + bits.to_bytes(2, "little")
        + b"\x00\x00"
        + int(modulus).to_bytes(16, "little")
        + int(total_bins).to_bytes(16, "little")
    )
    assert len(header) == _WIRE_HEADER_LEN
    # LSB-first bit stream, emitted little-endian byte by byte
    buf = bytearray()
    acc = 0
    acc_bits = 0
    for v in syndromes:
        if not 0 <= v < modulus:
            raise ProtocolError(f"syndrome {v} outside the field")
        acc |= int(v) << acc_bits
        acc_bits += bits
        while acc_bits >= 8:
            buf.append(acc & 0xFF)
            acc >>= 8
            acc_bits -= 8
    if acc_bits:
        buf.append(acc)
    want = payload_bytes(len(syndromes), modulus)
    while len(buf) < want:
        buf.append(0)
    return header + bytes(buf)


def decode_message(data: bytes) -> tuple[WireHeader, list[int]]:
    header = _parse_header(data)
    bits = header.elem_bits
    mask = (1 << bits) - 1
    syn = []
    acc = 0
    acc_bits = 0
    pos = _WIRE_HEADER_LEN
    while len(syn) < header.syndrome_count:
        while acc_bits < bits:
            acc |= data[pos] << acc_bits
            acc_bits += 8
            pos += 1
        syn.append(acc & mask)
        acc >>= bits
        acc_bits -= bits
    if any(v >= header.modulus for v in syn):
        raise ProtocolError("syndrome outside the field")
    return header, syn


def payload_bytes(count: int, modulus: int) -> int:
    return math.ceil(count * (modulus - 1).bit_length() / 8)


def message_bytes(count: int, modulus: int) -> int:
    """Total serialized size: fixed header plus bit-packed payload."""
    return _WIRE_HEADER_LEN + payload_bytes(count, modulus)


def _parse_header(data: bytes) -> WireHeader:
    if len(data) < _WIRE_HEADER_LEN or data[:4] != _WIRE_MAGIC:
        raise ProtocolError("malformed message header")
    modulus = int.from_bytes(data[24:40], "little")
    header = WireHeader(
        client_id=int.from_bytes(data[4:8], "little"),
        k_max=int.from_bytes(data[8:12], "little"),
        num_clients=int.from_bytes(data[12:16], "little"),
        syndrome_count=int.from_bytes(data[16:20], "little"),
        elem_bits=int.from_bytes(data[20:22], "little"),
        modulus=modulus,
        total_bins=int.from_bytes(data[40:56], "little"),
    )
    if header.elem_bits != (modulus - 1).bit_length():
        raise ProtocolError("element width inconsistent with modulus")
    expect = _WIRE_HEADER_LEN + payload_bytes(header.syndrome_count, modulus)
    if len(data) != expect:
        raise ProtocolError(f"message length {len(data)} != expected {expect}")
    return header


def _payload_planes(data: bytes, header: WireHeader) -> np.ndarray:
    """Bit-unpack the payload into 32-bit planes, shape (nplanes, count)."""
    bits = header.elem_bits
    count = header.syndrome_count
    nplanes = max(1, -(-bits // 32))
    payload = np.frombuffer(data, dtype=np.uint8, offset=_WIRE_HEADER_LEN)
    buf = np.zeros(payload.shape[0] + 8, dtype=np.int64)
    buf[:payload.shape[0]] = payload
    offsets = np.arange(count, dtype=np.int64) * bits
    out = np.empty((nplanes, count), dtype=np.int64)
    for t in range(nplanes):
        bo = offsets + 32 * t
        byte0 = bo >> 3
        shift = bo & 7
        word = np.zeros(count, dtype=np.int64)
        for b in range(6):  # 48 bits cover a shifted 32-bit window
            word |= buf[byte0 + b] << (8 * b)
        width = min(32, bits - 32 * t)
        out[t] = (word >> shift) & ((1 << width) - 1)
    return out


def aggregate_messages(messages: Sequence[bytes], modulus: int,
                       syndrome_count: int, num_clients: int) -> list[int]:
    """Sum client wire messages component-wise mod p (vectorized unpack)."""
    if not messages:
        raise ProtocolError("no messages to aggregate")
    acc = None
    for msg in messages:
        header = _parse_header(msg)
        if (header.modulus != modulus or header.syndrome_count != syndrome_count
                or header.num_clients != num_clients):
            raise ProtocolError("client message disagrees with protocol parameters")
        planes = _payload_planes(msg, header)
        acc = planes if acc is None else acc + planes
    nplanes = acc.shape[0]
    cols = [acc[t].tolist() for t in range(nplanes)]
    out = []
    for e in range(syndrome_count):
        v = 0
        for t in range(nplanes - 1, -1, -1):
            v = (v << 32) + cols[t][e]
        out.append(v % modulus)
    return out
