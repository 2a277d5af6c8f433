import random

import numpy as np
import pytest

from fedkmeans import kernels
from fedkmeans.errors import DecodeFailureError
from fedkmeans.field import select_prime
from fedkmeans.polyring import (
    PrimeFieldOps,
    _BigModCtx,
    _roots_cz_python,
    berlekamp_massey,
    find_connection_roots,
    gaussian_solve_mod_p,
    newton_inverse,
    poly_gcd,
    poly_mod,
    poly_mul,
    poly_trim,
    solve_powersum_counts,
)

P13 = PrimeFieldOps(13)


def power_sum_sequence(q: dict[int, int], p: int, length: int) -> list[int]:
    pw = {j: 1 for j in q}
    out = []
    for _ in range(length):
        s = 0
        for j, c in q.items():
            s += c * pw[j]
            pw[j] = pw[j] * j % p
        out.append(s % p)
    return out


def connection_poly_oracle(indices, p):
    """Expand prod(1 - j*x) mod p by repeated multiplication."""
    g = [1]
    for j in indices:
        g = poly_mul(g, [1, (-j) % p], p)
    return g


class TestBerlekampMassey:
    def test_zero_sequence(self):
        assert berlekamp_massey([0] * 8, P13) == [1]

    def test_single_root(self):
        s = [pow(5, i, 13) for i in range(4)]
        assert s == [1, 5, 12, 8]
        assert poly_trim(berlekamp_massey(s, P13)) == [1, 8]  # 1 - 5x

    def test_worked_instance(self):
        q = {1: 3, 2: 4, 3: 2, 4: 3}
        s = power_sum_sequence(q, 13, 8)
        assert s[:4] == [12, 3, 7, 8]
        g = berlekamp_massey(s, P13)
        assert g == connection_poly_oracle([1, 2, 3, 4], 13) == [1, 3, 9, 2, 11]

    def test_matches_product_oracle_on_randoms(self):
        rnd = random.Random(11)
        for _ in range(200):
            total_bins = rnd.randint(2, 5000)
            p = select_prime(total_bins + rnd.randint(1, 50)).p
            m = rnd.randint(0, 6)
            idx = sorted(set(rnd.randrange(1, total_bins + 1) for _ in range(m)))
            q = {j: rnd.randint(1, min(p - 1, 9)) for j in idx}
            s = power_sum_sequence(q, p, 2 * max(len(idx), 1) + 2)
            g = berlekamp_massey(s, PrimeFieldOps(p))
            assert poly_trim(g) == poly_trim(connection_poly_oracle(idx, p))


class TestRootFinding:
    def test_trivial_and_linear(self):
        assert find_connection_roots([1], 13, 4) == []
        assert find_connection_roots([1, 8], 13, 10) == [5]   # 1 - 5x

    def test_worked_instance(self):
        g = connection_poly_oracle([1, 2, 3, 4], 13)
        assert find_connection_roots(g, 13, 4) == [1, 2, 3, 4]

    def test_out_of_range_root_is_decode_failure(self):
        g = connection_poly_oracle([5], 13)
        with pytest.raises(DecodeFailureError):
            find_connection_roots(g, 13, 4)  # root 5 > total_bins

    def test_scan_cz_and_python_paths_agree(self):
        rnd = random.Random(3)
        for _ in range(150):
            total_bins = rnd.randint(4, 10**6)
            p = select_prime(total_bins + 1).p
            m = rnd.randint(1, 8)
            idx = sorted(set(rnd.randrange(1, total_bins + 1) for _ in range(m)))
            g = connection_poly_oracle(idx, p)
            h = np.asarray(g[::-1], dtype=np.int64)
            got = find_connection_roots(g, p, total_bins)
            assert got == idx
            if kernels.HAS_CZ_KERNEL and p > 2:
                assert sorted(int(v) for v in kernels.poly_roots_cz(h, p, 5)) == idx
            assert sorted(_roots_cz_python(g[::-1], p, 7)) == idx
            if total_bins * (len(g)) <= 1 << 18:
                assert sorted(int(v) for v in
                              kernels.poly_roots_scan(h, p, total_bins)) == idx

    def test_large_field_path(self):
        rnd = random.Random(9)
        total_bins = 174 ** 10
        p = select_prime(max(total_bins, 30000) + 1).p
        assert p.bit_length() > 63
        idx = sorted(set(rnd.randrange(1, total_bins + 1) for _ in range(40)))
        g = connection_poly_oracle(idx, p)
        assert find_connection_roots(g, p, total_bins) == idx


class TestPolyArithmetic:
    def test_limb_mul_matches_schoolbook(self):
        rnd = random.Random(5)
        for bits in (7, 24, 31, 50, 63, 75, 100, 126):
            p = select_prime((1 << bits) - rnd.randint(0, 1 << (bits // 2))).p
            for _ in range(8):
                # lengths straddle the schoolbook/limb cutoff
                la = rnd.randint(1, 90)
                lb = rnd.randint(1, 90)
                a = [rnd.randrange(p) for _ in range(la)]
                b = [rnd.randrange(p) for _ in range(lb)]
                naive = [0] * (la + lb - 1)
                for i, ai in enumerate(a):
                    for j, bj in enumerate(b):
                        naive[i + j] = (naive[i + j] + ai * bj) % p
                assert poly_mul(a, b, p) == naive
        p = select_prime(1 << 75).p
        a = [rnd.randrange(p) for _ in range(300)]
        b = [rnd.randrange(p) for _ in range(280)]
        naive = [0] * (len(a) + len(b) - 1)
        for i, ai in enumerate(a):
            for j, bj in enumerate(b):
                naive[i + j] = (naive[i + j] + ai * bj) % p
        assert poly_mul(a, b, p) == naive

    def test_newton_inverse_and_reduce(self):
        rnd = random.Random(6)
        p = select_prime(10**9).p
        for _ in range(30):
            dg = rnd.randint(1, 20)
            g = [rnd.randrange(p) for _ in range(dg)] + [1]  # monic
            ctx = _BigModCtx(g, p)
            f = [rnd.randrange(p) for _ in range(rnd.randint(1, 2 * dg + 1))]
            assert ctx.reduce(f) == poly_mod(f, g, p)
        g = [3, 1]
        inv = newton_inverse([1, 4, 7], 5, p)
        prod = poly_mul([1, 4, 7], inv, p, trunc=5)
        assert prod == [1, 0, 0, 0, 0]

    def test_poly_gcd(self):
        p = 101
        a = poly_mul([2, 1], [5, 1], p)       # (x+2)(x+5)
        b = poly_mul([2, 1], [7, 1], p)       # (x+2)(x+7)
        assert poly_gcd(a, b, p) == [2, 1]


class TestPowerSumSolve:
    def test_worked_instance(self):
        q = {1: 3, 2: 4, 3: 2, 4: 3}
        s = power_sum_sequence(q, 13, 8)
        assert solve_powersum_counts([1, 2, 3, 4], s, 13) == [3, 4, 2, 3]

    def test_single_root(self):
        assert solve_powersum_counts([5], [1, 5, 12, 8], 13) == [1]

    def test_empty(self):
        assert solve_powersum_counts([], [0, 0], 13) == []

    def test_matches_gaussian_elimination_oracle(self):
        rnd = random.Random(8)
        for _ in range(100):
            p = select_prime(rnd.randint(50, 10**6)).p
            m = rnd.randint(1, 8)
            roots = sorted(set(rnd.randrange(1, p) for _ in range(m)))
            counts = {r: rnd.randrange(1, p) for r in roots}
            s = power_sum_sequence(counts, p, 2 * len(roots))
            fast = solve_powersum_counts(roots, s, p)
            vander = [[pow(r, i, p) for r in roots] for i in range(len(roots))]
            slow = gaussian_solve_mod_p(vander, s[:len(roots)], p)
            assert fast == slow == [counts[r] for r in roots]
