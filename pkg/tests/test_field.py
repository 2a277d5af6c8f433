import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from fedkmeans.errors import UnsupportedModulusError
from fedkmeans.field import (
    FieldElement,
    FieldModulus,
    MAX_MODULUS_BITS,
    field_inverse,
    field_inverse_int,
    is_prime,
    select_prime,
)


def test_select_prime_examples():
    assert select_prime(2).p == 2
    assert select_prime(12).p == 13
    assert select_prime(65530).p == 65537


def test_select_prime_matches_trial_division():
    def trial_next(n):
        def is_p(m):
            if m < 2:
                return False
            f = 2
            while f * f <= m:
                if m % f == 0:
                    return False
                f += 1
            return True
        while not is_p(n):
            n += 1
        return n

    for lo in [2, 3, 4, 90, 91, 1000, 5040, 7919, 100000]:
        assert select_prime(lo).p == trial_next(lo)


def test_select_prime_rejects_oversized():
    with pytest.raises(UnsupportedModulusError):
        select_prime(1 << (MAX_MODULUS_BITS + 1))
    with pytest.raises(ValueError):
        select_prime(1)


def test_is_prime_against_sympy():
    import random

    rnd = random.Random(0)
    for _ in range(300):
        n = rnd.randrange(2, 10**7)
        assert is_prime(n) == sympy.isprime(n), n
    for _ in range(30):
        n = rnd.randrange(2**70, 2**72)
        assert is_prime(n) == sympy.isprime(n), n


def test_modulus_validation():
    with pytest.raises(ValueError):
        FieldModulus(10)
    with pytest.raises(ValueError):
        FieldModulus(1)
    assert FieldModulus(13).element_bits == 4
    assert FieldModulus(2).element_bits == 1


def test_inverse_examples():
    assert field_inverse_int(1, 13) == 1
    assert field_inverse_int(3, 13) == 9
    assert field_inverse_int(12, 13) == 12
    with pytest.raises(ZeroDivisionError):
        field_inverse_int(0, 13)


def test_inverse_involution_and_fermat():
    p = select_prime(10_000).p
    for a in range(1, 200):
        inv = field_inverse_int(a, p)
        assert a * inv % p == 1
        assert field_inverse_int(inv, p) == a
        assert pow(a, p - 1, p) == 1


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=10**30), st.integers(min_value=0, max_value=10**30))
def test_element_arithmetic_matches_integer_oracle(a, b):
    mod = FieldModulus((1 << 61) - 1)
    x = mod.element(a)
    y = mod.element(b)
    assert int(x + y) == (a + b) % mod.p
    assert int(x - y) == (a - b) % mod.p
    assert int(x * y) == (a * b) % mod.p
    assert 0 <= int(x * y) < mod.p


def test_field_element_invariants():
    mod = FieldModulus(13)
    with pytest.raises(ValueError):
        FieldElement(13, mod)
    with pytest.raises(ValueError):
        FieldElement(-1, mod)
    e = mod.element(5)
    assert int(e ** 3) == pow(5, 3, 13)
    assert int(field_inverse(e) * e) == 1
    with pytest.raises(ValueError):
        e + FieldModulus(17).element(1)
