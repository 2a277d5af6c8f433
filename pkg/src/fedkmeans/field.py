"""Prime-field arithmetic for the aggregation protocol.

Elements are plain Python ints in [0, p); `FieldModulus` validates the
prime and `FieldElement` provides operator-overloaded arithmetic for
code that prefers closed types. Hot decode loops work on raw ints.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import UnsupportedModulusError

# Largest supported modulus: field elements must fit the 16-byte slots of
# the wire format and the 25-bit-limb polynomial kernels.
MAX_MODULUS_BITS = 126

# Deterministic Miller-Rabin witness set, valid for n < 3.3e24.
_DETERMINISTIC_LIMIT = 3_317_044_064_679_887_385_961_981
_DETERMINISTIC_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
_EXTRA_PROBABILISTIC_ROUNDS = 32

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)


def _miller_rabin_witness(n: int, a: int) -> bool:
    """True if ``a`` witnesses compositeness of odd n > 2."""
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    x = pow(a, d, n)
    if x == 1 or x == n - 1:
        return False
    for _ in range(r - 1):
        x = x * x % n
        if x == n - 1:
            return False
    return True


def is_prime(n: int) -> bool:
    """Primality test: deterministic below 3.3e24, probabilistic above."""
    if n < 2:
        return False
    for q in _SMALL_PRIMES:
        if n == q:
            return True
        if n % q == 0:
            return False
    for a in _DETERMINISTIC_WITNESSES:
        if _miller_rabin_witness(n, a):
            return False
    if n < _DETERMINISTIC_LIMIT:
        return True
    # Extra random witnesses; error probability <= 4^-rounds. Seeded by n
    # so the answer is stable across runs.
    rnd = random.Random(n)
    for _ in range(_EXTRA_PROBABILISTIC_ROUNDS):
        a = rnd.randrange(2, n - 1)
        if _miller_rabin_witness(n, a):
            return False
    return True


@dataclass(frozen=True)
class FieldModulus:
    """A validated prime modulus p >= 2."""

    p: int

    def __post_init__(self):
        if self.p < 2:
            raise ValueError(f"modulus must be >= 2, got {self.p}")
        if self.p.bit_length() > MAX_MODULUS_BITS:
            raise UnsupportedModulusError(
                f"modulus needs {self.p.bit_length()} bits, supported width is "
                f"{MAX_MODULUS_BITS}; use the deterministic big-integer decoder"
            )
        if not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")

    @property
    def element_bits(self) -> int:
        """Bits per serialized field element, ceil(log2 p)."""
        return (self.p - 1).bit_length()

    def element(self, value: int) -> "FieldElement":
        return FieldElement(value % self.p, self)


def select_prime(lower_bound: int) -> FieldModulus:
    """Smallest prime >= lower_bound.

    Raises UnsupportedModulusError when the result would exceed the
    supported field width; such parameter regimes belong to the
    big-integer decoder path.
    """
    if lower_bound < 2:
        raise ValueError("lower_bound must be >= 2")
    if lower_bound.bit_length() > MAX_MODULUS_BITS:
        raise UnsupportedModulusError(
            f"no supported prime >= {lower_bound}: exceeds {MAX_MODULUS_BITS}-bit "
            "field width; use the deterministic big-integer decoder"
        )
    n = lower_bound
    while not is_prime(n):
        n += 1
    return FieldModulus(n)


def field_inverse_int(a: int, p: int) -> int:
    """Inverse of a nonzero residue, via Fermat: a^(p-2) mod p."""
    a %= p
    if a == 0:
        raise ZeroDivisionError("0 has no multiplicative inverse")
    return pow(a, p - 2, p)


@dataclass(frozen=True)
class FieldElement:
    """An element of F_p with closed arithmetic."""

    value: int
    modulus: FieldModulus

    def __post_init__(self):
        if not 0 <= self.value < self.modulus.p:
            raise ValueError(f"value {self.value} outside [0, {self.modulus.p})")

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.modulus.p != self.modulus.p:
                raise ValueError("mixed moduli")
            return other.value
        return int(other) % self.modulus.p

    def __add__(self, other):
        return FieldElement((self.value + self._coerce(other)) % self.modulus.p, self.modulus)

    def __sub__(self, other):
        return FieldElement((self.value - self._coerce(other)) % self.modulus.p, self.modulus)

    def __mul__(self, other):
        return FieldElement(self.value * self._coerce(other) % self.modulus.p, self.modulus)

    __radd__ = __add__
    __rmul__ = __mul__

    def __pow__(self, exponent: int):
        return FieldElement(pow(self.value, exponent, self.modulus.p), self.modulus)

    def inverse(self) -> "FieldElement":
        return FieldElement(field_inverse_int(self.value, self.modulus.p), self.modulus)

    def __int__(self) -> int:
        return self.value


def field_inverse(a: FieldElement) -> FieldElement:
    return a.inverse()
