"""Blum-Blum-Shub pseudorandom bit generator.

Arithmetic is done on Python integers, so moduli of any size work.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from math import gcd

MIN_BITS = 16
MR_ROUNDS = 40

_SMALL_PRIMES = [p for p in range(3, 2000) if all(p % d for d in range(2, int(p**0.5) + 1))]


class BbsError(ValueError):
    """Raised for invalid parameters or seeds."""


class SeedRejected(BbsError):
    pass


class ByteStream:
    """Deterministic byte-stream expander (SHA-512 in counter mode)."""

    def __init__(self, seed: bytes, label: bytes = b""):
        self._key = hashlib.sha256(b"wsnsec-expander|" + label + b"|" + seed).digest()
        self._counter = 0
        self._buf = b""

    def read(self, n: int) -> bytes:
        while len(self._buf) < n:
            block = hashlib.sha512(self._key + self._counter.to_bytes(8, "big")).digest()
            self._counter += 1
            self._buf += block
        out, self._buf = self._buf[:n], self._buf[n:]
        return out

    def randbits(self, k: int) -> int:
        raw = int.from_bytes(self.read((k + 7) // 8), "big")
        return raw >> (8 * ((k + 7) // 8) - k)

    def randbelow(self, n: int) -> int:
        k = n.bit_length()
        while True:
            r = self.randbits(k)
            if r < n:
                return r


def is_probable_prime(n: int, rounds: int = MR_ROUNDS, stream: ByteStream | None = None) -> bool:
    """Miller-Rabin test; witnesses come from `stream` so results are reproducible."""
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n == p:
            return True
        if n % p == 0:
            return False
    if n == 2:
        return True
    if n % 2 == 0:
        return False
    if stream is None:
        stream = ByteStream(n.to_bytes((n.bit_length() + 7) // 8, "big"), b"mr")
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for _ in range(rounds):
        a = 2 + stream.randbelow(n - 3)
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class BbsParams:
    p: int = field(repr=False)
    q: int = field(repr=False)
    modulus_n: int

    @property
    def bit_length(self) -> int:
        return self.modulus_n.bit_length()

    def public(self) -> dict:
        # p and q are secret; only the modulus is ever serialized
        return {"modulus_n": self.modulus_n, "bit_length": self.bit_length}


def _check_prime_pair(p: int, q: int) -> None:
    if p == q:
        raise BbsError("p and q must be distinct")
    for name, v in (("p", p), ("q", q)):
        if v % 4 != 3:
            raise BbsError(f"{name}={v} is not congruent to 3 mod 4")
        if not is_probable_prime(v):
            raise BbsError(f"{name}={v} is not prime")


def params_from_primes(p: int, q: int) -> BbsParams:
    """Test-only constructor from explicit primes; allows toy moduli such as 7*11."""
    _check_prime_pair(p, q)
    return BbsParams(p, q, p * q)


def _random_blum_prime(bits: int, stream: ByteStream) -> int:
    while True:
        cand = stream.randbits(bits)
        cand |= (0b11 << (bits - 2)) | 0b11
        if is_probable_prime(cand, stream=stream):
            return cand


def generate_params(bit_length: int, entropy_seed: bytes) -> BbsParams:
    """Generate a Blum modulus of exactly `bit_length` bits.

    Both primes have their top two bits set, which forces the product to
    the full bit length. Output is a pure function of `entropy_seed`.
    """
    if bit_length < MIN_BITS:
        raise BbsError(
            f"bit_length={bit_length} is below the minimum of {MIN_BITS}; "
            "use params_from_primes() for toy moduli"
        )
    stream = ByteStream(bytes(entropy_seed), b"bbs-primes")
    p_bits = (bit_length + 1) // 2
    q_bits = bit_length // 2
    p = _random_blum_prime(p_bits, stream)
    while True:
        q = _random_blum_prime(q_bits, stream)
        if q != p:
            break
    params = BbsParams(p, q, p * q)
    assert params.modulus_n.bit_length() == bit_length
    return params


@dataclass
class BbsState:
    modulus_n: int
    x: int
    index: int = 0


def seed_state(params: BbsParams | int, s: int) -> BbsState:
    n = params if isinstance(params, int) else params.modulus_n
    if not 1 <= s <= n - 1:
        raise BbsError(f"seed s={s} outside [1, {n - 1}]")
    if gcd(s, n) != 1:
        raise SeedRejected(f"seed s={s} shares a factor with the modulus")
    return BbsState(n, s * s % n)


def derive_seed_value(params: BbsParams | int, entropy_seed: bytes) -> int:
    """Pick a valid seed s in [1, N-1] coprime to N from an entropy string."""
    n = params if isinstance(params, int) else params.modulus_n
    stream = ByteStream(bytes(entropy_seed), b"bbs-seed")
    while True:
        s = 1 + stream.randbelow(n - 1)
        if gcd(s, n) == 1:
            return s


def next_bit(state: BbsState) -> int:
    state.x = state.x * state.x % state.modulus_n
    state.index += 1
    return state.x & 1


def generate(state: BbsState, length: int) -> list[int]:
    if length < 0:
        raise BbsError("length must be non-negative")
    n, x = state.modulus_n, state.x
    out = [0] * length
    for i in range(length):
        x = x * x % n
        out[i] = x & 1
    state.x = x
    state.index += length
    return out
