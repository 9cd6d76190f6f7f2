import random

import pytest
from hypothesis import given, settings, strategies as st

from wsnsec import bbs
from oracles import bbs_trajectory, sieve

BLUM_PRIMES = [p for p in sieve(1 << 16) if p % 4 == 3 and p >= 1 << 7]


def toy_state(s=3):
    return bbs.seed_state(bbs.params_from_primes(7, 11), s)


def test_test_constructor_accepts_blum_primes():
    params = bbs.params_from_primes(7, 11)
    assert params.modulus_n == 77


@pytest.mark.parametrize("p, q", [(5, 11), (7, 7), (7, 15), (9, 11)])
def test_test_constructor_rejects(p, q):
    with pytest.raises(bbs.BbsError):
        bbs.params_from_primes(p, q)


def test_seeding():
    assert toy_state(3).x == 9
    assert toy_state(10).x == 23  # 100 mod 77
    with pytest.raises(bbs.SeedRejected):
        toy_state(7)
    for bad in (0, 77, 80):
        with pytest.raises(bbs.BbsError):
            toy_state(bad)


def test_next_bit_trajectory():
    st_ = toy_state(3)
    xs, bits = [], []
    for _ in range(5):
        bits.append(bbs.next_bit(st_))
        xs.append(st_.x)
    assert xs == [4, 16, 25, 9, 4]
    assert bits == [0, 0, 1, 1, 0]
    assert st_.index == 5


def test_generate_matches_next_bit_and_streams():
    assert bbs.generate(toy_state(3), 5) == [0, 0, 1, 1, 0]
    assert bbs.generate(toy_state(3), 0) == []
    a = toy_state(3)
    chunks = bbs.generate(a, 7) + bbs.generate(a, 13)
    assert chunks == bbs.generate(toy_state(3), 20)


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_random_small_moduli_match_schoolbook_oracle(data):
    p = data.draw(st.sampled_from(BLUM_PRIMES))
    q = data.draw(st.sampled_from(BLUM_PRIMES).filter(lambda v: v != p))
    n = p * q
    s = data.draw(st.integers(1, n - 1).filter(lambda v: v % p and v % q))
    state = bbs.seed_state(bbs.params_from_primes(p, q), s)
    xs, bits = bbs_trajectory(n, s, 40)
    assert state.x == xs[0]
    assert bbs.generate(state, 40) == bits
    assert state.x == xs[-1]


def test_random_states_next_bit_is_parity_of_square():
    params = bbs.generate_params(64, b"parity")
    rng = random.Random(5)
    for _ in range(100):
        x = rng.randrange(2, params.modulus_n)
        state = bbs.BbsState(params.modulus_n, x)
        assert bbs.next_bit(state) == pow(x, 2, params.modulus_n) & 1


@pytest.mark.parametrize("bits", [16, 17, 64, 127, 900])
def test_generate_params_exact_length_and_invariants(bits):
    params = bbs.generate_params(bits, b"seed-" + bytes([bits % 256]))
    assert params.modulus_n.bit_length() == bits
    assert params.p != params.q
    assert params.p % 4 == 3 and params.q % 4 == 3
    assert params.p * params.q == params.modulus_n
    assert bbs.is_probable_prime(params.p) and bbs.is_probable_prime(params.q)


def test_generate_params_deterministic_and_seed_sensitive():
    assert bbs.generate_params(128, b"a") == bbs.generate_params(128, b"a")
    assert bbs.generate_params(128, b"a").modulus_n != bbs.generate_params(128, b"b").modulus_n


def test_generate_params_rejects_tiny():
    with pytest.raises(bbs.BbsError, match="minimum"):
        bbs.generate_params(15, b"x")


def test_secret_primes_not_exposed():
    params = bbs.params_from_primes(7, 11)
    assert params.public() == {"modulus_n": 77, "bit_length": 7}
    assert "p=" not in repr(params)


def test_miller_rabin_against_sieve():
    primes = set(sieve(20000))
    assert [n for n in range(20000) if bbs.is_probable_prime(n)] == sorted(primes)
    # Carmichael numbers
    for n in (561, 1105, 1729, 2465, 2821, 6601, 8911, 41041, 825265):
        assert not bbs.is_probable_prime(n)


def test_derived_seed_is_valid():
    params = bbs.params_from_primes(7, 11)
    for i in range(50):
        s = bbs.derive_seed_value(params, bytes([i]))
        assert 1 <= s < 77 and s % 7 and s % 11


def test_monobit_balance_512():
    params = bbs.generate_params(512, b"monobit")
    state = bbs.seed_state(params, bbs.derive_seed_value(params, b"monobit"))
    bits = bbs.generate(state, 100_000)
    assert abs(sum(bits) / len(bits) - 0.5) <= 0.02
