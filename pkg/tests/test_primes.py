import pytest

from qkdauth.primes import is_prime_u64


def trial_division(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def test_matches_trial_division_small():
    for n in range(5000):
        assert is_prime_u64(n) == trial_division(n), n


def test_known_strong_pseudoprimes_rejected():
    # composites that fool Miller-Rabin with truncated witness sets
    for n in (2047, 1373653, 25326001, 3215031751, 3474749660383,
              341550071728321, 3825123056546413051):
        assert not is_prime_u64(n), n


def test_known_large_primes():
    assert is_prime_u64(2**61 - 1)          # Mersenne
    assert is_prime_u64(2**31 + 11)
    assert is_prime_u64(2**63 + 29)
    assert not is_prime_u64(2**62 + 1)


def test_range_check():
    with pytest.raises(ValueError):
        is_prime_u64(1 << 64)
    with pytest.raises(ValueError):
        is_prime_u64(-3)
