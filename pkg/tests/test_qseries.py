from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from qforms.qseries import (
    CacheError, INF, NotInvertible, Phased, QSeries, VersionMismatch, dq, dumps_binary, e2, eisenstein,
    eta, loads_binary, pochhammer, qs_inv, serre, sigma,
)


def brute_euler(order):
    """prod_{n < order} (1 - q^n) by repeated polynomial multiplication."""
    coeffs = [0] * order
    coeffs[0] = 1
    for n in range(1, order):
        for m in range(order - 1, n - 1, -1):
            coeffs[m] -= coeffs[m - n]
    return coeffs


def test_eta_matches_brute_product():
    e = eta(40)
    ref = brute_euler(40)
    for n in range(39):
        assert e.coeff(Fraction(1, 24) + n) == ref[n]


def test_pochhammer_infinite_is_euler():
    p = pochhammer(1, 1, None, 25)
    ref = brute_euler(25)
    assert [p.coeff(n) for n in range(25)] == ref


def test_e2_leading_terms():
    s = e2(4)
    assert [s.coeff(n) for n in range(4)] == [1, -24, -72, -96]


def test_eisenstein_e4_normalised():
    s = eisenstein(4, 4, normalized=True)
    assert [s.coeff(n) for n in range(4)] == [1, 240, 2160, 6720]


def test_sigma_small():
    assert [sigma(n, 1) for n in range(1, 9)] == [1, 3, 4, 7, 6, 12, 8, 15]


def test_serre_kills_eta_weight_half():
    # eta is weight 1/2 and its Serre derivative vanishes identically
    assert serre(Fraction(1, 2), eta(20), 20).is_zero()


def test_truncation_propagates():
    a = QSeries.from_exponents({0: 1, 1: 2}, 5)
    b = QSeries.from_exponents({Fraction(1, 2): 1}, 3)
    prod = a * b
    # min(v(a) + trunc(b), v(b) + trunc(a)) = min(3, 11/2)
    assert prod.trunc == 3
    assert prod.coeff(Fraction(3, 2)) == 2
    with pytest.raises(ValueError):
        prod.coeff(4)


def test_inverse_of_non_unit_valuation():
    a = QSeries.from_exponents({Fraction(1, 3): 2, Fraction(4, 3): 1}, 10)
    inv = qs_inv(a)
    assert inv.valuation() == Fraction(-1, 3)
    assert (a * inv - QSeries.one()).truncate(inv.trunc + Fraction(1, 3)).is_zero()


def test_inverse_of_zero_raises():
    with pytest.raises(NotInvertible):
        qs_inv(QSeries.zero(5))


def test_evaluate_against_mpmath_eta():
    tau = mpmath.mpc(0.1, 1.3)
    val = eta(60).evaluate(tau)
    q = mpmath.exp(2j * mpmath.pi * tau)
    ref = mpmath.exp(2j * mpmath.pi * tau / 24) * mpmath.qp(q)
    assert abs(val - ref) < 1e-14


small = st.dictionaries(
    st.fractions(min_value=0, max_value=6, max_denominator=4),
    st.integers(-5, 5),
    max_size=6,
)


@given(small, small, small)
def test_multiplication_associative_and_distributive(a, b, c):
    A, B, C = (QSeries.from_exponents(x, 8) for x in (a, b, c))
    assert (A * B) * C == A * (B * C)
    assert A * (B + C) == A * B + A * C


@given(small)
def test_inverse_roundtrip(a):
    A = QSeries.from_exponents(a, 8) + QSeries.one(8)
    if A.is_zero() or A.valuation() != 0:
        return
    assert (A * qs_inv(A)).agrees_with(QSeries.one(), order=(A * qs_inv(A)).trunc)


@given(small)
def test_dq_is_derivation(a):
    A = QSeries.from_exponents(a, 6)
    B = eta(6)
    assert dq(A * B) == dq(A) * B + A * dq(B)


@given(small, st.integers(0, 1))
def test_binary_roundtrip(a, phase):
    s = QSeries.from_exponents(a, 7)
    for obj in (s, Phased(phase, s)):
        back = loads_binary(dumps_binary(obj))
        assert back == obj


def test_binary_detects_corruption_and_version():
    blob = bytearray(dumps_binary(eta(10)))
    blob[20] ^= 1
    with pytest.raises(CacheError):
        loads_binary(bytes(blob))
    blob = bytearray(dumps_binary(eta(10)))
    blob[5] += 1
    with pytest.raises(VersionMismatch):
        loads_binary(bytes(blob))


def test_phased_multiplication_tracks_i():
    one = QSeries.one()
    x = Phased(1, one) * Phased(1, one)
    assert x.phase == 0 and x.series == one.scale(-1)


def test_exact_series_has_infinite_truncation():
    assert QSeries.one().trunc == INF
