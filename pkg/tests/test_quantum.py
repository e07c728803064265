import math
import random
from fractions import Fraction

import mpmath
import pytest

from qforms import oracle, quantum
from qforms.oracle import PrecisionContext
from qforms.quantum import (
    MeanValueNonzero, PeriodicSeq, RationalPoint, RouteUnavailable, abel_l_value, branch, dirichlet_eta_value,
    gamma_seq, gauss_sum, gauss_table, gauss_vanishing, l_value, ord2, quantum_member,
)

CTX = PrecisionContext(bits=128)


def test_ord2():
    assert [ord2(n) for n in (1, 2, 12, -8, 40)] == [0, 1, 2, 3, 3]
    with pytest.raises(ValueError):
        ord2(0)


def test_branches():
    assert branch(4, 1) == "generic"
    assert branch(4, 2) == "half"
    assert branch(4, 0) == "zero"
    assert branch(2, 1) == "half"


@pytest.mark.parametrize("N,r,p,member", [
    (2, 1, "1/4", True), (2, 1, "1/2", False), (2, 0, "1/2", True), (2, 0, "1/4", False),
    (4, 1, "1/2", True), (4, 1, "1/4", False), (4, 1, "1/3", False), (6, 1, "1/3", True), (6, 1, "1/6", False),
    (4, 2, "1/8", True), (4, 0, "1/4", True), (8, 0, "3/8", True),
])
def test_membership(N, r, p, member):
    assert quantum_member(N, r, p) is member


def test_membership_invariant_under_gamma1():
    rng = random.Random(2)
    for N in (2, 4, 6, 8):
        for r in range(N):
            for _ in range(20):
                h, k = rng.choice([1, -1]) * rng.randint(1, 40), rng.randint(1, 40)
                if math.gcd(h, k) != 1:
                    continue
                p = RationalPoint(h, k)
                g = oracle.sample_gamma1(2 * N, rng)
                image = p.act(g)
                if image is not None:
                    assert quantum_member(N, r, image) == quantum_member(N, r, p)


def test_gamma_seq_multiset_count():
    g = gamma_seq(4, 2, "1/8", CTX)
    # r = N/2: n = 2 mod 4 is hit by both r and -r
    assert abs(g(2)) == pytest.approx(2)
    assert g(1) == 0
    g0 = gamma_seq(4, 0, "1/4", CTX)
    assert abs(g0(0)) == pytest.approx(2)


def test_gamma_seq_mean_zero_exactly_on_members():
    for N, r, p in [(2, 1, "1/4"), (4, 1, "3/2"), (6, 3, "1/4"), (4, 0, "1/4")]:
        assert quantum_member(N, r, p)
        assert abs(gamma_seq(N, r, p, CTX).mean_value()) < 1e-30
    with pytest.raises(MeanValueNonzero):
        gamma_seq(4, 1, "1/3", CTX, assert_mean_zero=True)


@pytest.mark.parametrize("c", [1, 2, 4, 6, 8, 12, 15, 30])
def test_gauss_classifier_against_direct_sum(c):
    table = gauss_table(c)
    for a in range(c):
        for b in range(c):
            direct = abs(gauss_sum(a, b, c, CTX))
            assert abs(table[a, b] - float(direct)) < 1e-12
            if gauss_vanishing(a, b, c) != "none":
                assert direct < 1e-25


def test_gauss_literal_b0_clause_misfires():
    assert gauss_vanishing(2, 0, 6, literal=True) == "case3"
    assert gauss_vanishing(2, 0, 6) == "none"
    assert float(abs(gauss_sum(2, 0, 6, CTX))) == pytest.approx(2 * math.sqrt(3), abs=1e-12)


def test_gauss_small_cases():
    assert abs(gauss_sum(1, 0, 2, CTX)) < 1e-30
    assert abs(gauss_sum(1, 1, 4, CTX)) < 1e-30 and gauss_vanishing(1, 1, 4) == "case2"
    assert gauss_sum(1, 0, 1, CTX) == 1


def test_gauss_sum_quadratic_closed_form():
    # G(1, 0, c) = (1 + i^{-c}) ... its modulus is sqrt(c), 0, sqrt(2c) by c mod 4
    for c in range(1, 30):
        expect = {0: math.sqrt(2 * c), 1: math.sqrt(c), 2: 0.0, 3: math.sqrt(c)}[c % 4]
        assert float(abs(gauss_sum(1, 0, c, CTX))) == pytest.approx(expect, abs=1e-12)


def test_alternating_l_values():
    chi = PeriodicSeq.from_one_based([1, -1])
    assert l_value(1, chi, CTX) == mpmath.mpf(1) / 4
    assert abs(abel_l_value(1, chi, CTX) - mpmath.mpf(1) / 4) < 1e-20
    assert abs(dirichlet_eta_value(-1, CTX) - mpmath.mpf(1) / 4) < 1e-30
    assert l_value(0, chi, CTX) == mpmath.mpf(1) / 2


def test_l_value_rejects_nonzero_mean():
    with pytest.raises(MeanValueNonzero):
        l_value(1, PeriodicSeq.from_one_based([1, 1]), CTX)


def test_bernoulli_and_abel_agree_on_random_sequences():
    rng = random.Random(4)
    for _ in range(5):
        k = rng.randint(2, 9)
        vals = [mpmath.mpf(rng.randint(-5, 5)) for _ in range(k - 1)]
        vals.append(-sum(vals))
        chi = PeriodicSeq.from_one_based(vals)
        for m in (0, 1, 3):
            assert abs(l_value(m, chi, CTX) - abel_l_value(m, chi, CTX)) < 1e-15 * max(1, abs(l_value(m, chi, CTX)))


def test_gamma_inc_half_against_mpmath():
    for x in (0.1, 1, 5, 30):
        with CTX.work():
            assert abs(quantum.gamma_inc_half(x, CTX) - mpmath.gammainc(-0.5, x)) < 1e-30


def test_gamma_inc_half_large_argument():
    # Gamma(-1/2; x) ~ x^{-3/2} e^{-x}
    with CTX.work():
        x = mpmath.mpf(400)
        ratio = quantum.gamma_inc_half(x, CTX) / (x ** (-1.5) * mpmath.exp(-x))
        assert abs(ratio - 1) < 0.01


@pytest.mark.parametrize("N,r", [(2, 1), (4, 1), (4, 0)])
def test_eichler_series_against_quadrature(N, r):
    tau = mpmath.mpc(0.2, -0.7)
    ctx = PrecisionContext(bits=96)
    with ctx.work():
        a = quantum.eichler_star(N, r, tau, ctx, normalization="integral")
        b = quantum.eichler_integral(N, r, tau, ctx)
        assert abs(a - b) < 1e-15 * max(1, abs(b))


def test_eichler_rejects_upper_half_plane():
    with pytest.raises(ValueError):
        quantum.eichler_star(4, 1, 0.1 + 1j, CTX)


def test_near_cusp_poisson_matches_direct():
    with CTX.work():
        for N, r, x in [(4, 1, Fraction(1, 2)), (4, 0, Fraction(1, 4))]:
            z = _ = mpmath.mpc(float(x), 0.3)
            a = quantum.theta_half_tilde(N, r, z, CTX)
            b = quantum.theta_half_tilde_near_cusp(N, r, x, 0.3, CTX)
            assert abs(a - b) < 1e-25


def test_cocycle_identity_n2():
    ctx = PrecisionContext(bits=64)
    res, scale = quantum.cocycle_residual(2, 1, (1, 2, 4, 9), complex(0.3, -0.8), ctx)
    assert res < 1e-15 * max(1, scale)


def test_cocycle_needs_gamma1():
    with pytest.raises(ValueError):
        quantum.cocycle_residual(4, 1, (1, 1, 0, 1), -1j, CTX)


@pytest.mark.parametrize("N,r,p", [(2, 1, "1/4"), (2, 0, "1/2"), (4, 1, "1/2"), (6, 2, "5/3")])
def test_root_of_unity_three_ways(N, r, p):
    rep = quantum.root_of_unity_value(N, r, p, CTX)
    assert rep.max_discrepancy() < 1e-10


def test_warnaar_route_needs_generic_branch():
    with pytest.raises(RouteUnavailable):
        quantum.warnaar_route(4, 2, "1/8", CTX)


def test_asymptotic_constant_term_is_twice_value():
    a0 = quantum.asymptotic_coeffs(4, 1, "1/2", 0, CTX)[0]
    with CTX.work():
        assert abs(a0 / 2 - quantum.finite_value(4, 1, "1/2", CTX)) < 1e-25


def test_warnaar_identity_exact():
    lhs, rhs = quantum.warnaar_identity_series(a_order=6, q_order=16)
    assert lhs == rhs


def test_sum_of_tails_identities_exact():
    l, r = quantum.ajuo38_series(20)
    assert (l - r).is_zero()
    l, r = quantum.rzero_sot_series(20)
    assert (l - r).is_zero()


def test_rzero_identity_needs_lambert_sign_flip():
    l, r = quantum.rzero_sot_series(20, lambert_sign=1)
    assert not (l - r).is_zero()
