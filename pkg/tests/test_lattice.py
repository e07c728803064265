from fractions import Fraction

import mpmath
import pytest

from qforms import oracle
from qforms.fourier import chi
from qforms.lattice import (
    LatticeVector, NotInCoset, RootSystem, d_n, enumerate_Tr, full_lattice_theta, lattice_coefficient,
    lattice_formula, n1_coefficient, norm, pairing,
)


def test_cartan_a3():
    assert RootSystem(4).cartan == [[2, -1, 0], [-1, 2, -1], [0, -1, 2]]


@pytest.mark.parametrize("N", [2, 3, 4, 5, 6])
def test_positive_root_count_and_norms(N):
    R = RootSystem(N)
    assert len(R.positive_roots) == N * (N - 1) // 2
    for a in R.positive_roots:
        assert norm(LatticeVector(N, a)) == 2


def test_min_eigenvalue_bounds_norm():
    R = RootSystem(5)
    v = LatticeVector(5, (1, 2, 2, 1))
    assert norm(v) >= R.min_eigenvalue() * sum(c * c for c in v.coeffs) - 1e-12


def test_pairing_symmetric():
    a = LatticeVector(4, (Fraction(1, 4), 1, Fraction(-3, 4)))
    b = LatticeVector(4, (Fraction(1, 2), Fraction(1, 4), 2))
    assert pairing(a, b) == pairing(b, a)


def test_vector_rejects_wrong_denominator():
    with pytest.raises(ValueError):
        LatticeVector(3, (Fraction(1, 2), 0))


def test_d_n_values():
    assert [d_n(n) for n in range(5)] == [1, 1, 2, 12, 288]


@pytest.mark.parametrize("N,s", [(2, 0), (3, 1), (3, -2), (4, 2), (5, 0)])
def test_enumeration_box_is_complete(N, s):
    # a doubled search box must not find anything new below the bound
    a = sorted((tuple(t.coeffs), e) for t, e in enumerate_Tr(N, s, 6))
    b = sorted((tuple(t.coeffs), e) for t, e in enumerate_Tr(N, s, 6, box_scale=2))
    assert a == b


def test_full_theta_a1():
    # (1/2)A_1 has norms 2 b^2 / 4 with b in Z, exponent b^2 / 4
    s = full_lattice_theta(2, 5)
    assert s.coeff(0) == 1 and s.coeff(Fraction(1, 4)) == 2 and s.coeff(1) == 2 and s.coeff(Fraction(9, 4)) == 2


def test_coset_check():
    with pytest.raises(NotInCoset):
        lattice_coefficient(3, 1, 5)
    with pytest.raises(NotInCoset):
        n1_coefficient(1, 5)


@pytest.mark.parametrize("N,r", [(2, 1), (2, -2), (3, Fraction(3, 2)), (3, Fraction(-1, 2)), (4, 3)])
def test_lattice_agrees_with_partial_theta_route(N, r):
    assert lattice_coefficient(N, r, 12) == chi(0, N, r, 12)


@pytest.mark.parametrize("r", [Fraction(-3, 2), Fraction(1, 2), Fraction(5, 2)])
def test_n1_agrees_with_partial_theta_route(r):
    assert n1_coefficient(r, 15) == chi(0, 1, r, 15)


def test_formula_describes_next_strip():
    # the displayed formula (with the boundary sign fixed) is the coefficient for
    # Im tau < Im z < 2 Im tau, checked by quadrature on Im z = 3/2 Im tau
    ctx = oracle.PrecisionContext(bits=96)
    tau = mpmath.mpc(0.1, 1.2)
    for r in (0, 1, 2):
        exact = lattice_formula(2, r, 20, boundary_sign=-1).evaluate(tau)
        with ctx.work():
            quad = oracle.fourier_quadrature(0, 2, r, tau, ctx, height=1.5 * tau.imag)
        assert abs(exact - quad) < 1e-12 * max(1, abs(quad))


def test_verbatim_boundary_sign_is_off():
    ctx = oracle.PrecisionContext(bits=96)
    tau = mpmath.mpc(0.1, 1.2)
    verbatim = lattice_formula(2, 1, 20).evaluate(tau)
    with ctx.work():
        quad = oracle.fourier_quadrature(0, 2, 1, tau, ctx, height=1.5 * tau.imag)
    assert abs(verbatim + quad) < 1e-12 * abs(quad)
