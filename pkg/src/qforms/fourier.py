"""Fourier coefficients of phi_{2M,N+2M} as mixed partial theta functions.

In the chamber 0 <= Im z < Im tau,

    chi(2M, N+2M, r) = (-1)^{1+de} q^{-r^2/2N} sum_j D_{2j+de+1} / (2j+de)!
                        * N^{j+de} 2^j D_q^j Theta_{1/2+de}(N, rho(r))

with de = 1 for even N and 0 for odd N, and j = 0 .. (N-1-de)/2 + M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .jacobi import phi_expansion
from .lattice import NotInCoset
from .qseries import QSeries, Phased, dq
from .theta import partial


def delta_e(N):
    return 1 if N % 2 == 0 else 0


def rho_fold(N, r):
    r = Fraction(r)
    if (r - Fraction(N, 2)).denominator != 1:
        raise NotInCoset(f"r = {r} is not in N/2 + Z for N = {N}")
    return r if r >= Fraction(N, 2) else N - r


@dataclass(frozen=True)
class CoefficientSpec:
    M: int
    N: int
    r: Fraction
    q_order: Fraction

    def __post_init__(self):
        if self.M < 0 or self.N < 1:
            raise ValueError("need M >= 0 and N >= 1")
        object.__setattr__(self, "r", Fraction(self.r))
        object.__setattr__(self, "q_order", Fraction(self.q_order))
        if (self.r - Fraction(self.N, 2)).denominator != 1:
            raise NotInCoset(f"r = {self.r} is not in N/2 + Z for N = {self.N}")

    @property
    def top(self):
        return (self.N - 1 - delta_e(self.N)) // 2 + self.M


@dataclass
class Term:
    prefactor: Phased  # includes q^{-r^2/2N} and all constants
    derivative_order: int
    theta_part: QSeries

    def value(self):
        return self.prefactor * self.theta_part


def mixed_decomposition(spec: CoefficientSpec):
    N, M, r = spec.N, spec.M, spec.r
    de = delta_e(N)
    K = N + 2 * M
    shift = -r * r / (2 * N)
    rho = rho_fold(N, r)
    work = spec.q_order + 1
    # D_j for 1 <= j <= K from the Laurent expansion of phi_{2M,K}
    phi = phi_expansion(2 * M, K, K, work)
    v_d = Fraction(-K, 8)
    theta_order = spec.q_order - shift - v_d + 1
    base = partial(N, rho, de, theta_order)
    sgn = -1 if de == 0 else 1  # (-1)^{1+de}
    terms = []
    th = base
    for j in range(spec.top + 1):
        if j:
            th = dq(th)
        d = phi.laurent(-(2 * j + de + 1))
        c = Fraction(sgn * N ** (j + de) * 2**j, math.factorial(2 * j + de))
        pre = Phased(d.phase, d.series.scale(c).shift(shift))
        terms.append(Term(pre, j, th))
    return terms


def chi_coefficient(spec: CoefficientSpec) -> Phased:
    terms = mixed_decomposition(spec)
    total = terms[0].value()
    for t in terms[1:]:
        total = total + t.value()
    return total.truncate(spec.q_order)


def chi(M, N, r, q_order):
    """Shorthand: the zeta^r coefficient of phi_{2M, N+2M}."""
    return chi_coefficient(CoefficientSpec(M, N, r, q_order))
