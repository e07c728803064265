"""The root lattice A_{N-1}, its partial theta sums, and the lattice form of the
Fourier coefficients of 1/theta^N.

Vectors in (1/N)A_{N-1} are stored as integer vectors b = N*a over the simple
roots, so every pairing is an exact integer divided by N^2.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .qseries import QSeries, Phased, eta, qs_inv


class NotInCoset(ValueError):
    pass


@dataclass(frozen=True)
class RootSystem:
    N: int

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be at least 2")

    @property
    def rank(self):
        return self.N - 1

    @property
    def cartan(self):
        n = self.rank
        return [[2 if i == j else (-1 if abs(i - j) == 1 else 0) for j in range(n)] for i in range(n)]

    @property
    def positive_roots(self):
        n = self.rank
        roots = []
        for i in range(n):
            for j in range(i, n):
                roots.append(tuple(1 if i <= k <= j else 0 for k in range(n)))
        return roots

    def min_eigenvalue(self):
        """Smallest eigenvalue 4 sin^2(pi/2N) of the A_{N-1} Cartan matrix."""
        return 4 * math.sin(math.pi / (2 * self.N)) ** 2


@dataclass(frozen=True)
class LatticeVector:
    N: int
    coeffs: tuple

    def __post_init__(self):
        cs = tuple(Fraction(c) for c in self.coeffs)
        if len(cs) != self.N - 1:
            raise ValueError("wrong number of coordinates")
        if any((c * self.N).denominator != 1 for c in cs):
            raise ValueError("coordinates must lie in (1/N)Z")
        object.__setattr__(self, "coeffs", cs)


def _cartan_apply(v):
    n = len(v)
    out = []
    for i in range(n):
        s = 2 * v[i]
        if i:
            s -= v[i - 1]
        if i + 1 < n:
            s -= v[i + 1]
        out.append(s)
    return out


def pairing(t, s):
    if t.N != s.N:
        raise ValueError("dimension mismatch")
    cs = _cartan_apply(list(s.coeffs))
    return sum(a * b for a, b in zip(t.coeffs, cs))


def norm(t):
    return pairing(t, t)


def d_n(n):
    """prod_{j=1}^n j!"""
    p = 1
    for j in range(1, n + 1):
        p *= math.factorial(j)
    return p


def _root_product(cb):
    """prod over positive roots of sum_{k=i..j} (Cb)_k (unscaled)."""
    n = len(cb)
    p = 1
    for i in range(n):
        s = 0
        for j in range(i, n):
            s += cb[j]
            p *= s
            if not p:
                return 0
    return p


def _search_bound(N, bound):
    """Box half-width for |a_n| when t^2/(2(N-1)) < bound."""
    lam = RootSystem(N).min_eigenvalue()
    return math.sqrt(2 * (N - 1) * float(bound) / lam) * (1 + 1e-9) + 1e-9


def enumerate_Tr(N, s, bound, box_scale=1):
    """Members t of T_s with t^2/(2(N-1)) < bound, as (LatticeVector, exponent).

    a_n = (N-n)n/2 - s n/N + (N-1) m_n with (m_{N-1} - 1/2)(s - 1/2) >= 0.
    """
    s = Fraction(s)
    if s.denominator != 1:
        raise NotInCoset("T_s is defined for integral s")
    bound = Fraction(bound)
    n = N - 1
    A = _search_bound(N, bound) * box_scale
    # b_k = N a_k = N(N-k)k/2 - s k + N(N-1) m_k  (integral because N(N-k)k is even)
    base = [Fraction(N * (N - k) * k, 2) - s * k for k in range(1, N)]
    ranges = []
    for k, c in enumerate(base):
        lo = math.ceil((-A * N - c) / (N * n))
        hi = math.floor((A * N - c) / (N * n))
        if k == n - 1:
            if s >= 1:
                lo = max(lo, 1)
            else:
                hi = min(hi, 0)
        ranges.append(range(lo, hi + 1))
    denom = 2 * n * N * N
    limit = bound * denom
    out = []
    for ms in itertools.product(*ranges):
        b = [int(base[k]) + N * n * ms[k] for k in range(n)]
        cb = _cartan_apply(b)
        nb = sum(x * y for x, y in zip(b, cb))
        if nb < limit:
            t = LatticeVector(N, tuple(Fraction(x, N) for x in b))
            out.append((t, Fraction(nb, denom)))
    return out


def partial_lattice_sum(N, s, bound):
    """sum_{t in T_s} prod_alpha (t|alpha) q^{t^2/(2(N-1))} below ``bound``; also the term count."""
    n_roots = N * (N - 1) // 2
    terms = {}
    members = enumerate_Tr(N, s, bound)
    for t, e in members:
        b = [int(c * N) for c in t.coeffs]
        p = _root_product(_cartan_apply(b))
        if p:
            terms[e] = terms.get(e, 0) + Fraction(p, N**n_roots)
    return QSeries.from_exponents(terms, bound), len(members)


def sign(x):
    return 1 if x >= 0 else -1


def lattice_formula(N, r, q_order, boundary_sign=1, with_count=False):
    """i^N sign(r-N/2) q^{-r^2/2N} eta^{-N(N+1)} / d_{N-1} * sum over T_{r-N/2}, as displayed.

    Checked numerically, this is the zeta^r coefficient of 1/theta^N in the strip
    Im tau < Im z < 2 Im tau, provided the sign at r = N/2 is taken as -1
    (``boundary_sign=-1``); with sign(0) = +1 that single index is off by a sign.
    """
    r = Fraction(r)
    s = r - Fraction(N, 2)
    if s.denominator != 1:
        raise NotInCoset(f"r = {r} is not in N/2 + Z for N = {N}")
    q_order = Fraction(q_order)
    shift = -r * r / (2 * N)
    lead = Fraction(N * (N + 1), 24)
    bound = q_order - shift + lead
    body, count = partial_lattice_sum(N, s, bound)
    e = eta(bound + lead) ** (N * (N + 1))
    series = (body * qs_inv(e)).shift(shift).truncate(q_order)
    sg = boundary_sign if s == 0 else sign(s)
    series = series.scale(Fraction(sg, d_n(N - 1)))
    out = Phased(N, series)
    return (out, count) if with_count else out


def lattice_coefficient(N, r, q_order, with_count=False):
    """zeta^r coefficient of 1/theta^N for 0 <= Im z < Im tau, from the lattice sum.

    Moving z by tau multiplies 1/theta^N by (-1)^N q^{N/2} zeta^N, so the
    coefficient here is (-1)^N q^{r+N/2} times the next-strip coefficient at r+N.
    """
    r = Fraction(r)
    q_order = Fraction(q_order)
    e = r + Fraction(N, 2)
    upper, count = lattice_formula(N, r + N, q_order - e, boundary_sign=-1, with_count=True)
    out = Phased(upper.phase, upper.series.shift(e).scale((-1) ** N).truncate(q_order))
    return (out, count) if with_count else out


def n1_coefficient(r, q_order):
    """zeta^r coefficient of 1/theta (r in 1/2 + Z, chamber 0 <= Im z < Im tau).

    i q^{-r^2/2} eta^{-3} sum_{m>=0} (-1)^m q^{(m + |r-1/2| + 1/2)^2/2}
    """
    r = Fraction(r)
    if (r - Fraction(1, 2)).denominator != 1:
        raise NotInCoset(f"r = {r} is not in 1/2 + Z")
    q_order = Fraction(q_order)
    shift = -r * r / 2
    bound = q_order - shift + Fraction(1, 8)
    a = abs(r - Fraction(1, 2)) + Fraction(1, 2)
    terms = {}
    m = 0
    while (m + a) ** 2 / 2 < bound:
        terms[(m + a) ** 2 / 2] = (-1) ** m
        m += 1
    body = QSeries.from_exponents(terms, bound)
    e3 = eta(bound + Fraction(1, 8)) ** 3
    series = (body * qs_inv(e3)).shift(shift).truncate(q_order)
    return Phased(1, series)


def full_lattice_theta(N, q_order):
    """sum over (1/N)A_{N-1} of q^{t^2/(2(N-1))}."""
    q_order = Fraction(q_order)
    n = N - 1
    A = _search_bound(N, q_order)
    rng = range(-math.floor(A * N), math.floor(A * N) + 1)
    denom = 2 * n * N * N
    limit = q_order * denom
    counts = {}
    for b in itertools.product(rng, repeat=n):
        nb = sum(x * y for x, y in zip(b, _cartan_apply(list(b))))
        if nb < limit:
            counts[nb] = counts.get(nb, 0) + 1
    return QSeries.from_exponents({Fraction(k, denom): c for k, c in counts.items()}, q_order)
