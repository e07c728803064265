"""Series in the elliptic variable with q-series coefficients.

Everything is written in x = 2 pi i (z - center), so D_zeta acts as d/dx. Two
centers are used: z = 0 (Laurent data of phi_{M,N}) and z = -1/2 (Taylor data
for the heat-operator decomposition).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from . import linalg
from .qseries import INF, QSeries, Phased, dq, eisenstein, eta, qs_inv

CENTERS = ("0", "minus_half")


class ZeroDeterminant(ArithmeticError):
    pass


class SingularTaylorMatrix(ArithmeticError):
    pass


def _qmin(a, b):
    return a if a <= b else b


class ZSeries:
    """sum_j i^phase c_j x^j for j < xtrunc, each c_j a rational QSeries."""

    __slots__ = ("coeffs", "xtrunc", "phase", "center")

    def __init__(self, coeffs, xtrunc, phase=0, center="0"):
        if center not in CENTERS:
            raise ValueError(f"unknown center {center!r}")
        phase %= 4
        neg = phase >= 2
        if neg:
            phase -= 2
        self.coeffs = {}
        for j, c in coeffs.items():
            if j < xtrunc:
                self.coeffs[int(j)] = -c if neg else c
        self.xtrunc = xtrunc
        self.phase = phase
        self.center = center

    # queries ------------------------------------------------------------------
    def coeff(self, j):
        if j >= self.xtrunc:
            raise ValueError(f"x^{j} is beyond the x-truncation {self.xtrunc}")
        return self.coeffs.get(j, QSeries.zero())

    def laurent(self, j):
        """Phased coefficient of x^j."""
        return Phased(self.phase, self.coeff(j))

    def x_valuation(self):
        nz = [j for j, c in self.coeffs.items() if not c.is_zero()]
        return min(nz) if nz else self.xtrunc

    def q_trunc(self):
        t = INF
        for c in self.coeffs.values():
            t = _qmin(t, c.trunc)
        return t

    def parity(self):
        ks = {j % 2 for j, c in self.coeffs.items() if not c.is_zero()}
        if ks == {0}:
            return "even"
        if ks == {1}:
            return "odd"
        return None if ks else "zero"

    # structure ------------------------------------------------------------------
    def _like(self, coeffs, xtrunc, phase=None):
        return ZSeries(coeffs, xtrunc, self.phase if phase is None else phase, self.center)

    def qtruncate(self, order):
        return self._like({j: c.truncate(order) for j, c in self.coeffs.items()}, self.xtrunc)

    def xtruncate(self, xt):
        return self._like(self.coeffs, min(self.xtrunc, xt))

    def _check(self, other):
        if self.center != other.center:
            raise ValueError("series about different centers")

    def __add__(self, other):
        self._check(other)
        if self.phase != other.phase:
            if not other.coeffs or all(c.is_zero() for c in other.coeffs.values()):
                other = ZSeries(other.coeffs, other.xtrunc, self.phase, other.center)
            elif not self.coeffs or all(c.is_zero() for c in self.coeffs.values()):
                return other + ZSeries(self.coeffs, self.xtrunc, other.phase, self.center)
            else:
                raise ValueError("cannot add series with different phases")
        xt = min(self.xtrunc, other.xtrunc)
        out = {}
        for j in set(self.coeffs) | set(other.coeffs):
            if j < xt:
                a = self.coeffs.get(j)
                b = other.coeffs.get(j)
                out[j] = a + b if a is not None and b is not None else (a if b is None else b)
        return self._like(out, xt)

    def __neg__(self):
        return self._like({j: -c for j, c in self.coeffs.items()}, self.xtrunc)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        """Multiply by a rational number or a QSeries."""
        return self._like({j: v * c for j, v in self.coeffs.items()}, self.xtrunc)

    def times_i(self, k=1):
        return self._like(self.coeffs, self.xtrunc, self.phase + k)

    def __mul__(self, other):
        if not isinstance(other, ZSeries):
            return self.scale(other)
        self._check(other)
        va, vb = self.x_valuation(), other.x_valuation()
        xt = min(self.xtrunc + vb, other.xtrunc + va)
        out = {}
        for i, a in self.coeffs.items():
            for j, b in other.coeffs.items():
                n = i + j
                if n >= xt:
                    continue
                p = a * b
                out[n] = out[n] + p if n in out else p
        return self._like(out, xt, self.phase + other.phase)

    __rmul__ = scale

    def shift_x(self, k):
        """Multiply by x^k."""
        return self._like({j + k: c for j, c in self.coeffs.items()}, self.xtrunc + k)

    def inv(self):
        v = self.x_valuation()
        if v >= self.xtrunc:
            raise linalg.SingularSystem("series vanishes to its x-truncation")
        n_terms = self.xtrunc - v
        a = [self.coeffs.get(v + k, QSeries.zero()) for k in range(n_terms)]
        lead = qs_inv(a[0])
        c = [lead]
        for n in range(1, n_terms):
            s = None
            for k in range(1, n + 1):
                if a[k].is_zero() and a[k].trunc == INF:
                    continue
                p = a[k] * c[n - k]
                s = p if s is None else s + p
            c.append(QSeries.zero() if s is None else -(s * lead))
        out = {k - v: c[k] for k in range(n_terms)}
        return self._like(out, self.xtrunc - 2 * v, -self.phase)

    def __pow__(self, k):
        k = int(k)
        if k < 0:
            return self.inv() ** (-k)
        result = ZSeries({0: QSeries.one()}, INF_X, 0, self.center)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def exp(self):
        """exp of a real series without constant term."""
        if self.phase:
            raise ValueError("exp is only implemented for real series")
        if any(j <= 0 and not c.is_zero() for j, c in self.coeffs.items()):
            raise ValueError("exp needs a series without constant or polar part")
        xt = self.xtrunc
        y = [QSeries.one()]
        for n in range(1, xt):
            s = None
            for k in range(1, n + 1):
                a = self.coeffs.get(k)
                if a is None:
                    continue
                p = (a * y[n - k]).scale(k)
                s = p if s is None else s + p
            y.append(QSeries.zero() if s is None else s.scale(Fraction(1, n)))
        return self._like(dict(enumerate(y)), xt, 0)

    def dx(self, k=1):
        out = self
        for _ in range(k):
            out = out._like({j - 1: c.scale(j) for j, c in out.coeffs.items() if j}, out.xtrunc - 1)
        return out

    def dq(self):
        return self._like({j: dq(c) for j, c in self.coeffs.items()}, self.xtrunc)

    # numerics --------------------------------------------------------------------
    def evaluate(self, z, tau):
        shift = 0 if self.center == "0" else mpmath.mpf(-1) / 2
        x = 2j * mpmath.pi * (mpmath.mpc(z) - shift)
        s = mpmath.mpc(0)
        for j, c in self.coeffs.items():
            s += c.evaluate(tau) * x**j
        return s * (1j if self.phase else 1)

    def __repr__(self):
        body = ", ".join(f"x^{j}: {self.coeffs[j]!r}" for j in sorted(self.coeffs)[:4])
        return f"ZSeries[{self.center}, i^{self.phase}]({body}; O(x^{self.xtrunc}))"


INF_X = 10**9  # x-truncation of an exact (polynomial) series


# theta in the elliptic variable ------------------------------------------------

def _center0_log_part(x_order, q_order):
    """-2 sum_{k>=1} G_{2k} x^{2k}/(2k)!"""
    out = {}
    for k in range(1, (x_order + 1) // 2 + 1):
        if 2 * k >= x_order:
            break
        g = eisenstein(2 * k, q_order)
        out[2 * k] = g.scale(Fraction(-2, math.factorial(2 * k)))
    return ZSeries(out, x_order, 0, "0")


def theta_center0(x_order, q_order):
    """theta(z) = i x eta^3 exp(-2 sum G_{2k} x^{2k}/(2k)!), x = 2 pi i z."""
    s = _center0_log_part(x_order - 1, q_order).exp()
    e3 = eta(q_order) ** 3
    return s.scale(e3).shift_x(1).times_i()


def theta_half_product(x_order, q_order, center="minus_half"):
    """theta(w + 1/2) from the triple product, expanded factor by factor.

    theta(w+1/2) = -2 cosh(x/2) q^{1/8} (q)_inf prod_{j>=1} (1 + 2 q^j cosh x + q^{2j}).
    """
    q_order = Fraction(q_order)
    evens = range(0, x_order, 2)
    ch_half = {j: QSeries.one().scale(Fraction(-2, 2**j * math.factorial(j))) for j in evens}
    out = ZSeries(ch_half, x_order, 0, center)
    lead = eta(q_order).shift(Fraction(1, 12)).truncate(q_order)  # q^{1/8} (q)_inf
    out = out.scale(lead)
    j = 1
    while j < q_order:
        qj = QSeries.monomial(j, 2)
        factor = {0: QSeries.one() + qj + QSeries.monomial(2 * j, 1)}
        for k in evens:
            if k:
                factor[k] = qj.scale(Fraction(1, math.factorial(k)))
        out = (out * ZSeries(factor, INF_X, 0, center)).qtruncate(q_order)
        j += 1
    return out


def theta_half_sum(x_order, q_order, center="minus_half"):
    """theta(w + 1/2) = -sum_n q^{(n+1/2)^2/2} e^{(n+1/2)x}, summed directly."""
    q_order = Fraction(q_order)
    ns = []
    n = 0
    while Fraction((2 * n + 1) ** 2, 8) < q_order:
        ns.append(n)
        n += 1
    out = {}
    for k in range(0, x_order, 2):
        terms = {}
        for n in ns:
            h = Fraction(2 * n + 1, 2)
            # n and -n-1 give equal contributions
            terms[h * h / 2] = Fraction(-2) * h**k / math.factorial(k)
        out[k] = QSeries.from_exponents(terms, q_order)
    return ZSeries(out, x_order, 0, center)


def theta_z_expansion(center, x_order, q_order):
    if center == "0":
        return theta_center0(x_order, q_order)
    if center == "minus_half":
        return theta_half_product(x_order, q_order)
    raise ValueError(f"unknown center {center!r}")


# Laurent coefficients -------------------------------------------------------------

def phi_expansion(M, N, x_order, q_order):
    """phi_{M,N} = theta(z+1/2)^M / theta(z)^N about z = 0, through x^{x_order - 1 - N}.

    Written as (-i)^N x^{-N} eta^{-3N} theta(z+1/2)^M exp(2N sum G_{2k} x^{2k}/(2k)!),
    so no series in x has to be inverted.
    """
    if N < 1 or M < 0:
        raise ValueError("need N >= 1 and M >= 0")
    q_order = Fraction(q_order)
    work = q_order + Fraction(3 * N, 8) + Fraction(M, 8) + 1
    body = _center0_log_part(x_order, work).scale(-N).exp()
    if M:
        e = theta_half_sum(x_order, work, center="0")
        body = body * e**M
    inv_eta = qs_inv(eta(work + Fraction(N, 4)) ** (3 * N))
    body = body.scale(inv_eta).qtruncate(q_order)
    return body.shift_x(-N).times_i(-N)


def phi_laurent(M, N, j_max, q_order):
    """[D_N, D_{N-2}, ..., D_{N-2 j_max}] as Phased series (coefficients of x^{-j})."""
    phi = phi_expansion(M, N, 2 * j_max + 1, q_order)
    return [phi.laurent(-(N - 2 * k)) for k in range(j_max + 1)]


def laurent_coefficients(M, N, q_order, lowest=1):
    """{j: D_j} for lowest <= j <= N (both parities)."""
    phi = phi_expansion(M, N, N - lowest + 1, q_order)
    return {j: phi.laurent(-j) for j in range(lowest, N + 1)}


# heat operator ---------------------------------------------------------------------

@dataclass(frozen=True)
class Monomial:
    """coeff * zeta^r * q^m"""

    coeff: Fraction
    r: Fraction
    m: Fraction


def heat_apply(N, s):
    """H = 2N D_q + D_zeta^2 on a ZSeries (D_zeta = d/dx) or on a Monomial."""
    if isinstance(s, Monomial):
        return Monomial(s.coeff * (2 * N * Fraction(s.m) + Fraction(s.r) ** 2), s.r, s.m)
    return s.dq().scale(2 * N).xtruncate(s.xtrunc - 2) + s.dx(2)


def phi_about_minus_half(M, N, x_order, q_order):
    """phi_{M,N} about z = -1/2 in x = 2 pi i (z + 1/2).

    theta(z) = -theta(w + 1/2) and theta(z + 1/2) = theta(w) with w = z + 1/2.
    """
    q_order = Fraction(q_order)
    work = q_order + Fraction(N, 4) + 1
    e = theta_half_product(x_order, work)
    lead = e.coeff(0)
    # normalise the leading coefficient so the inversion loses no q-precision
    unit = e.scale(qs_inv(lead))
    out = unit.inv() ** N if N else ZSeries({0: QSeries.one()}, INF_X, 0, "minus_half")
    out = out.scale(qs_inv(lead) ** N)
    if N % 2:
        out = -out
    if M:
        th = theta_center0(x_order, work)
        th = ZSeries(th.coeffs, th.xtrunc, th.phase, "minus_half")
        out = out * th**M
    return out.qtruncate(q_order)


def rising(a, n):
    p = 1
    for k in range(n):
        p *= a + k
    return p


def heat_scale(N, M, q_order):
    """c with phi_{2M,N+2M} = c * sum_j f_j H^j phi_N when f_M = 1, fixed by the poles at 0."""
    q_order = Fraction(q_order)
    work = q_order + Fraction(3 * M, 4) + 1
    e0 = theta_half_sum(1, work, center="0").coeff(0)
    inv = qs_inv(eta(work + Fraction(M, 2)) ** (6 * M))
    c = (e0 ** (2 * M) * inv).scale(Fraction((-1) ** M, rising(N, 2 * M)))
    return c.truncate(q_order)


@dataclass
class HeatDecomposition:
    N: int
    M: int
    f: list
    scale: QSeries
    det: QSeries
    residual_checked_through: int
    certified_order: Fraction


def _taylor_matrix(N, M, x_order, q_order):
    phi = phi_about_minus_half(0, N, x_order, q_order)
    iterates = [phi]
    for _ in range(M):
        iterates.append(heat_apply(N, iterates[-1]))
    return phi, iterates


def heat_decomposition(N, M, q_order, check_extra=4, max_retries=3):
    """Solve for f_0..f_{M-1} (f_M = 1) killing Taylor orders 0..2M-2 at z = -1/2."""
    if N < 1 or M < 1:
        raise ValueError("need N >= 1 and M >= 1")
    q_order = Fraction(q_order)
    top = 2 * M + check_extra
    x_order = top + 2 * M + 1
    work = q_order + Fraction(N * M, 4) + 2
    for _ in range(max_retries + 1):
        _, its = _taylor_matrix(N, M, x_order, work)
        T = [[its[j].coeff(2 * k) for j in range(M)] for k in range(M)]
        rhs = [-its[M].coeff(2 * k) for k in range(M)]
        try:
            f = linalg.solve(T, rhs)
            det = linalg.determinant(T)
        except linalg.SingularSystem:
            work *= 2
            continue
        break
    else:
        raise SingularTaylorMatrix(f"T matrix singular to order {work} for N={N}, M={M}")
    f = f + [QSeries.one()]
    combo = its[0].scale(f[0])
    for j in range(1, M + 1):
        combo = combo + its[j].scale(f[j])
    c = heat_scale(N, M, work)
    lhs = phi_about_minus_half(2 * M, N + 2 * M, x_order, work)
    cert = INF
    for k in range(top + 1):
        d = lhs.coeff(k) - combo.coeff(k) * c
        if not d.truncate(q_order).is_zero():
            raise SingularTaylorMatrix(f"Taylor coefficient x^{k} does not match: {d!r}")
        cert = _qmin(cert, d.trunc)
    cert = _qmin(cert, min(x.trunc for x in f))
    return HeatDecomposition(N, M, f, c.truncate(q_order), det, top, min(cert, q_order))


# higher order Euler numbers ------------------------------------------------------

def euler_numbers(N, j_max):
    """[E^{(N)}_0, E^{(N)}_2, ..., E^{(N)}_{2 j_max}] from sec^N, exact integers."""
    # series in t = v^2
    cos = QSeries({k: Fraction((-1) ** k, math.factorial(2 * k)) for k in range(j_max + 1)}, 1, j_max + 1)
    sec_n = qs_inv(cos) ** N
    out = []
    for j in range(j_max + 1):
        val = sec_n.coeff(j) * math.factorial(2 * j)
        assert val.denominator == 1
        out.append(int(val))
    return out


def hankel_matrix(N, M):
    e = euler_numbers(N, 2 * M - 2)
    return [[e[j + k] for k in range(M)] for j in range(M)]


def hankel_nonvanishing(N, M):
    d = linalg.exact_det(hankel_matrix(N, M))
    if d == 0:
        raise ZeroDeterminant(f"Hankel determinant of sec^{N} moments vanishes at size {M}")
    assert d.denominator == 1
    return int(d)


def det_leading_prediction(N, M):
    """Predicted lowest coefficient of det T (at q^{-NM/8}) in terms of the Hankel determinant."""
    c = Fraction(1, 2 ** (N * M))
    for k in range(M):
        c /= 16**k * math.factorial(2 * k)
    return c * hankel_nonvanishing(N, M), Fraction(-N * M, 8)
