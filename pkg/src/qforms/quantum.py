"""Quantum-modular behaviour of the weight 3/2 partial theta functions at rationals.

Membership in the quantum sets, the periodic sequence gamma_{N,r}, L-values at
negative integers, the two asymptotic expansions (upper and lower half-plane),
the Eichler integral with its cocycles, and finite values at roots of unity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .oracle import PrecisionContext, chi_r, in_gamma1
from .qseries import QSeries


class MeanValueNonzero(ArithmeticError):
    pass


class RouteUnavailable(ValueError):
    pass


class SlowDecay(ArithmeticError):
    pass


class BranchAmbiguity(ValueError):
    pass


def _e(x):
    return mpmath.exp(2j * mpmath.pi * x)


def _mpq(x):
    x = Fraction(x)
    return mpmath.mpf(x.numerator) / x.denominator


def ord2(n):
    n = abs(int(n))
    if n == 0:
        raise ValueError("ord_2(0) is undefined")
    return (n & -n).bit_length() - 1


@dataclass(frozen=True)
class RationalPoint:
    h: int
    k: int

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("k must be positive")
        if math.gcd(self.h, self.k) != 1:
            raise ValueError(f"{self.h}/{self.k} is not in lowest terms")

    @classmethod
    def of(cls, x):
        x = Fraction(x)
        return cls(x.numerator, x.denominator)

    @property
    def value(self):
        return Fraction(self.h, self.k)

    def act(self, gamma):
        """gamma . (h/k) as a reduced point (None for the cusp at infinity)."""
        a, b, c, d = gamma
        num, den = a * self.h + b * self.k, c * self.h + d * self.k
        if den == 0:
            return None
        return RationalPoint.of(Fraction(num, den))


def _point(p):
    return p if isinstance(p, RationalPoint) else RationalPoint.of(p)


def branch(N, r):
    """Which of the three quantum-set cases applies to (N, r)."""
    if N % 2:
        raise ValueError("N must be even")
    half = N // 2
    if r % half:
        return "generic"
    return "half" if r % N == half % N and r % N != 0 else "zero"


def quantum_member(N, r, p):
    p = _point(p)
    b = branch(N, r)
    if b == "generic":
        return p.k % (N // 2) == 0 and ord2(p.k) == ord2(N) - 1
    if b == "half":
        return ord2(p.k) > ord2(N)
    return ord2(p.k) == ord2(N)


def for_quantum_member(a, b, p):
    """Membership in {h/k : h > 0, b | 2h, b does not divide h, k = a mod b, k >= a}."""
    if a <= 0 or math.gcd(a, b) != 1:
        raise ValueError("need a > 0 and gcd(a, b) = 1")
    p = _point(p)
    return p.h > 0 and (2 * p.h) % b == 0 and p.h % b != 0 and (p.k - a) % b == 0 and p.k >= a


def eval_G(a, b, tau, ctx=PrecisionContext()):
    """sum_{n>=0} (-1)^n q^{(n + a/b)^2}"""
    with ctx.work():
        tau = mpmath.mpc(tau)
        x0 = mpmath.mpf(a) / b
        s = mpmath.mpc(0)
        n = 0
        while True:
            x = n + x0
            t = _e(tau * x * x)
            s += -t if n % 2 else t
            if x > 0 and abs(t) < ctx.tolerance / 1000:
                return s
            n += 1
            if n > ctx.max_terms:
                raise SlowDecay("partial theta sum did not converge")


# Gauss sums -------------------------------------------------------------------------

def gauss_sum(a, b, c, ctx=PrecisionContext()):
    """sum_{n=0}^{c-1} e((a n^2 + b n)/c)"""
    if c < 1:
        raise ValueError("c must be positive")
    with ctx.work():
        s = mpmath.mpc(0)
        for n in range(c):
            s += _e(mpmath.mpf((a * n * n + b * n) % c) / c)
        return s


def gauss_vanishing(a, b, c, literal=False):
    """The first clause that forces G(a, b, c) = 0, or 'none'.

    The b = 0 clause needs c/gcd(a, c) = 2 mod 4, since G(a, 0, c) = g G(a/g, 0, c/g).
    ``literal=True`` tests c = 2 mod 4 instead, which misfires when gcd(a, c) > 1
    (G(2, 0, 6) = 2 G(1, 0, 3) is not zero).
    """
    g = math.gcd(a, c)
    if g > 1 and b % g:
        return "case1"
    if c % 4 == 0 and b % 2:
        return "case2"
    if b == 0 and (c if literal else c // g) % 4 == 2:
        return "case3"
    return "none"


_LIMB_BITS = 40
_LIMBS = 3


def _fixed_point_roots(c):
    """cos and sin of 2 pi j / c as 3 x 40-bit integer limbs (scale 2^119, so 1.0 still fits)."""
    scale = 1 << (_LIMB_BITS * _LIMBS - 1)
    mask = (1 << _LIMB_BITS) - 1
    out = np.zeros((c, 2 * _LIMBS), dtype=np.int64)
    with mpmath.workprec(200):
        for j in range(c):
            ang = 2 * mpmath.pi * j / c
            for part, val in enumerate((mpmath.cos(ang), mpmath.sin(ang))):
                v = int(mpmath.nint(val * scale))
                neg = v < 0
                v = abs(v)
                for i in range(_LIMBS):
                    limb = (v >> (_LIMB_BITS * i)) & mask
                    out[j, part * _LIMBS + i] = -limb if neg else limb
    return out


def gauss_table(c):
    """|G(a, b, c)| for all 0 <= a, b < c, summed exactly in fixed point (error < 1e-30).

    Each sum has c terms, so every limb dot product stays below 2^48.
    """
    n = np.arange(c, dtype=np.int64)
    a = np.arange(c, dtype=np.int64)[:, None, None]
    b = np.arange(c, dtype=np.int64)[None, :, None]
    exps = (a * n * n + b * n) % c  # shape (c, c, c)
    rows = (np.arange(c * c, dtype=np.int64)[:, None] * c + exps.reshape(c * c, c)).ravel()
    counts = np.bincount(rows, minlength=c * c * c).reshape(c * c, c)
    limbs = _fixed_point_roots(c)
    dots = counts @ limbs  # exact int64
    out = np.empty((c, c))
    scale = 2 ** (_LIMB_BITS * _LIMBS - 1)
    for idx in range(c * c):
        re = sum(int(dots[idx, i]) << (_LIMB_BITS * i) for i in range(_LIMBS))
        im = sum(int(dots[idx, _LIMBS + i]) << (_LIMB_BITS * i) for i in range(_LIMBS))
        out[idx // c, idx % c] = math.hypot(re / scale, im / scale)
    return out


# periodic sequences and L-values ------------------------------------------------

@dataclass
class PeriodicSeq:
    """chi(n) = values[n mod period]."""

    period: int
    values: list

    def __post_init__(self):
        if self.period < 1 or len(self.values) != self.period:
            raise ValueError("values must have one entry per residue")

    @classmethod
    def from_one_based(cls, vals: Sequence):
        """Build from chi(1), ..., chi(k)."""
        vals = list(vals)
        return cls(len(vals), [vals[-1]] + vals[:-1])

    def __call__(self, n):
        return self.values[n % self.period]

    @property
    def parity(self):
        tol = mpmath.mpf(10) ** (-(mpmath.mp.dps - 5))
        k = self.period
        if all(abs(self.values[n] - self.values[-n % k]) <= tol for n in range(k)):
            return "even"
        if all(abs(self.values[n] + self.values[-n % k]) <= tol for n in range(k)):
            return "odd"
        return "none"

    def mean_value(self):
        return mpmath.fsum(self.values) / self.period


def gamma_seq(N, r, p, ctx=PrecisionContext(), assert_mean_zero=None):
    """gamma_{N,r}(n) = mult(n) e(h n^2 / 2kN), mult(n) = #{s in {r, -r} : n = s mod N}.

    The multiset count gives 2 on n = 0 mod N when r = 0 and on n = N/2 mod N
    when r = N/2, matching Theta(N, r) + Theta(N, -r) term by term.
    """
    if N % 2 or not 0 <= r <= N - 1:
        raise ValueError("need N even and 0 <= r <= N-1")
    p = _point(p)
    period = 2 * p.k * N
    with ctx.work():
        vals = []
        for n in range(period):
            mult = (n % N == r % N) + (n % N == (-r) % N)
            vals.append(mult * _e(mpmath.mpf(p.h * n * n % period) / period) if mult else mpmath.mpc(0))
        seq = PeriodicSeq(period, vals)
        if assert_mean_zero is None:
            assert_mean_zero = quantum_member(N, r, p)
        if assert_mean_zero and abs(seq.mean_value()) > 10 * ctx.tolerance:
            raise MeanValueNonzero(f"gamma_{{{N},{r}}} at {p.h}/{p.k} has mean {mpmath.nstr(seq.mean_value(), 5)}")
        return seq


def _check_mean(chi, ctx):
    if abs(chi.mean_value()) > 10 * ctx.tolerance * max(1, max(abs(v) for v in chi.values)):
        raise MeanValueNonzero("L(s, chi) has a pole at s = 1 unless chi has mean value zero")


def l_value(m, chi, ctx=PrecisionContext()):
    """L(-m, chi) = -k^m/(m+1) sum_{n=1}^k chi(n) B_{m+1}(n/k)."""
    if m < 0:
        raise ValueError("m must be non-negative")
    with ctx.work():
        _check_mean(chi, ctx)
        k = chi.period
        s = mpmath.mpc(0)
        for n in range(1, k + 1):
            v = chi(n)
            if v:
                s += v * mpmath.bernpoly(m + 1, mpmath.mpf(n) / k)
        return -mpmath.mpf(k) ** m / (m + 1) * s


def abel_l_value(m, chi, ctx=PrecisionContext(), nodes=24):
    """lim_{t -> 0+} sum_n chi(n) n^m e^{-nt}, extrapolated from positive t.

    Each residue class is a geometric series, so the sum at fixed t is
    sum_s chi(s) (-d/dt)^m [e^{-st}/(1 - e^{-kt})].
    """
    with ctx.work():
        _check_mean(chi, ctx)
        k = chi.period
        residues = [(s, chi(s)) for s in range(1, k + 1) if chi(s)]

        def f(t):
            total = mpmath.mpc(0)
            for s, v in residues:
                g = lambda x, s=s: mpmath.exp(-s * x) / (1 - mpmath.exp(-k * x))
                total += v * (-1) ** m * mpmath.diff(g, t, m)
            return total

        # analytic for |t| < 2 pi / k; sample well inside and extrapolate to 0
        T = mpmath.pi / (2 * k)
        ts = [T * (j + 1) / nodes for j in range(nodes)]
        fs = [f(t) for t in ts]
        # Neville at t = 0
        p = list(fs)
        for lvl in range(1, nodes):
            for i in range(nodes - lvl):
                p[i] = (ts[i + lvl] * p[i] - ts[i] * p[i + 1]) / (ts[i + lvl] - ts[i])
        return p[0]


def dirichlet_eta_value(s, ctx=PrecisionContext()):
    """(1 - 2^{1-s}) zeta(s): the L-function of (1, -1, 1, -1, ...)."""
    with ctx.work():
        return (1 - mpmath.mpf(2) ** (1 - s)) * mpmath.zeta(s)


# asymptotic expansions ------------------------------------------------------------------

def asymptotic_coeffs(N, r, p, n_max, ctx=PrecisionContext()):
    """a_n = (1/N) (-1)^n L(-2n-1, gamma_{N,r}) / n! / (2N)^n for n <= n_max."""
    p = _point(p)
    if not quantum_member(N, r, p):
        raise ValueError(f"{p.h}/{p.k} is not in the quantum set for N={N}, r={r}")
    with ctx.work():
        g = gamma_seq(N, r, p, ctx)
        return [
            (-1) ** n * l_value(2 * n + 1, g, ctx) / (N * mpmath.factorial(n) * mpmath.mpf(2 * N) ** n)
            for n in range(n_max + 1)
        ]


def eval_partial32(N, r, tau, ctx=PrecisionContext()):
    """Theta_{3/2}(N, r; tau) = sum_{n>=0} (-1)^{Nn} (n + r/N) q^{N/2 (n + r/N)^2}."""
    with ctx.work():
        tau = mpmath.mpc(tau)
        x0 = _mpq(Fraction(r, N))
        decay = float(N * mpmath.pi * tau.imag)
        if decay <= 0:
            raise ValueError("need Im tau > 0")
        s = mpmath.mpc(0)
        n = 0
        while True:
            x = n + x0
            t = x * _e(N * tau * x * x / 2)
            s += -t if (N * n) % 2 else t
            if x > 0 and N * mpmath.pi * tau.imag * x * x > ctx.bits * 0.7 + 20 + mpmath.log(abs(x) + 1):
                return s
            n += 1
            if n > ctx.max_terms:
                raise SlowDecay("partial theta sum needs too many terms")


def theta_plus_shifted(N, r, tau, ctx=PrecisionContext()):
    """Theta^+(N, r) + (r/N) q^{r^2/2N}, from the two partial theta sums."""
    with ctx.work():
        tau = mpmath.mpc(tau)
        return eval_partial32(N, r, tau, ctx) + eval_partial32(N, -r, tau, ctx) + _mpq(Fraction(r, N)) * _e(
            tau * r * r / (2 * N)
        )


def gamma_inc_half(x, ctx=PrecisionContext()):
    """Gamma(-1/2; x) = 2 e^{-x}/sqrt(x) - 2 sqrt(pi) erfc(sqrt(x)) for x > 0."""
    with ctx.work():
        x = mpmath.mpf(x)
        if x <= 0:
            raise ValueError("x must be positive")
        return 2 * mpmath.exp(-x) / mpmath.sqrt(x) - 2 * mpmath.sqrt(mpmath.pi) * mpmath.erfc(mpmath.sqrt(x))


def _pos_support(N, r):
    """(m, multiplicity) for m > 0 with m = +-r mod N, as an infinite generator."""
    m = 1
    while True:
        mult = (m % N == r % N) + (m % N == (-r) % N)
        if mult:
            yield m, mult
        m += 1


def eichler_star(N, r, tau, ctx=PrecisionContext(), normalization="series"):
    """Theta*_{1/2}(N, r; tau) for Im tau < 0 as an incomplete-gamma series.

    series:   -1/(2N sqrt(pi)) sum_{m = +-r mod N} |m| Gamma(-1/2; -4 pi m^2 Im(tau)/2N) q^{m^2/2N}
    integral: the same times -i, which is what the defining integral produces with
              principal branches.

    For r = 0 mod N the m = 0 term is the limit -1/(pi sqrt(2N |Im tau|)); it cancels
    the t^{-1/2} growth of the m > 0 part near rational points.
    """
    if normalization not in ("series", "integral"):
        raise ValueError("normalization must be 'series' or 'integral'")
    with ctx.work():
        tau = mpmath.mpc(tau)
        if tau.imag >= 0:
            raise ValueError("need Im tau < 0")
        y = -tau.imag
        s = mpmath.mpc(0)
        for m, mult in _pos_support(N, r):
            x = 4 * mpmath.pi * m * m * y / (2 * N)
            s += mult * m * gamma_inc_half(x, ctx) * _e(m * m * tau / (2 * N))
            if x > ctx.bits * 0.7 + 20:
                break
        out = -s / (2 * N * mpmath.sqrt(mpmath.pi))
        if r % N == 0:
            out -= 1 / (mpmath.pi * mpmath.sqrt(2 * N * y))
        return out if normalization == "series" else -1j * out


def theta_half_tilde(N, r, z, ctx=PrecisionContext(), drop_constant=False):
    """sum_{m = r mod N} q^{m^2/2N} at z (Im z > 0)."""
    with ctx.work():
        z = mpmath.mpc(z)
        y = z.imag
        if y <= 0:
            raise ValueError("need Im z > 0")
        K = int(mpmath.sqrt((ctx.bits * 0.7 + 30) * N / (mpmath.pi * y))) + 2
        s = mpmath.mpc(0)
        for n in range(-K // N - 2, K // N + 3):
            m = r + N * n
            if m == 0 and drop_constant:
                continue
            s += _e(m * m * z / (2 * N))
        return s


def theta_half_tilde_near_cusp(N, r, x, u, ctx=PrecisionContext(), drop_constant=False):
    """The same theta at z = x + iu (x rational), by Poisson summation in each residue class."""
    x = Fraction(x)
    with ctx.work():
        u = mpmath.mpf(u)
        P = 2 * x.denominator
        A = u * N * P * P
        s = mpmath.mpc(0)
        K = int(mpmath.sqrt((ctx.bits * 0.7 + 30) * A / mpmath.pi)) + 2
        for j in range(P):
            m = r + N * j
            phase = _e(_mpq(x * m * m / (2 * N) % 1))
            inner = mpmath.mpc(0)
            for kk in range(-K, K + 1):
                inner += mpmath.exp(-mpmath.pi * kk * kk / A) * _e(mpmath.mpf(kk * m) / (N * P))
            s += phase * inner / mpmath.sqrt(A)
        if drop_constant and r % N == 0:
            s -= 1
        return s


def eichler_integral(N, r, tau, ctx=PrecisionContext()):
    """Theta*_{1/2} by quadrature along z = conj(tau) + iu (integral normalization)."""
    with ctx.work():
        tau = mpmath.mpc(tau)
        if tau.imag >= 0:
            raise ValueError("need Im tau < 0")
        zb = mpmath.conj(tau)

        def f(u):
            z = zb + 1j * u
            return theta_half_tilde(N, r, z, ctx) * (z - tau) ** (-mpmath.mpf(3) / 2) * 1j

        val = mpmath.quad(f, [0, 1, mpmath.inf])
        return -val / (2 * mpmath.pi * mpmath.sqrt(1j * N))


def cocycle(N, r, x, tau, ctx=PrecisionContext(), cusp_switch=0.05):
    """r_x(tau) = 1/(2 pi sqrt(iN)) int_x^{i inf} theta_{1/2}(N, r; z) (z - tau)^{-3/2} dz."""
    x = Fraction(x)
    with ctx.work():
        tau = mpmath.mpc(tau)
        if tau.imag >= 0:
            raise ValueError("need Im tau < 0")
        xr = _mpq(x)

        def f(u):
            z = xr + 1j * u
            if u < cusp_switch:
                th = theta_half_tilde_near_cusp(N, r, x, u, ctx)
            else:
                th = theta_half_tilde(N, r, z, ctx)
            w = z - tau
            if w.imag <= 0:
                raise BranchAmbiguity("path meets the branch cut of (z - tau)^{3/2}")
            return th * w ** (-mpmath.mpf(3) / 2) * 1j

        val = mpmath.quad(f, [0, cusp_switch, 1, mpmath.inf])
        return val / (2 * mpmath.pi * mpmath.sqrt(1j * N))


def cocycle_residual(N, r, gamma, tau, ctx=PrecisionContext()):
    """|Theta*(gamma tau) chi_r(gamma)^{-1} (c tau + d)^{-3/2} - Theta*(tau) - r_{-d/c}(tau)|"""
    a, b, c, d = gamma
    if not in_gamma1(gamma, 2 * N) or c == 0:
        raise ValueError("need gamma in Gamma_1(2N) with c != 0")
    with ctx.work():
        tau = mpmath.mpc(tau)
        gt = (a * tau + b) / (c * tau + d)
        star = lambda t: eichler_star(N, r, t, ctx, normalization="integral")
        lhs = star(gt) / chi_r(N, r, gamma) * (c * tau + d) ** (-mpmath.mpf(3) / 2) - star(tau)
        rhs = cocycle(N, r, Fraction(-d, c), tau, ctx)
        return abs(lhs - rhs), abs(rhs)


@dataclass
class LimitReport:
    N: int
    r: int
    point: RationalPoint
    t_list: list
    coeffs: list
    upper_errors: dict
    lower_errors: dict
    upper_slopes: dict
    lower_slopes: dict


def _fit_slope(ts, errs):
    xs = [math.log(float(t)) for t in ts]
    ys = [math.log(float(e)) for e in errs]
    mx, my = sum(xs) / len(xs), sum(ys) / len(ys)
    return sum((a - mx) * (b - my) for a, b in zip(xs, ys)) / sum((a - mx) ** 2 for a in xs)


def theta_limit_checks(N, r, p, t_list, n0_list=(1, 2, 3), ctx=PrecisionContext()):
    """Truncated expansions sum_{n<n0} a_n (+-t)^n against direct evaluations on both sides."""
    p = _point(p)
    ts = [mpmath.mpf(t) for t in t_list]
    if any(b >= a for a, b in zip(ts, ts[1:])) or ts[-1] <= 0:
        raise ValueError("t_list must be positive and decreasing")
    with ctx.work():
        coeffs = asymptotic_coeffs(N, r, p, max(n0_list), ctx)
        x = _mpq(p.value)
        up = [theta_plus_shifted(N, r, x + 1j * t / (2 * mpmath.pi), ctx) for t in ts]
        lo = [eichler_star(N, r, x - 1j * t / (2 * mpmath.pi), ctx) for t in ts]
        ue, le, us, ls = {}, {}, {}, {}
        for n0 in n0_list:
            ue[n0] = [abs(v - sum(coeffs[n] * t**n for n in range(n0))) for v, t in zip(up, ts)]
            le[n0] = [abs(v - sum(coeffs[n] * (-t) ** n for n in range(n0))) for v, t in zip(lo, ts)]
            us[n0] = _fit_slope(ts, ue[n0])
            ls[n0] = _fit_slope(ts, le[n0])
        return LimitReport(N, r, p, [float(t) for t in ts], coeffs, ue, le, us, ls)


# finite values at roots of unity --------------------------------------------------

class Dual:
    """a + b eps with eps^2 = 0; ``zero`` marks an exactly vanishing real part."""

    __slots__ = ("a", "b", "zero")

    def __init__(self, a, b=0, zero=False):
        self.a = mpmath.mpc(0) if zero else mpmath.mpc(a)
        self.b = mpmath.mpc(b)
        self.zero = zero

    def __mul__(self, o):
        if not isinstance(o, Dual):
            return Dual(self.a * o, self.b * o, self.zero)
        return Dual(self.a * o.a, self.a * o.b + self.b * o.a, self.zero or o.zero)

    def inv(self):
        if self.zero:
            raise ZeroDivisionError("dual number with zero real part")
        return Dual(1 / self.a, -self.b / self.a**2)

    def __add__(self, o):
        return Dual(self.a + o.a, self.b + o.b, self.zero and o.zero)

    def is_null(self):
        return self.zero and self.b == 0


def _factor(c, y, has_A, A0):
    """1 - c e(y) (A/A0 if has_A) as a dual number in A at A = A0; exact zero detection on y."""
    y = Fraction(y)
    val_zero = c == 1 and y.denominator == 1 or c == -1 and (y - Fraction(1, 2)).denominator == 1
    v = c * _e(_mpq(y % 1))
    if has_A:
        # d/dA (1 - v A/A0) = -v/A0
        return Dual(1 - v, -v / A0, val_zero)
    return Dual(1 - v, 0, val_zero)


def warnaar_route(N, r, p, ctx=PrecisionContext(), max_terms=None):
    """Theta_{3/2}(N, r) at e(h/k) from the derivative of the Warnaar identity in A.

    With Q = q^{N/2} and A0 = -Q^{2r/N - 1},
    Theta = Q^{r^2/N^2} [ (r/N) L(A0) + A0 L'(A0) ],
    L(A) = sum_n (Q;Q^2)_n (AQ;Q^2)_n (AQ)^n / (-AQ;Q)_{2n+1}.
    """
    p = _point(p)
    if N % 2 or r % (N // 2) == 0:
        raise RouteUnavailable("Warnaar route needs N even and N/2 not dividing r")
    if not quantum_member(N, r, p):
        raise RouteUnavailable(f"{p.h}/{p.k} is not in the quantum set")
    # Q^x = e(N h x / 2k)
    qexp = lambda x: Fraction(N * p.h, 2 * p.k) * Fraction(x)
    base = Fraction(2 * r, N) - 1  # A0 = -Q^base
    if max_terms is None:
        max_terms = 8 * p.k * N + 16
    with ctx.work():
        A0 = -_e(_mpq(qexp(base) % 1))
        total = Dual(0)
        poch_q = Dual(1)  # (Q;Q^2)_n
        poch_a = Dual(1)  # (AQ;Q^2)_n
        den = Dual(1)  # (-AQ;Q)_{2n+1}
        # 1 + A Q^j = 1 - Q^{base + j} at A = A0
        den = den * _factor(1, qexp(base + 1), True, A0)
        n = 0
        while True:
            # (AQ)^n as a dual number: (A0 Q)^n (1 + n eps/A0)
            aq = (A0 * _e(_mpq(qexp(1) % 1))) ** n
            power = Dual(aq, n * aq / A0)
            term = poch_q * poch_a * power * den.inv()
            total = total + term
            if poch_q.zero or (poch_a.zero and poch_a.b == 0):
                break
            poch_q = poch_q * _factor(1, qexp(2 * n + 1), False, A0)
            poch_a = poch_a * _factor(-1, qexp(base + 1 + 2 * n), True, A0)
            den = den * _factor(1, qexp(base + 2 * n + 2), True, A0)
            den = den * _factor(1, qexp(base + 2 * n + 3), True, A0)
            n += 1
            if n > max_terms:
                raise RouteUnavailable("hypergeometric sum did not terminate")
        pref = _e(_mpq(qexp(Fraction(r * r, N * N)) % 1))
        return pref * (_mpq(Fraction(r, N)) * total.a + A0 * total.b)


def _poch_phase(c, y0, step, n):
    """prod_{j<n} (1 - c e(y0 + j step)) with exact zero detection."""
    out = mpmath.mpc(1)
    for j in range(n):
        f = _factor(c, Fraction(y0) + j * Fraction(step), False, 1)
        if f.zero:
            return mpmath.mpc(0)
        out *= f.a
    return out


def sum_of_tails_half(N, p, ctx=PrecisionContext()):
    """Theta_{3/2}(N, N/2) at e(h/k) via Theta(2, 1; N tau/2) and the sum-of-tails identity.

    Theta(2,1; s) = s^{1/4}-phase [S1 + S0/2], S0 -> 0 (vanishing eta quotient) and
    S1 -> -sum_{n<K/2} (p^2;p^2)_n/(p;p^2)_{n+1} with p = e(2s) of even order K.
    """
    p0 = _point(p)
    if N % 2 or not quantum_member(N, N // 2, p0):
        raise RouteUnavailable("needs ord_2(k) > ord_2(N)")
    s = Fraction(N * p0.h, 2 * p0.k)
    pe = (2 * s) % 1  # p = e(pe)
    K = pe.denominator
    if K % 2:
        raise RouteUnavailable("p must have even order")
    with ctx.work():
        total = mpmath.mpc(0)
        for n in range(K // 2):
            num = _poch_phase(1, 2 * pe, 2 * pe, n)
            dn = _poch_phase(1, pe, 2 * pe, n + 1)
            if dn == 0:
                raise RouteUnavailable("denominator vanishes")
            total += num / dn
        return _e(_mpq(s / 4 % 1)) * (-total)


def sum_of_tails_zero(N, p, ctx=PrecisionContext()):
    """Theta_{3/2}(N, 0) at e(h/k): sum n u^{n^2}(-1)^n with u = e(Nh/2k + 1/2) of odd order K.

    The identity gives -(1/4) sum_{n<K} (u)_n/(-u)_n.
    """
    p0 = _point(p)
    if N % 2 or not quantum_member(N, 0, p0):
        raise RouteUnavailable("needs ord_2(k) = ord_2(N)")
    ue = (Fraction(N * p0.h, 2 * p0.k) + Fraction(1, 2)) % 1
    K = ue.denominator
    if K % 2 == 0:
        raise RouteUnavailable("u must have odd order")
    with ctx.work():
        total = mpmath.mpc(0)
        for n in range(K):
            total += _poch_phase(1, ue, ue, n) / _poch_phase(-1, ue, ue, n)
        return -total / 4


def finite_value(N, r, p, ctx=PrecisionContext()):
    b = branch(N, r)
    if b == "generic":
        return warnaar_route(N, r, p, ctx)
    if b == "half":
        return sum_of_tails_half(N, p, ctx)
    return sum_of_tails_zero(N, p, ctx)


def radial_limit(N, r, p, ctx=PrecisionContext(), nodes=12, T=None):
    """lim_{t -> 0+} Theta_{3/2}(N, r; h/k + it/2pi), extrapolated from t in (0, T].

    Besides a power series in t there is a piece of size about exp(-pi^2/(N k^2 t));
    the default T = 0.5/(N k^2) keeps it negligible.
    """
    p = _point(p)
    if T is None:
        T = mpmath.mpf(1) / (2 * N * p.k**2)
    with ctx.work():
        x = _mpq(p.value)
        ts = [mpmath.mpf(T) * (j + 1) / nodes for j in range(nodes)]
        fs = [eval_partial32(N, r, x + 1j * t / (2 * mpmath.pi), ctx) for t in ts]
        q = list(fs)
        for lvl in range(1, nodes):
            for i in range(nodes - lvl):
                q[i] = (ts[i + lvl] * q[i] - ts[i] * q[i + 1]) / (ts[i + lvl] - ts[i])
        return q[0]


@dataclass
class RootOfUnityReport:
    finite: complex
    from_l_value: complex
    numeric_limit: complex

    def max_discrepancy(self):
        vals = (self.finite, self.from_l_value, self.numeric_limit)
        return max(abs(a - b) for a in vals for b in vals)


def root_of_unity_value(N, r, p, ctx=PrecisionContext()):
    """Theta_{3/2}(N, r) at e(h/k) three ways: finite formula, a_0/2, radial limit.

    Theta = (Theta^+ + Theta^-)/2; Theta^+ + (r/N)q^{r^2/2N} tends to a_0, and
    Theta^- - (r/N)q^{r^2/2N} is a weight 3/2 theta that vanishes at these cusps.
    """
    if not 0 <= r <= N - 1:
        raise ValueError("need 0 <= r <= N-1")
    p = _point(p)
    with ctx.work():
        fin = finite_value(N, r, p, ctx)
        a0 = asymptotic_coeffs(N, r, p, 0, ctx)[0]
        lim = radial_limit(N, r, p, ctx)
        return RootOfUnityReport(fin, a0 / 2, lim)


# exact series identities ------------------------------------------------------------

def _bi_mul(x, y, amax, qmax):
    out = {}
    for (a1, q1), c1 in x.items():
        for (a2, q2), c2 in y.items():
            a, q = a1 + a2, q1 + q2
            if a < amax and q < qmax:
                out[(a, q)] = out.get((a, q), 0) + c1 * c2
    return {k: v for k, v in out.items() if v}


def _bi_inv_linear(coef, a, q, amax, qmax):
    """1/(1 - coef A^a q^q) as a truncated geometric series (a + q > 0)."""
    out = {}
    m = 0
    while m * a < amax and m * q < qmax:
        out[(m * a, m * q)] = coef**m
        m += 1
    return out


def warnaar_identity_series(a_order=10, q_order=30):
    """(lhs, rhs) of the Warnaar identity as dicts {(A-power, q-power): int}."""
    amax, qmax = a_order, q_order
    lhs = {}
    n = 0
    while n < amax and n < qmax:
        term = {(n, n): 1}  # (Aq)^n
        for j in range(n):
            term = _bi_mul(term, {(0, 0): 1, (0, 2 * j + 1): -1}, amax, qmax)  # (q;q^2)_n
            term = _bi_mul(term, {(0, 0): 1, (1, 2 * j + 1): -1}, amax, qmax)  # (Aq;q^2)_n
        for j in range(1, 2 * n + 2):
            term = _bi_mul(term, _bi_inv_linear(-1, 1, j, amax, qmax), amax, qmax)  # 1/(-Aq;q)_{2n+1}
        for key, v in term.items():
            lhs[key] = lhs.get(key, 0) + v
        n += 1
    lhs = {k: v for k, v in lhs.items() if v}
    rhs = {}
    n = 0
    while n < amax and n * (n + 1) < qmax:
        rhs[(n, n * (n + 1))] = (-1) ** n
        n += 1
    return lhs, rhs


def _qpoch(a_exp, step, n, order, sign=1):
    """prod_{j<n} (1 - sign q^{a_exp + j step}) as a QSeries."""
    out = QSeries.one(order)
    for j in range(n):
        e = a_exp + j * step
        if e >= order:
            break
        out = out * QSeries.from_exponents({0: 1, e: -sign}, order)
    return out


def rzero_sot_series(order=30, lambert_sign=-1):
    """(lhs, rhs) of sum_{n>=1} n q^{(n^2+n)/2} = s P sum (-1)^n q^n/(1-q^n) + sum_n (P - P_n).

    P = (q^2;q^2)_inf/(q;q^2)_inf, P_n = (q^2;q^2)_n/(q;q^2)_{n+1}. The identity
    holds with s = -1; s = +1 is kept to show that reading fails.
    """
    order = Fraction(order)
    lhs = QSeries.from_exponents({Fraction(n * (n + 1), 2): n for n in range(1, int(order) + 2) if n * (n + 1) < 2 * order}, order)
    big = int(order) + 2
    P = _qpoch(2, 2, big, order) / _qpoch(1, 2, big, order)
    lam = QSeries.zero(order)
    for n in range(1, big):
        lam = lam + QSeries.from_exponents({n: (-1) ** n}, order) / _qpoch(n, 1, 1, order)
    rhs = P * lam * lambert_sign
    for n in range(big):
        Pn = _qpoch(2, 2, n, order) / _qpoch(1, 2, n + 1, order)
        rhs = rhs + (P - Pn)
    return lhs, rhs


def ajuo38_series(order=30):
    """(lhs, rhs) of 4 sum (-1)^n n q^{n^2} = -2 P sum q^n/(1-q^{2n}) + sum_n (P - (q)_n/(-q)_n)."""
    order = Fraction(order)
    lhs = QSeries.from_exponents({n * n: 4 * (-1) ** n * n for n in range(1, int(order) + 1) if n * n < order}, order)
    big = int(order) + 2
    P = _qpoch(1, 1, big, order) / _qpoch(1, 1, big, order, sign=-1)
    lam = QSeries.zero(order)
    for n in range(1, big):
        lam = lam + QSeries.from_exponents({n: 1}, order) / _qpoch(2 * n, 1, 1, order)
    rhs = P * lam * (-2)
    for n in range(big):
        Pn = _qpoch(1, 1, n, order) / _qpoch(1, 1, n, order, sign=-1)
        rhs = rhs + (P - Pn)
    return lhs, rhs
