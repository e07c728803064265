"""Exact truncated Puiseux series in q with rational coefficients.

A :class:`QSeries` stores coefficients on a grid ``q^(n/D)`` together with a
truncation ``theta``: coefficients at exponents ``>= theta`` are unknown.
Exact (untruncated) values such as monomials use ``theta = INF``.
"""

from __future__ import annotations

import hashlib
import json
import math
from fractions import Fraction
from functools import lru_cache

import mpmath

INF = math.inf
MAX_GRID = 10**6


class GridOverflow(ValueError):
    pass


class NotInvertible(ZeroDivisionError):
    pass


class CacheError(ValueError):
    pass


class VersionMismatch(CacheError):
    pass


def _frac(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise TypeError("floats are not allowed in exact series")
    return Fraction(x)


def _lcm(a, b):
    g = a * b // math.gcd(a, b)
    if g > MAX_GRID:
        raise GridOverflow(f"grid denominator {g} exceeds {MAX_GRID}")
    return g


def _trunc(t):
    return t if t == INF else _frac(t)


def _tadd(t, v):
    if t == INF or v == INF:
        return INF
    return t + v


class QSeries:
    """Truncated series sum c_n q^(n/grid), valid for exponents below ``trunc``."""

    __slots__ = ("grid", "terms", "trunc")

    def __init__(self, terms=None, grid=1, trunc=INF):
        grid = int(grid)
        if grid <= 0:
            raise ValueError("grid must be positive")
        trunc = _trunc(trunc)
        clean = {}
        if terms:
            lim = None if trunc == INF else trunc * grid
            for n, c in terms.items():
                if c == 0:
                    continue
                if lim is not None and n >= lim:
                    continue
                clean[int(n)] = _frac(c)
        self.grid = grid
        self.terms = clean
        self.trunc = trunc

    # construction helpers -------------------------------------------------
    @classmethod
    def from_exponents(cls, pairs, trunc=INF):
        """Build from ``{exponent: coeff}`` with rational exponents."""
        pairs = {Fraction(e): _frac(c) for e, c in dict(pairs).items()}
        grid = 1
        for e in pairs:
            grid = _lcm(grid, e.denominator)
        terms = {}
        for e, c in pairs.items():
            n = int(e * grid)
            terms[n] = terms.get(n, 0) + c
        return cls(terms, grid, trunc)

    @classmethod
    def monomial(cls, exponent, coeff=1, trunc=INF):
        return cls.from_exponents({Fraction(exponent): coeff}, trunc)

    @classmethod
    def zero(cls, trunc=INF, grid=1):
        return cls({}, grid, trunc)

    @classmethod
    def one(cls, trunc=INF):
        return cls({0: 1}, 1, trunc)

    # basic queries --------------------------------------------------------
    def is_zero(self):
        return not self.terms

    def valuation(self):
        """Lowest exponent present; the truncation for the zero series."""
        if not self.terms:
            return self.trunc
        return Fraction(min(self.terms), self.grid)

    def leading(self):
        if not self.terms:
            raise NotInvertible("series has no leading term below its truncation")
        n = min(self.terms)
        return Fraction(n, self.grid), self.terms[n]

    def coeff(self, exponent):
        e = Fraction(exponent)
        if self.trunc != INF and e >= self.trunc:
            raise ValueError(f"coefficient at {e} is beyond truncation {self.trunc}")
        n = e * self.grid
        if n.denominator != 1:
            return Fraction(0)
        return self.terms.get(int(n), Fraction(0))

    def items(self):
        """Sorted (exponent, coeff) pairs with exponents as Fractions."""
        return [(Fraction(n, self.grid), self.terms[n]) for n in sorted(self.terms)]

    def regrid(self, grid):
        if grid % self.grid:
            raise ValueError("new grid must be a multiple of the old one")
        f = grid // self.grid
        return QSeries({n * f: c for n, c in self.terms.items()}, grid, self.trunc)

    def coarsen(self):
        """Smallest grid carrying the same terms (and truncation)."""
        g = self.grid
        for n in self.terms:
            g = math.gcd(g, n)
        if self.trunc != INF:
            g = math.gcd(g, self.grid // Fraction(self.trunc).denominator)
        if g <= 1:
            return self
        return QSeries({n // g: c for n, c in self.terms.items()}, self.grid // g, self.trunc)

    def truncate(self, order):
        """Drop everything at exponents >= order (order may only lower theta)."""
        order = _trunc(order)
        t = order if self.trunc == INF else (min(self.trunc, order) if order != INF else self.trunc)
        return QSeries(self.terms, self.grid, t)

    def _aligned(self, other):
        g = _lcm(self.grid, other.grid)
        a = self if self.grid == g else self.regrid(g)
        b = other if other.grid == g else other.regrid(g)
        return a, b, g

    # arithmetic -------------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, QSeries):
            other = QSeries.one() * _frac(other)
        a, b, g = self._aligned(other)
        t = min(a.trunc, b.trunc)
        terms = dict(a.terms)
        for n, c in b.terms.items():
            terms[n] = terms.get(n, 0) + c
        return QSeries(terms, g, t)

    __radd__ = __add__

    def __neg__(self):
        return QSeries({n: -c for n, c in self.terms.items()}, self.grid, self.trunc)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        c = _frac(c)
        if c == 0:
            return QSeries({}, self.grid, self.trunc)
        return QSeries({n: v * c for n, v in self.terms.items()}, self.grid, self.trunc)

    def __mul__(self, other):
        if not isinstance(other, QSeries):
            return self.scale(other)
        return qs_mul(self, other)

    def __rmul__(self, other):
        return self.scale(other)

    def __truediv__(self, other):
        if not isinstance(other, QSeries):
            return self.scale(1 / _frac(other))
        return qs_mul(self, qs_inv(other))

    def __pow__(self, k):
        k = int(k)
        if k < 0:
            return qs_inv(self) ** (-k)
        result = None
        base = self
        while True:
            if k & 1:
                result = base if result is None else qs_mul(result, base)
            k >>= 1
            if not k:
                break
            base = qs_mul(base, base)
        if result is None:
            return QSeries.one(INF)
        return result

    def shift(self, exponent):
        """Multiply by q^exponent (exact)."""
        e = Fraction(exponent)
        g = _lcm(self.grid, e.denominator)
        a = self if g == self.grid else self.regrid(g)
        s = int(e * g)
        return QSeries({n + s: c for n, c in a.terms.items()}, g, _tadd(a.trunc, e))

    def substitute(self, factor):
        """Replace q by q^factor for a positive rational factor."""
        f = Fraction(factor)
        if f <= 0:
            raise ValueError("substitution factor must be positive")
        pairs = {Fraction(n, self.grid) * f: c for n, c in self.terms.items()}
        t = self.trunc if self.trunc == INF else self.trunc * f
        return QSeries.from_exponents(pairs, t)

    # comparison -------------------------------------------------------------
    def agrees_with(self, other, order=None):
        """Coefficientwise equality below min(truncations, order)."""
        t = min(self.trunc, other.trunc)
        if order is not None:
            t = min(t, _trunc(order))
        return (self - other).truncate(t).is_zero()

    def __eq__(self, other):
        if not isinstance(other, QSeries):
            return NotImplemented
        if self.trunc != other.trunc:
            return False
        a, b, _ = self._aligned(other)
        return a.terms == b.terms

    def __hash__(self):
        return hash((tuple(sorted(self.coarsen().terms.items())), self.trunc))

    def __repr__(self):
        parts = []
        for e, c in self.items()[:8]:
            parts.append(f"{c}*q^{e}")
        more = " + ..." if len(self.terms) > 8 else ""
        return f"QSeries({' + '.join(parts) or '0'}{more}; O(q^{self.trunc}))"

    # numerics ---------------------------------------------------------------
    def evaluate(self, tau):
        """Numerical value at q = e^{2 pi i tau} (mpmath, current precision)."""
        tau = mpmath.mpc(tau)
        s = mpmath.mpc(0)
        two_pi_i = 2j * mpmath.pi
        for n, c in self.terms.items():
            s += mpmath.mpf(c.numerator) / c.denominator * mpmath.exp(two_pi_i * tau * n / self.grid)
        return s

    # serialization ------------------------------------------------------------
    def to_json(self):
        trunc = "inf" if self.trunc == INF else str(self.trunc)
        return {
            "grid": self.grid,
            "truncation": trunc,
            "terms": [[str(n), str(self.terms[n])] for n in sorted(self.terms)],
        }

    @classmethod
    def from_json(cls, data):
        trunc = INF if data["truncation"] == "inf" else Fraction(data["truncation"])
        terms = {int(n): Fraction(c) for n, c in data["terms"]}
        return cls(terms, int(data["grid"]), trunc)


def qs_mul(a, b):
    """Product with truncation min(theta_a + val(b), theta_b + val(a))."""
    a, b, g = a._aligned(b)
    t = min(_tadd(a.trunc, b.valuation()), _tadd(b.trunc, a.valuation()))
    if not a.terms or not b.terms:
        return QSeries({}, g, t)
    lim = None if t == INF else t * g
    bt = sorted(b.terms.items())
    out = {}
    for n, c in a.terms.items():
        for m, d in bt:
            s = n + m
            if lim is not None and s >= lim:
                break
            out[s] = out.get(s, 0) + c * d
    return QSeries(out, g, t)


def qs_inv(a):
    """Multiplicative inverse, valid to theta - 2*val(a)."""
    if not a.terms:
        raise NotInvertible("cannot invert a series that vanishes to its truncation")
    v, c0 = a.leading()
    vn = int(v * a.grid)
    if a.trunc == INF:
        if len(a.terms) == 1:
            return QSeries({-vn: 1 / c0}, a.grid, INF)
        raise NotInvertible("inverse of an exact non-monomial needs a truncation")
    t = a.trunc - 2 * v
    # u = a / (c0 q^v) - 1 has support on positive grid steps
    u = [(n - vn, c / c0) for n, c in a.terms.items() if n != vn]
    step = 0
    for n, _ in u:
        step = math.gcd(step, n)
    lim = (t + v) * a.grid  # bound for exponents of the normalised inverse (relative)
    b = {0: Fraction(1)}
    if step:
        k = step
        while k < lim:
            s = 0
            for n, c in u:
                if n > k:
                    continue
                prev = b.get(k - n)
                if prev is not None:
                    s -= c * prev
            if s:
                b[k] = s
            k += step
    inv0 = 1 / c0
    return QSeries({n - vn: c * inv0 for n, c in b.items()}, a.grid, t)


def qs_div(a, b):
    return qs_mul(a, qs_inv(b))


def dq(a):
    """q d/dq: multiply each coefficient by its exponent."""
    return QSeries({n: c * Fraction(n, a.grid) for n, c in a.terms.items()}, a.grid, a.trunc)


@lru_cache(maxsize=None)
def _pentagonal(order):
    terms = {}
    k = 0
    while True:
        hit = False
        for m in ((k * (3 * k - 1)) // 2, (k * (3 * k + 1)) // 2):
            if m < order:
                terms[m] = Fraction((-1) ** k)
                hit = True
        if not hit and k > 0:
            break
        k += 1
    return terms


def eta(order):
    """q^(1/24) prod (1 - q^n) truncated below ``order``."""
    order = Fraction(order)
    if order <= Fraction(1, 24):
        raise ValueError("order must exceed 1/24")
    body = _pentagonal(math.ceil(order - Fraction(1, 24)))
    return QSeries({24 * n + 1: c for n, c in body.items()}, 24, order)


def pochhammer(a_exp, step, n, order, a_coeff=1):
    """(a; q^step)_n with a = a_coeff * q^a_exp; n may be None for infinity."""
    result = QSeries.one(order)
    j = 0
    while n is None or j < n:
        e = Fraction(a_exp) + j * Fraction(step)
        if e >= order:
            if n is None:
                break
            j += 1
            continue
        result = result * (QSeries.one(INF) - QSeries.monomial(e, a_coeff))
        result = result.truncate(order)
        j += 1
    return result


def bernoulli(k):
    p, q = mpmath.bernfrac(k)
    return Fraction(int(p), int(q))


def sigma(n, k):
    s = 0
    d = 1
    while d * d <= n:
        if n % d == 0:
            s += d**k
            e = n // d
            if e != d:
                s += e**k
        d += 1
    return s


def eisenstein(k, order, normalized=False):
    """G_k = -B_k/(2k) + sum sigma_{k-1}(n) q^n; ``normalized`` returns -2k/B_k * G_k.

    For k = 2 the normalized form is E_2 = 1 - 24q - 72q^2 - ...
    """
    if not isinstance(k, int) or k <= 0 or k % 2:
        raise ValueError("k must be an even positive integer")
    order = Fraction(order)
    terms = {0: -bernoulli(k) / (2 * k)}
    for n in range(1, math.ceil(order)):
        terms[n] = Fraction(sigma(n, k - 1))
    g = QSeries(terms, 1, order)
    if normalized:
        return g.scale(-2 * k / bernoulli(k))
    return g


def e2(order):
    return eisenstein(2, order).scale(-24)


def serre(k, a, order=None):
    """Ramanujan-Serre derivative D_q a - (k/12) E_2 a."""
    k = Fraction(k)
    if order is None:
        if a.trunc == INF:
            raise ValueError("an order is needed for an exact argument")
        order = a.trunc
    order = Fraction(order)
    v = a.valuation()
    need = order - (v if v != INF else 0)
    need = max(need, Fraction(1))
    out = dq(a) - (e2(need) * a).scale(k / 12)
    return out.truncate(order)


def serre_tower(n, a, order=None):
    """E_{2n-1/2} o ... o E_{7/2} o E_{3/2} applied to ``a`` (n = 0 is the identity)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    out = a if order is None else a.truncate(order)
    for j in range(1, n + 1):
        out = serre(Fraction(4 * j - 1, 2), out, order)
    return out


class Phased:
    """A unit i^phase times a rational series; phase is kept in {0, 1}."""

    __slots__ = ("phase", "series")

    def __init__(self, phase, series):
        phase %= 4
        if phase >= 2:
            series = -series
            phase -= 2
        self.phase = phase
        self.series = series

    def __mul__(self, other):
        if isinstance(other, Phased):
            return Phased(self.phase + other.phase, self.series * other.series)
        return Phased(self.phase, self.series * other)

    __rmul__ = __mul__

    def __neg__(self):
        return Phased(self.phase, -self.series)

    def __add__(self, other):
        if other.series.is_zero():
            return Phased(self.phase, self.series + other.series)
        if self.series.is_zero():
            return Phased(other.phase, self.series + other.series)
        if self.phase != other.phase:
            raise ValueError("cannot add series with different phases")
        return Phased(self.phase, self.series + other.series)

    def __sub__(self, other):
        return self + (-other)

    def truncate(self, order):
        return Phased(self.phase, self.series.truncate(order))

    def agrees_with(self, other, order=None):
        if self.series.is_zero() and other.series.is_zero():
            return True
        d = (self - other) if self.phase == other.phase else None
        if d is None:
            return False
        t = min(self.series.trunc, other.series.trunc)
        if order is not None:
            t = min(t, order)
        return d.series.truncate(t).is_zero()

    def __eq__(self, other):
        return isinstance(other, Phased) and self.phase == other.phase and self.series == other.series

    def evaluate(self, tau):
        v = self.series.evaluate(tau)
        return v * 1j if self.phase else v

    def to_json(self):
        d = self.series.to_json()
        d["unit"] = "i" if self.phase else "1"
        return d

    @classmethod
    def from_json(cls, data):
        return cls(1 if data.get("unit") == "i" else 0, QSeries.from_json(data))

    def __repr__(self):
        return f"{'i*' if self.phase else ''}{self.series!r}"


# binary cache format -----------------------------------------------------------
CACHE_MAGIC = b"QFSC"
CACHE_VERSION = 1


def dumps_binary(obj):
    payload = json.dumps(obj.to_json(), sort_keys=True, separators=(",", ":")).encode()
    kind = b"P" if isinstance(obj, Phased) else b"Q"
    digest = hashlib.sha256(payload).digest()
    header = CACHE_MAGIC + CACHE_VERSION.to_bytes(2, "big") + kind
    return header + len(payload).to_bytes(8, "big") + payload + digest


def loads_binary(blob):
    if blob[:4] != CACHE_MAGIC:
        raise CacheError("not a series cache file")
    version = int.from_bytes(blob[4:6], "big")
    if version != CACHE_VERSION:
        raise VersionMismatch(f"cache version {version}, expected {CACHE_VERSION}")
    kind = blob[6:7]
    size = int.from_bytes(blob[7:15], "big")
    payload = blob[15:15 + size]
    digest = blob[15 + size:]
    if len(payload) != size or hashlib.sha256(payload).digest() != digest:
        raise CacheError("checksum mismatch: cache file is corrupted")
    data = json.loads(payload)
    return Phased.from_json(data) if kind == b"P" else QSeries.from_json(data)
