"""Weight 1/2 and 3/2 theta and partial theta families.

All series are exact. The full theta of weight 1/2 + nu is

    theta(N, r) = sum_{n in Z} (-1)^{nN} (n + r/N - 1/2)^nu q^{N/2 (n + r/N - 1/2)^2}

with the shifted version tilde(N, r) = theta(N, r + N/2) and the partial
version Theta(N, r) = sum_{n >= 0} (-1)^{Nn} (n + r/N)^nu q^{N/2 (n + r/N)^2}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from . import linalg
from .qseries import INF, QSeries, dq, eta, serre_tower

VARIANTS = ("full", "tilde", "partial", "partial_plus", "partial_minus")


class DegenerateN(ValueError):
    """N = 2: the weight 3/2 shifted thetas vanish identically."""


class NonConstantRatio(ArithmeticError):
    pass


SingularSystem = linalg.SingularSystem


@dataclass(frozen=True)
class ThetaSpec:
    N: int
    r: Fraction
    nu: int = 0
    variant: str = "full"

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be positive")
        if self.nu not in (0, 1):
            raise ValueError("nu must be 0 or 1")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        object.__setattr__(self, "r", Fraction(self.r))


def _gauss_sum(N, shift, nu, order, n_min=None):
    """sum over n >= n_min (or all n) of (-1)^{Nn} (n+shift)^nu q^{N/2 (n+shift)^2}."""
    order = Fraction(order)
    half = Fraction(N, 2)
    bound = math.isqrt(int(2 * order / N) + 1) + abs(int(shift)) + 2
    lo = -bound if n_min is None else max(n_min, -bound)
    terms = {}
    for n in range(lo, bound + 1):
        x = n + shift
        e = half * x * x
        if e >= order:
            continue
        c = Fraction(-1 if (N * n) % 2 else 1)
        if nu:
            c *= x
        if c:
            terms[e] = terms.get(e, 0) + c
    return QSeries.from_exponents(terms, order)


def theta_series(spec: ThetaSpec, order) -> QSeries:
    N, r, nu = spec.N, spec.r, spec.nu
    if spec.variant == "full":
        return _gauss_sum(N, r / N - Fraction(1, 2), nu, order)
    if spec.variant == "tilde":
        return _gauss_sum(N, (r + Fraction(N, 2)) / N - Fraction(1, 2), nu, order)
    if spec.variant == "partial":
        return _gauss_sum(N, r / N, nu, order, n_min=0)
    plus = _gauss_sum(N, r / N, nu, order, n_min=0)
    minus = _gauss_sum(N, -r / N, nu, order, n_min=0)
    return plus + minus if spec.variant == "partial_plus" else plus - minus


def tilde(N, r, nu, order):
    return theta_series(ThetaSpec(N, Fraction(r), nu, "tilde"), order)


def partial(N, r, nu, order):
    return theta_series(ThetaSpec(N, Fraction(r), nu, "partial"), order)


def theta_sum_diff(N, r, order):
    """(Theta^+, Theta^-) of weight 3/2 for even N and 0 <= r <= N-1."""
    if N % 2:
        raise ValueError("N must be even")
    if not (0 <= r <= N - 1) or Fraction(r).denominator != 1:
        raise ValueError("r must be an integer in [0, N-1]")
    p = theta_series(ThetaSpec(N, r, 1, "partial_plus"), order)
    m = theta_series(ThetaSpec(N, r, 1, "partial_minus"), order)
    return p, m


# quasimodular kernel ----------------------------------------------------------

def _operator_powers(N, vec, K, order):
    """[X^0 v, ..., X^K v] with X the Serre tower (even N) or D_q (odd N)."""
    if N % 2 == 0:
        return [serre_tower(j, vec, order) for j in range(K + 1)]
    out = [vec]
    for _ in range(K):
        out.append(dq(out[-1]))
    return out


def _family(N, r, order):
    if N % 2 == 0:
        return tilde(N, r, 1, order)
    return theta_series(ThetaSpec(N, Fraction(r), 0, "full"), order)


def kernel_size(N):
    """Index of the top kernel entry: (N - 1 - delta_e) / 2."""
    return (N - 1 - (N % 2 == 0)) // 2


def residue_representatives(N, order):
    """A maximal independent subset of the family over r mod 2N (found by rank)."""
    rs = list(range(2 * N))
    vecs = [_family(N, r, order) for r in rs]
    grid = 1
    for v in vecs:
        grid = grid * v.grid // math.gcd(grid, v.grid)
    cols = sorted({n for v in vecs for n in v.regrid(grid).terms})
    mat = [[v.regrid(grid).terms.get(n, 0) for n in cols] for v in vecs]
    return [rs[i] for i in linalg.rational_rank_basis(mat)]


def quasimodular_kernel(N, order, max_doublings=4):
    """Return (kernel, certified_order) with kernel = [f_0, ..., f_K], f_K = 1.

    The relation sum_j f_j X^j(theta_r) = 0 holds for every residue r up to the
    certified order. For N = 2 a DegenerateN is raised; the answer there is [1]
    acting on the zero vector.
    """
    if N == 2:
        raise DegenerateN("N = 2: the shifted weight 3/2 thetas vanish, kernel is [1]")
    K = kernel_size(N)
    order = Fraction(order)
    if K == 0:
        return [QSeries.one()], INF
    work = order
    for _ in range(max_doublings + 1):
        try:
            kernel, cert = _kernel_at(N, K, work)
        except linalg.SingularSystem:
            work *= 2
            continue
        if cert >= order:
            return kernel, cert
        work = work + 2 * (order - cert) + 4
    raise linalg.SingularSystem(f"could not certify the N={N} kernel to order {order}")


def _kernel_at(N, K, work):
    reps = residue_representatives(N, min(work, Fraction(12 + 4 * N)))
    if len(reps) != K:
        raise linalg.SingularSystem(f"found {len(reps)} independent residues, expected {K}")
    rows = []
    rhs = []
    for r in reps:
        powers = _operator_powers(N, _family(N, r, work), K, work)
        rows.append(powers[:K])
        rhs.append(-powers[K])
    f = linalg.solve(rows, rhs)
    kernel = f + [QSeries.one()]
    cert = min(kernel_residual_order(N, kernel, work), *[x.trunc for x in f])
    return kernel, cert


def kernel_residuals(N, kernel, order):
    """Residual series sum_j f_j X^j(theta_r) for r = 0 .. 2N-1."""
    K = len(kernel) - 1
    out = {}
    for r in range(2 * N):
        powers = _operator_powers(N, _family(N, r, order), K, order)
        s = kernel[0] * powers[0]
        for j in range(1, K + 1):
            s = s + kernel[j] * powers[j]
        out[r] = s
    return out


def kernel_residual_order(N, kernel, order):
    res = kernel_residuals(N, kernel, order)
    for r, s in res.items():
        if not s.is_zero():
            raise linalg.SingularSystem(f"nonzero residual for r={r}: {s!r}")
    return min(s.trunc for s in res.values())


# determinant of T_N ------------------------------------------------------------

def tn_matrix(N, order):
    m = N // 2 - 1
    rows = []
    for r in range(1, m + 1):
        rows.append(_operator_powers(N, tilde(N, r, 1, order), m - 1, order))
    return rows


def tn_determinant_ratio(N, order):
    """det(T_N) / eta^{(N-1)(N-2)/2}; must be a nonzero constant up to truncation."""
    if N < 4 or N % 2:
        raise ValueError("N must be an even integer >= 4")
    order = Fraction(order)
    power = (N - 1) * (N - 2) // 2
    # det has valuation power/24, so compute with a margin
    work = order + Fraction(power, 24) + 2
    while True:
        det = linalg.determinant(tn_matrix(N, work))
        ratio = det / eta(work) ** power
        if ratio.trunc >= order:
            break
        work += order - ratio.trunc + 2
    ratio = ratio.truncate(order)
    const = ratio.coeff(0) if ratio.trunc > 0 else None
    others = {e: c for e, c in ratio.items() if e != 0}
    if others or not const:
        raise NonConstantRatio(f"det(T_{N})/eta^{power} is not a nonzero constant: {ratio!r}")
    return ratio


def tn_leading_constant(N):
    """Leading-term prediction: prod(j/N) * Vandermonde in m^2/2N, up to the eta normalisation."""
    m = N // 2 - 1
    diag = Fraction(1)
    for j in range(1, m + 1):
        diag *= Fraction(j, N)
    xs = [Fraction(j * j, 2 * N) for j in range(1, m + 1)]
    vdm = Fraction(1)
    for a in range(m):
        for b in range(a + 1, m):
            vdm *= xs[b] - xs[a]
    return diag * vdm
