"""Acceptance suite: one PASS/FAIL line per criterion, printed in the terminal summary.

Run alone with ``pytest tests/test_acceptance.py -v`` (about a minute and a half with the rest).
Where a formula read literally is false, the literal reading gets its own strict-xfail
test with a FAIL line next to the criterion it belongs to.
"""

import math
import random
import time
from fractions import Fraction

import mpmath
import pytest

from conftest import record
from qforms import jacobi, oracle, quantum, theta
from qforms.fourier import chi
from qforms.lattice import lattice_coefficient, lattice_formula, n1_coefficient
from qforms.oracle import PrecisionContext

pytestmark = pytest.mark.acceptance

ORDER = 20


def crit1_cases():
    cases = []
    for N in (2, 3, 4, 5):
        # seven consecutive r in the coset N/2 + Z, centred on N/2
        cases += [(N, Fraction(N, 2) - 3 + j) for j in range(7)]
    return cases


def crit2_cases():
    # odd N = 1: the zeta exponents are r - 1/2 for r in {-2, ..., 3}
    return [Fraction(r) - Fraction(1, 2) for r in range(-2, 4)]


def sample_point(rng):
    tau = complex(rng.uniform(-0.4, 0.4), rng.uniform(0.95, 1.35))
    return complex(rng.uniform(0.05, 0.95), rng.uniform(0.15, 0.85) * tau.imag), tau


# 1 -------------------------------------------------------------------------------------------

def test_c01_lattice_equals_partial_theta():
    t0 = time.perf_counter()
    bad = [(N, r) for N, r in crit1_cases() if chi(0, N, r, ORDER) != lattice_coefficient(N, r, ORDER)]
    dt = time.perf_counter() - t0
    ok = record("criterion 1 (partial theta = lattice sum, N=2..5, 7 r each, order 20)", not bad and dt < 60,
                f"{28 - len(bad)}/28 bit-exact in {dt:.1f} s")
    assert ok, bad


@pytest.mark.xfail(strict=True, reason="the displayed sign(0) = +1 at r = N/2 has the wrong sign")
def test_c01_literal_boundary_sign():
    # the displayed formula describes the strip Im tau < Im z < 2 Im tau; check its
    # boundary index r = N/2 there against quadrature
    ctx = PrecisionContext(bits=128)
    tau = mpmath.mpc(0.1, 1.2)
    worst = 0
    for N in (2, 4):
        r = Fraction(N, 2)
        with ctx.work():
            lit = lattice_formula(N, r, ORDER).evaluate(tau)
            quad = oracle.fourier_quadrature(0, N, r, tau, ctx, height=1.5 * tau.imag)
            worst = max(worst, abs(lit - quad) / abs(quad))
    ok = record("criterion 1 supplement (lattice formula with sign(0) = +1 as displayed)", worst < 1e-20,
                f"relative error {mpmath.nstr(worst, 3)} at r = N/2; with sign -1 it matches")
    assert ok


# 2 -------------------------------------------------------------------------------------------

def test_c02_example_n1():
    bad = [r for r in crit2_cases() if chi(0, 1, r, ORDER) != n1_coefficient(r, ORDER)]
    ok = record("criterion 2 (1/theta coefficient, r in {-2..3} as exponents r - 1/2)", not bad,
                f"{6 - len(bad)}/6 bit-exact to order 20")
    assert ok, bad


# 3 -------------------------------------------------------------------------------------------

def test_c03_quadrature_triangle():
    ctx = PrecisionContext(bits=256)
    worst = mpmath.mpf(0)
    cases = [(0, N, r) for N, r in crit1_cases()] + [(0, 1, r) for r in crit2_cases()]
    with ctx.work():
        for M, N, r in cases:
            series = chi(M, N, r, ORDER)
            for tau in (mpmath.mpc(0, 1.2), mpmath.mpc(0.1, 1.4)):
                quad = oracle.fourier_quadrature(M, N, r, tau, ctx)
                worst = max(worst, abs(series.evaluate(tau) - quad))
    ok = record("criterion 3 (exact series vs trapezoid quadrature, 34 cases x 2 tau, 256 bits)", worst < 1e-20,
                f"max |difference| {mpmath.nstr(worst, 3)}")
    assert ok


# 4 -------------------------------------------------------------------------------------------

def test_c04_kernel_residuals():
    details = []
    ok = True
    for N in (3, 4, 5, 6, 8):
        kernel, cert = theta.quasimodular_kernel(N, ORDER)
        res = theta.kernel_residuals(N, kernel, ORDER)
        zero = all(s.is_zero() for s in res.values())
        ok &= zero and cert >= ORDER
        details.append(f"N={N}: {len(kernel)} entries, certified to q^{cert}")
    record("criterion 4 (kernel residuals vanish for every residue r)", ok, "; ".join(details))
    assert ok


# 5 -------------------------------------------------------------------------------------------

def test_c05_determinant_ratio():
    details = []
    ok = True
    for N in (4, 6, 8):
        try:
            ratio = theta.tn_determinant_ratio(N, ORDER)
        except theta.NonConstantRatio as exc:
            ok = False
            details.append(f"N={N}: {exc}")
            continue
        const = ratio.coeff(0)
        ok &= const != 0 and all(e == 0 for e, _ in ratio.items())
        details.append(f"N={N}: constant {const}")
    record("criterion 5 (det T_N / eta power is a nonzero constant to order 20)", ok, "; ".join(details))
    assert ok


# 6 -------------------------------------------------------------------------------------------

def test_c06_appell_lerch_pointwise():
    ctx = PrecisionContext(bits=256)
    rng = random.Random(20)
    worst = mpmath.mpf(0)
    for N, M in [(1, 0), (2, 0), (3, 0), (1, 1), (2, 1), (4, 0)]:
        for _ in range(3):
            z, tau = sample_point(rng)
            res, scale = oracle.verify_thm13(N, M, z, tau, ctx)
            worst = max(worst, res / max(1, scale))
    ok = record("criterion 6 (Appell-Lerch decomposition, 6 (N, M) x 3 points, 256 bits)", worst < 1e-25,
                f"max relative residual {mpmath.nstr(worst, 3)}")
    assert ok


# 7 -------------------------------------------------------------------------------------------

def test_c07_rank_crank_pde():
    ctx = PrecisionContext(bits=200)
    rng = random.Random(7)
    worst = mpmath.mpf(0)
    drift = mpmath.mpf(0)
    for _ in range(3):
        z, tau = sample_point(rng)
        res, scale = oracle.verify_rank_crank_pde(z, tau, ctx)
        res2, _ = oracle.verify_rank_crank_pde(z, tau, ctx.doubled())
        worst = max(worst, res / max(1, scale), res2 / max(1, scale))
        drift = max(drift, abs(res - res2) / max(1, scale))
    ok = record("criterion 7 (rank-crank PDE, 3 points, 200 bits, quadrature doubled)", worst < 1e-20,
                f"max residual {mpmath.nstr(worst, 3)}, change under doubling {mpmath.nstr(drift, 3)}")
    assert ok


# 8 -------------------------------------------------------------------------------------------

def test_c08_heat_decomposition():
    ctx = PrecisionContext(bits=200)
    rng = random.Random(8)
    worst = mpmath.mpf(0)
    ok = True
    for N, M in [(1, 1), (2, 1), (1, 2)]:
        d = jacobi.heat_decomposition(N, M, 15)
        ok &= d.residual_checked_through >= 2 * M + 4
        for _ in range(2):
            z, tau = sample_point(rng)
            res, scale = oracle.verify_heat_pointwise(d, z, tau, ctx)
            worst = max(worst, res / max(1, scale))
    hankel = {(N, M): jacobi.hankel_nonvanishing(N, M) for N in range(1, 9) for M in range(1, 7)}
    ok &= worst < 1e-20 and all(hankel.values())
    record("criterion 8 (heat decomposition: Taylor orders 0..2M+4 exact, pointwise; 48 Hankel dets nonzero)", ok,
           f"max pointwise residual {mpmath.nstr(worst, 3)}")
    assert ok


# 9 -------------------------------------------------------------------------------------------

def _theta_identity_failures(N, shift_sign):
    bad = []
    for nu in (0, 1):
        for r in range(-2 * N, 2 * N + 1):
            base = theta.tilde(N, r, nu, 30)
            if theta.tilde(N, r + N, nu, 30) != base.scale(shift_sign):
                bad.append(("shift", N, r, nu))
            if theta.tilde(N, -r, nu, 30) != base.scale((-1) ** nu):
                bad.append(("negate", N, r, nu))
    return bad


def test_c09_theta_identities():
    bad = []
    for N in range(1, 9):
        # for odd N the summation-index shift costs (-1)^N; even N is the case the forms are used in
        bad += _theta_identity_failures(N, 1 if N % 2 == 0 else -1)
    special = theta.theta_series(theta.ThetaSpec(1, 0, 0, "full"), 30).is_zero()
    special &= all(theta.tilde(2, r, 1, 30).is_zero() for r in range(-4, 5))
    ok = record("criterion 9 (shift/negation for N <= 8, |r| <= 2N, plus the vanishing thetas, order 30)",
                not bad and special, f"{len(bad)} mismatches; odd N shift carries the sign (-1)^N")
    assert ok, bad[:5]


@pytest.mark.xfail(strict=True, reason="for odd N the shift identity holds only up to the sign (-1)^N")
def test_c09_literal_shift_odd_n():
    bad = []
    for N in (1, 3, 5, 7):
        bad += [b for b in _theta_identity_failures(N, 1) if b[0] == "shift"]
    ok = record("criterion 9 supplement (shift identity without sign for odd N)", not bad, f"{len(bad)} mismatches")
    assert ok


# 10 ------------------------------------------------------------------------------------------

def test_c10_multiplier_system():
    ctx = PrecisionContext(bits=200)
    rng = random.Random(10)
    worst = mpmath.mpf(0)
    count = 0
    for N in (2, 4, 6):
        for r in range(0, max(N // 2 - 1, 0) + 1):
            for _ in range(5):
                g = oracle.sample_gamma1(2 * N, rng)
                tau = complex(rng.uniform(-0.4, 0.4), rng.uniform(0.9, 1.3))
                res = oracle.verify_prop32(N, r, g, tau, ctx)
                worst = max(worst, *res.values())
                count += 1
    ok = record("criterion 10 (T, S and multiplier laws, N in {2,4,6}, 5 gamma in Gamma_1(2N) each)", worst < 1e-20,
                f"{count} cases, max residual {mpmath.nstr(worst, 3)}")
    assert ok


# 11 ------------------------------------------------------------------------------------------

def _sample_quantum_points(rng, count):
    pts = []
    while len(pts) < count:
        N = rng.choice([2, 4, 6, 8])
        r = rng.randrange(N)
        k = rng.randint(1, 48)
        h = rng.choice([-1, 1]) * rng.randint(1, 60)
        if math.gcd(h, k) == 1 and quantum.quantum_member(N, r, Fraction(h, k)):
            pts.append((N, r, Fraction(h, k)))
    return pts


def test_c11_quantum_suite():
    ctx = PrecisionContext(bits=128)
    rng = random.Random(11)
    details = []
    # mean value zero
    pts = _sample_quantum_points(rng, 200)
    worst_mean = max(abs(quantum.gamma_seq(N, r, p, ctx, assert_mean_zero=False).mean_value()) for N, r, p in pts)
    ok_mean = worst_mean < 1e-30
    details.append(f"mean zero on 200 points (max {mpmath.nstr(worst_mean, 3)})")
    # Gauss classifier over all (a, b, c), c <= 200
    fired = 0
    worst_fired = 0.0
    spot = mpmath.mpf(0)
    for c in range(1, 201):
        table = quantum.gauss_table(c)
        for a in range(c):
            for b in range(c):
                if quantum.gauss_vanishing(a, b, c) != "none":
                    fired += 1
                    worst_fired = max(worst_fired, table[a, b])
        for _ in range(3):
            a, b = rng.randrange(c), rng.randrange(c)
            spot = max(spot, abs(abs(quantum.gauss_sum(a, b, c, ctx)) - table[a, b]))
    ok_gauss = worst_fired < 1e-25 and spot < 1e-12
    details.append(f"classifier fired {fired} times, max |G| there {worst_fired:.1e}; table vs direct {mpmath.nstr(spot, 3)}")
    # Bernoulli vs Abel on random mean-zero sequences
    worst_l = mpmath.mpf(0)
    for _ in range(20):
        k = rng.randint(2, 12)
        vals = [mpmath.mpf(rng.randint(-9, 9)) for _ in range(k - 1)]
        vals.append(-mpmath.fsum(vals))
        chi_seq = quantum.PeriodicSeq.from_one_based(vals)
        m = rng.choice([0, 1, 3, 5])
        a, b = quantum.l_value(m, chi_seq, ctx), quantum.abel_l_value(m, chi_seq, ctx)
        worst_l = max(worst_l, abs(a - b) / max(1, abs(a)))
    alt = quantum.PeriodicSeq.from_one_based([1, -1])
    quarter = mpmath.mpf(1) / 4
    exact = quantum.l_value(1, alt, ctx) == quarter
    abel = abs(quantum.abel_l_value(1, alt, ctx) - quarter) < 1e-20
    ok_l = worst_l < 1e-15 and exact and abel
    details.append(f"Bernoulli vs Abel max {mpmath.nstr(worst_l, 3)}; L(-1, (1,-1)) = 1/4 both routes: {exact and abel}")
    ok = record("criterion 11 (quantum suite)", ok_mean and ok_gauss and ok_l, "; ".join(details))
    assert ok


@pytest.mark.xfail(strict=True, reason="the b = 0 clause needs c/gcd(a, c) = 2 mod 4, not c = 2 mod 4")
def test_c11_literal_gauss_clause():
    misfires = []
    for c in range(1, 61):
        table = quantum.gauss_table(c)
        for a in range(c):
            for b in range(c):
                if quantum.gauss_vanishing(a, b, c, literal=True) != "none" and table[a, b] > 1e-25:
                    misfires.append((a, b, c))
    ok = record("criterion 11 supplement (b = 0, c = 2 mod 4 clause read literally, c <= 60)", not misfires,
                f"{len(misfires)} nonvanishing sums classified as zero, e.g. G{misfires[:2]}")
    assert ok


# 12 ------------------------------------------------------------------------------------------

CASES_12 = [(2, 1, Fraction(1, 4)), (2, 0, Fraction(1, 2)), (4, 1, Fraction(1, 2))]


def _slopes(t_list):
    ctx = PrecisionContext(bits=128)
    out = []
    worst = 0.0
    for N, r, p in CASES_12:
        rep = quantum.theta_limit_checks(N, r, p, t_list, ctx=ctx)
        for n0 in (1, 2, 3):
            for side, s in (("upper", rep.upper_slopes[n0]), ("lower", rep.lower_slopes[n0])):
                worst = max(worst, abs(s - n0))
                out.append(f"({N},{r},{p}) {side} n0={n0}: {s:.3f}")
    return worst, out


def test_c12_asymptotic_slopes():
    worst, out = _slopes([0.2, 0.1, 0.05, 0.025])
    bad = [line for line in out if abs(float(line.rsplit(": ", 1)[1]) - int(line.split("n0=")[1][0])) > 0.2]
    ok = record("criterion 12 (log-log slopes within 0.2 of n0 on t in {0.2, 0.1, 0.05, 0.025})", worst <= 0.2,
                f"max deviation {worst:.3f}; outside: {'; '.join(bad) if bad else 'none'}")
    assert ok, "a_n grow about fivefold per step, so t = 0.2 is outside the asymptotic range"


def test_c12_asymptotic_slopes_small_t():
    worst, _ = _slopes([0.02, 0.01, 0.005, 0.0025])
    ok = record("criterion 12 supplement (same fit on t in {0.02, 0.01, 0.005, 0.0025})", worst <= 0.2,
                f"max deviation {worst:.3f}")
    assert ok


# 13 ------------------------------------------------------------------------------------------

def test_c13_cocycle():
    ctx = PrecisionContext(bits=96)
    rng = random.Random(13)
    worst = mpmath.mpf(0)
    pairs = []
    for _ in range(2):
        g = oracle.sample_gamma1(8, rng, max_c=1, max_d=2)
        tau = complex(rng.uniform(-0.5, 0.5), -rng.uniform(0.5, 1.0))
        res, scale = quantum.cocycle_residual(4, 1, g, tau, ctx)
        worst = max(worst, res / max(1, scale))
        pairs.append(f"{g} at {tau:.3f}")
    ok = record("criterion 13 (Eichler integral cocycle, N=4, r=1)", worst < 1e-15,
                f"{'; '.join(pairs)}; max residual {mpmath.nstr(worst, 3)}")
    assert ok


# 14 ------------------------------------------------------------------------------------------

def test_c14_roots_of_unity():
    ctx = PrecisionContext(bits=128)
    details = []
    ok = True
    for N, r, p in [(4, 1, "1/2"), (2, 1, "1/4"), (2, 0, "1/2")]:
        rep = quantum.root_of_unity_value(N, r, p, ctx)
        d = rep.max_discrepancy()
        ok &= d < 1e-10
        details.append(f"{quantum.branch(N, r)} ({N},{r},{p}) spread {mpmath.nstr(d, 3)}")
    lhs, rhs = quantum.warnaar_identity_series(a_order=10, q_order=30)
    warnaar = lhs == rhs
    l1, r1 = quantum.ajuo38_series(30)
    l2, r2 = quantum.rzero_sot_series(30)
    tails = (l1 - r1).is_zero() and (l2 - r2).is_zero()
    ok &= warnaar and tails
    details.append(f"Warnaar exact: {warnaar}; both sum-of-tails exact to q^30: {tails}")
    record("criterion 14 (root-of-unity values three ways; series identities)", ok, "; ".join(details))
    assert ok


@pytest.mark.xfail(strict=True, reason="the r = 0 sum-of-tails identity holds with the Lambert term negated")
def test_c14_literal_lambert_sign():
    lhs, rhs = quantum.rzero_sot_series(30, lambert_sign=1)
    diff = lhs - rhs
    ok = record("criterion 14 supplement (r = 0 sum-of-tails with the Lambert sign as displayed)", diff.is_zero(),
                f"first mismatch at q^{diff.valuation()}" if not diff.is_zero() else "")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
