"""Command-line front end.

Exit codes: 0 when every check passes, 1 when a verification fails, 2 for
usage or configuration errors. Reports are JSON (sorted keys) except for
``coeff --format csv``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import random
import re
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import mpmath

from . import fourier, jacobi, lattice, oracle, quantum, theta
from .qseries import CacheError, Phased, dumps_binary, loads_binary

CACHE_FORMAT = 1


class UsageError(ValueError):
    pass


# parsing ------------------------------------------------------------------------------

_RATIONAL = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$")


def parse_rational(text):
    """Exact 'p/q' or integer input; decimals are rejected."""
    m = _RATIONAL.match(str(text))
    if not m:
        raise argparse.ArgumentTypeError(f"expected p/q or an integer, got {text!r}")
    den = int(m.group(2) or 1)
    if den == 0:
        raise argparse.ArgumentTypeError("zero denominator")
    return Fraction(int(m.group(1)), den)


def parse_complex(text):
    try:
        return complex(str(text).replace("i", "j").replace(" ", ""))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a complex number like 0.1+1.2i, got {text!r}") from exc


def _mp_str(x, digits=30):
    x = mpmath.mpc(x)
    return {"re": mpmath.nstr(x.real, digits), "im": mpmath.nstr(x.imag, digits)}


def _num(x, digits=6):
    return float(mpmath.nstr(x, digits)) if x is not None else None


# cache ---------------------------------------------------------------------------------

def cache_dir(config_dir=None):
    env = os.environ.get("QFORMS_CACHE")
    if env:
        return Path(env)
    if config_dir:
        return Path(config_dir)
    return Path.home() / ".cache" / "qforms"


def _cache_key(*parts):
    text = json.dumps([CACHE_FORMAT, *[str(p) for p in parts]])
    return hashlib.sha256(text.encode()).hexdigest()[:32]


def write_many(path, objs):
    blob = b"".join(dumps_binary(o) for o in objs)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_bytes(blob)
    tmp.replace(path)


def read_many(path):
    blob = path.read_bytes()
    out = []
    pos = 0
    while pos < len(blob):
        if len(blob) - pos < 15:
            raise CacheError("truncated cache file")
        size = int.from_bytes(blob[pos + 7:pos + 15], "big")
        end = pos + 15 + size + 32
        out.append(loads_binary(blob[pos:end]))
        pos = end
    return out


def cache_roundtrip(series, directory):
    """Write a series to the cache directory and read it back."""
    path = Path(directory) / f"{_cache_key('roundtrip', hashlib.sha256(dumps_binary(series)).hexdigest())}.qfs"
    write_many(path, [series])
    return read_many(path)[0]


def _cached(cfg, key_parts, compute):
    """(objects, 'hit' | 'miss' | 'off')"""
    if cfg.no_cache:
        return compute(), "off"
    path = cache_dir(cfg.cache_dir) / f"{_cache_key(*key_parts)}.qfs"
    if path.exists():
        try:
            return read_many(path), "hit"
        except CacheError:
            pass  # fall through and regenerate
    objs = compute()
    try:
        write_many(path, objs)
    except OSError:
        return objs, "off"
    return objs, "miss"


# commands --------------------------------------------------------------------------------

@dataclass
class RunConfig:
    command: str
    args: dict = field(default_factory=dict)
    output: str = "json"
    cache_dir: str | None = None
    no_cache: bool = False

    def get(self, name, default=None):
        v = self.args.get(name)
        return default if v is None else v


def _series_json(s):
    return s.to_json()


def _require(cfg, *names):
    missing = [n for n in names if cfg.args.get(n) is None]
    if missing:
        raise UsageError(f"{cfg.command}: missing --{', --'.join(missing)}")


def cmd_coeff(cfg):
    _require(cfg, "M", "N", "r")
    M, N, r = cfg.args["M"], cfg.args["N"], cfg.args["r"]
    order = cfg.get("order", Fraction(20))
    if M % 2:
        raise UsageError("even M required")
    Mh, Nh = M // 2, N - M
    if M < 0 or Nh < 1:
        raise UsageError("need M >= 0 and N - M >= 1")
    try:
        spec = fourier.CoefficientSpec(Mh, Nh, r, order)
    except lattice.NotInCoset as exc:
        raise UsageError(str(exc)) from exc

    def compute():
        terms = fourier.mixed_decomposition(spec)
        total = fourier.chi_coefficient(spec)
        out = [total]
        for t in terms:
            out += [t.prefactor, t.theta_part]
        return out

    objs, status = _cached(cfg, ("coeff", M, N, r, order), compute)
    total = objs[0]
    triples = [
        {"prefactor": objs[1 + 2 * j].to_json(), "derivative_order": j, "theta_part": objs[2 + 2 * j].to_json()}
        for j in range((len(objs) - 1) // 2)
    ]
    report = {
        "M": M, "N": N, "r": str(r), "order": str(order),
        "series": total.to_json(), "decomposition": triples, "cache": status,
    }
    return 0, report, total


def cmd_lattice(cfg):
    _require(cfg, "N", "r")
    N, r = cfg.args["N"], cfg.args["r"]
    order = cfg.get("order", Fraction(20))
    try:
        if cfg.get("verbatim"):
            series, count = lattice.lattice_formula(N, r, order, with_count=True)
        else:
            series, count = lattice.lattice_coefficient(N, r, order, with_count=True)
    except (lattice.NotInCoset, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    return 0, {"N": N, "r": str(r), "order": str(order), "series": series.to_json(), "terms_enumerated": count}, series


def cmd_laurent(cfg):
    _require(cfg, "M", "N")
    M, N = cfg.args["M"], cfg.args["N"]
    order = cfg.get("order", Fraction(10))
    if N < 1 or M < 0:
        raise UsageError("need N >= 1 and M >= 0")
    objs, status = _cached(cfg, ("laurent", M, N, order), lambda: list(jacobi.laurent_coefficients(M, N, order).values()))
    D = [{"j": j + 1, "D_j": o.to_json()} for j, o in enumerate(objs)]
    return 0, {"M": M, "N": N, "order": str(order), "D": D, "cache": status}, None


def cmd_pde(cfg):
    _require(cfg, "N")
    N = cfg.args["N"]
    order = cfg.get("order", Fraction(10))
    if cfg.get("kernel"):
        try:
            kernel, cert = theta.quasimodular_kernel(N, order)
        except theta.DegenerateN as exc:
            return 0, {"N": N, "kernel": ["1"], "certified_order": "inf", "note": str(exc)}, None
        cert_s = "inf" if cert == float("inf") or str(cert) == "inf" else str(cert)
        return 0, {"N": N, "kernel": [k.to_json() for k in kernel], "certified_order": cert_s}, None
    _require(cfg, "M")
    M = cfg.args["M"]
    d = jacobi.heat_decomposition(N, M, order)
    return 0, {
        "N": N, "M": M, "order": str(order),
        "f": [f.to_json() for f in d.f], "scale": d.scale.to_json(),
        "residual_checked_through": d.residual_checked_through,
    }, None


def _rng(cfg):
    return random.Random(cfg.get("seed", 0))


def _sample_point(rng):
    tau = complex(rng.uniform(-0.4, 0.4), rng.uniform(0.95, 1.35))
    z = complex(rng.uniform(0.05, 0.95), rng.uniform(0.15, 0.85) * tau.imag)
    return z, tau


def cmd_verify(cfg):
    _require(cfg, "identity")
    ident = cfg.args["identity"]
    bits = cfg.get("bits", 256)
    npts = cfg.get("points", 3)
    ctx = oracle.PrecisionContext(bits=bits)
    rng = _rng(cfg)
    cases = []
    tol = ctx.tolerance
    with ctx.work():
        for i in range(npts):
            z, tau = _sample_point(rng)
            case = {"case": i, "z": str(z), "tau": str(tau)}
            if ident == "thm13":
                N, M = cfg.get("N", 2), cfg.get("M", 0)
                res, scale = oracle.verify_thm13(N, M, z, tau, ctx)
                case.update(N=N, M=M, residual=_num(res), scale=_num(scale))
                ok = res <= tol * max(1, scale)
            elif ident == "pde":
                res, scale = oracle.verify_rank_crank_pde(z, tau, ctx)
                case.update(residual=_num(res), scale=_num(scale))
                ok = res <= tol * max(1, scale)
            elif ident == "prop32":
                N = cfg.get("N", 4)
                if N % 2:
                    raise UsageError("prop32 needs even N")
                r = int(cfg.get("r", Fraction(1)))
                g = oracle.sample_gamma1(2 * N, rng)
                res = oracle.verify_prop32(N, r, g, tau, ctx)
                case.update(N=N, r=r, gamma=list(g), residuals={k: _num(v) for k, v in res.items()})
                ok = all(v <= tol for v in res.values())
            elif ident == "lemma31":
                g = oracle.sample_sl2(rng)
                res = oracle.verify_lemma31(g, z, tau, ctx)
                case.update(gamma=list(g), residuals={k: _num(v) for k, v in res.items()})
                ok = all(v <= tol for v in res.values())
            elif ident == "phicrank":
                N = cfg.get("N", 2)
                res = oracle.verify_phicrank(N, z, tau, ctx)
                case.update(N=N, residuals={k: _num(v) for k, v in res.items() if k != "scale"})
                ok = max(res["product"], res["partial_fraction"]) <= tol * max(1, res["scale"])
            else:
                raise UsageError(f"unknown identity {ident!r}")
            case["pass"] = bool(ok)
            cases.append(case)
    cases.sort(key=lambda c: c["case"])
    failed = [c for c in cases if not c["pass"]]
    report = {"identity": ident, "bits": bits, "tolerance": _num(tol), "cases": cases, "all_pass": not failed}
    if failed:
        report["reason"] = f"{len(failed)} case(s) above tolerance"
    return (1 if failed else 0), report, None


def cmd_quantum(cfg):
    _require(cfg, "N", "r", "point")
    N, r, p = cfg.args["N"], int(cfg.args["r"]), cfg.args["point"]
    action = cfg.get("action", "member")
    bits = cfg.get("bits", 128)
    ctx = oracle.PrecisionContext(bits=bits)
    if N % 2:
        raise UsageError("quantum actions need even N")
    try:
        pt = quantum.RationalPoint.of(p)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    base = {"N": N, "r": r, "point": f"{pt.h}/{pt.k}", "action": action}
    member = quantum.quantum_member(N, r, pt)
    if action == "member":
        return 0, {**base, "member": member, "branch": quantum.branch(N, r)}, None
    if not 0 <= r <= N - 1:
        raise UsageError("need 0 <= r <= N-1")
    with ctx.work():
        if action == "gamma":
            g = quantum.gamma_seq(N, r, pt, ctx, assert_mean_zero=False)
            mean = g.mean_value()
            ok = (not member) or abs(mean) <= 10 * ctx.tolerance
            return (0 if ok else 1), {**base, "period": g.period, "parity": g.parity, "mean": _mp_str(mean), "member": member}, None
        if not member:
            return 1, {**base, "member": False, "reason": "point is not in the quantum set"}, None
        if action == "lvalues":
            g = quantum.gamma_seq(N, r, pt, ctx)
            vals = {str(-(2 * n + 1)): _mp_str(quantum.l_value(2 * n + 1, g, ctx)) for n in range(cfg.get("n_max", 4) + 1)}
            return 0, {**base, "L": vals}, None
        if action == "asymptotics":
            ts = [0.2, 0.1, 0.05, 0.025] if cfg.get("t") is None else cfg.get("t")
            rep = quantum.theta_limit_checks(N, r, pt, ts, ctx=ctx)
            return 0, {
                **base, "t": rep.t_list, "a": [_mp_str(c, 20) for c in rep.coeffs],
                "upper_slopes": {str(k): round(v, 4) for k, v in rep.upper_slopes.items()},
                "lower_slopes": {str(k): round(v, 4) for k, v in rep.lower_slopes.items()},
            }, None
        if action == "value":
            rep = quantum.root_of_unity_value(N, r, pt, ctx)
            disc = rep.max_discrepancy()
            ok = disc <= mpmath.mpf("1e-10")
            return (0 if ok else 1), {
                **base, "finite": _mp_str(rep.finite), "from_l_value": _mp_str(rep.from_l_value),
                "numeric_limit": _mp_str(rep.numeric_limit), "max_discrepancy": _num(disc),
            }, None
        if action == "cocycle":
            g = oracle.sample_gamma1(2 * N, _rng(cfg))
            tau = complex(cfg.get("tau") or complex(0.3, -0.8))
            res, scale = quantum.cocycle_residual(N, r, g, tau, ctx)
            ok = res <= ctx.tolerance * max(1, scale)
            return (0 if ok else 1), {**base, "gamma": list(g), "tau": str(tau), "residual": _num(res), "scale": _num(scale)}, None
    raise UsageError(f"unknown action {action!r}")


def cmd_oracle(cfg):
    fn = cfg.get("function", "theta")
    bits = cfg.get("bits", 128)
    ctx = oracle.PrecisionContext(bits=bits)
    tau = cfg.get("tau")
    if tau is None:
        raise UsageError("oracle: missing --tau")
    z = cfg.get("z", 0.25 + 0.3j)
    with ctx.work():
        if fn == "theta":
            a, b = oracle.eval_theta(z, tau, ctx), oracle.eval_theta_product(z, tau, ctx)
            return 0, {"function": fn, "sum": _mp_str(a), "product": _mp_str(b), "difference": _num(abs(a - b))}, None
        if fn == "eta":
            a, b = oracle.eval_eta(tau, ctx), oracle.eval_eta_sum(tau, ctx)
            return 0, {"function": fn, "product": _mp_str(a), "sum": _mp_str(b), "difference": _num(abs(a - b))}, None
        if fn == "phi":
            M, N = cfg.get("M", 0), cfg.get("N", 1)
            return 0, {"function": fn, "M": M, "N": N, "value": _mp_str(oracle.eval_phi(M, N, z, tau, ctx))}, None
        if fn == "crank":
            a, b = oracle.eval_crank(z, tau, ctx), oracle.eval_crank_sum(z, tau, ctx)
            return 0, {"function": fn, "product": _mp_str(a), "partial_fraction": _mp_str(b), "difference": _num(abs(a - b))}, None
        if fn == "rank":
            return 0, {"function": fn, "value": _mp_str(oracle.eval_rank(z, tau, ctx))}, None
        if fn == "fourier":
            _require(cfg, "M", "N", "r")
            M, N, r = cfg.args["M"], cfg.args["N"], cfg.args["r"]
            v = oracle.fourier_quadrature(M, N, r, tau, ctx)
            return 0, {"function": fn, "M": M, "N": N, "r": str(r), "value": _mp_str(v)}, None
    raise UsageError(f"unknown function {fn!r}")


COMMANDS = {
    "coeff": cmd_coeff,
    "lattice": cmd_lattice,
    "pde": cmd_pde,
    "laurent": cmd_laurent,
    "verify": cmd_verify,
    "quantum": cmd_quantum,
    "oracle": cmd_oracle,
}


def run(config: RunConfig):
    """(exit code, report dict, optional series for CSV output)."""
    start = time.perf_counter()
    try:
        code, report, series = COMMANDS[config.command](config)
    except UsageError as exc:
        return 2, {"error": "usage", "reason": str(exc)}, None
    report["timing"] = round(time.perf_counter() - start, 6)
    return code, report, series


def series_csv(series):
    buf = io.StringIO()
    s = series.series if isinstance(series, Phased) else series
    if isinstance(series, Phased) and series.phase:
        buf.write("# every coefficient is multiplied by i\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["exponent_num", "exponent_den", "coeff_num", "coeff_den"])
    for n, c in s.items():
        e = Fraction(n)
        w.writerow([e.numerator, e.denominator, c.numerator, c.denominator])
    return buf.getvalue()


def build_parser():
    p = argparse.ArgumentParser(prog="qforms", description="Fourier coefficients, identities and quantum values of theta quotients.")
    p.add_argument("--cache-dir", default=None)
    p.add_argument("--no-cache", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("coeff", help="zeta^r coefficient of theta(z+1/2)^M / theta(z)^N")
    c.add_argument("--M", type=int, required=True)
    c.add_argument("--N", type=int, required=True)
    c.add_argument("--r", type=parse_rational, required=True)
    c.add_argument("--order", type=parse_rational, default=Fraction(20))
    c.add_argument("--format", dest="output", choices=["json", "csv"], default="json")

    c = sub.add_parser("lattice", help="coefficient of 1/theta^N from the A_{N-1} lattice sum")
    c.add_argument("--N", type=int, required=True)
    c.add_argument("--r", type=parse_rational, required=True)
    c.add_argument("--order", type=parse_rational, default=Fraction(20))
    c.add_argument("--verbatim", action="store_true", help="the displayed formula without chamber translation")
    c.add_argument("--format", dest="output", choices=["json", "csv"], default="json")

    c = sub.add_parser("pde", help="heat-operator decomposition, or the quasimodular theta kernel with --kernel")
    c.add_argument("--N", type=int, required=True)
    c.add_argument("--M", type=int)
    c.add_argument("--order", type=parse_rational, default=Fraction(10))
    c.add_argument("--kernel", action="store_true")

    c = sub.add_parser("laurent", help="Laurent coefficients D_j at z = 0")
    c.add_argument("--M", type=int, required=True)
    c.add_argument("--N", type=int, required=True)
    c.add_argument("--order", type=parse_rational, default=Fraction(10))

    c = sub.add_parser("verify", help="pointwise numerical identity checks")
    c.add_argument("--identity", choices=["thm13", "pde", "prop32", "lemma31", "phicrank"], required=True)
    c.add_argument("--N", type=int)
    c.add_argument("--M", type=int)
    c.add_argument("--r", type=parse_rational)
    c.add_argument("--points", type=int, default=3)
    c.add_argument("--bits", type=int, default=256)
    c.add_argument("--seed", type=int, default=0)

    c = sub.add_parser("quantum", help="quantum sets, L-values, asymptotics, root-of-unity values, cocycles")
    c.add_argument("--N", type=int, required=True)
    c.add_argument("--r", type=parse_rational, required=True)
    c.add_argument("--point", type=parse_rational, required=True)
    c.add_argument("--action", choices=["member", "gamma", "lvalues", "asymptotics", "value", "cocycle"], default="member")
    c.add_argument("--bits", type=int, default=128)
    c.add_argument("--tau", type=parse_complex)
    c.add_argument("--seed", type=int, default=0)

    c = sub.add_parser("oracle", help="direct high-precision evaluations")
    c.add_argument("--function", choices=["theta", "eta", "phi", "crank", "rank", "fourier"], default="theta")
    c.add_argument("--z", type=parse_complex)
    c.add_argument("--tau", type=parse_complex, required=True)
    c.add_argument("--M", type=int)
    c.add_argument("--N", type=int)
    c.add_argument("--r", type=parse_rational)
    c.add_argument("--bits", type=int, default=128)
    return p


_BOUNDS = {"bits": (32, 4096), "points": (1, 100)}


def config_from_args(ns):
    args = {k: v for k, v in vars(ns).items() if k not in ("command", "cache_dir", "no_cache", "output")}
    for name, (lo, hi) in _BOUNDS.items():
        v = args.get(name)
        if v is not None and not lo <= v <= hi:
            raise UsageError(f"--{name} must lie in [{lo}, {hi}]")
    order = args.get("order")
    if order is not None and not 0 < order <= 400:
        raise UsageError("--order must lie in (0, 400]")
    return RunConfig(ns.command, args, getattr(ns, "output", "json"), ns.cache_dir, ns.no_cache)


def main(argv=None):
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        cfg = config_from_args(ns)
    except UsageError as exc:
        print(json.dumps({"error": "usage", "reason": str(exc)}, sort_keys=True))
        return 2
    code, report, series = run(cfg)
    if cfg.output == "csv" and series is not None and code == 0:
        sys.stdout.write(series_csv(series))
    else:
        print(json.dumps(report, sort_keys=True, indent=1))
    if code == 2:
        print(report.get("reason", "usage error"), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
