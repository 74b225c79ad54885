"""Command-line entry point: ``cubictrace <command> [options]``.

Every command builds a report of the form
``{"command", "params", "values", "checks", "tail_bounds"}`` and prints it as
JSON, CSV (one check per row) or a plain table. The exit code is 0 exactly
when every check passes.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from . import arith, geometric, localpadic, moments, rankin, spectral, special, weyl
from .errors import CubicTraceError

__all__ = ["Report", "build_parser", "main", "run", "thread_cap"]

DEFAULT_SEED = 20240601


@dataclass
class Report:
    command: str
    params: dict
    values: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    tail_bounds: dict = field(default_factory=dict)

    def check(self, name: str, passed: bool, lhs: Any = None, rhs: Any = None, tol: float | None = None) -> None:
        self.checks.append({"name": name, "pass": bool(passed), "lhs": _jsonable(lhs), "rhs": _jsonable(rhs), "tol": tol})

    @property
    def ok(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "params": _jsonable(self.params),
            "values": _jsonable(self.values),
            "checks": self.checks,
            "tail_bounds": _jsonable(self.tail_bounds),
        }


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, complex):
        if abs(x.imag) <= 1e-12 * max(1.0, abs(x.real)):
            return x.real
        return {"re": x.real, "im": x.imag}
    if hasattr(x, "numerator") and hasattr(x, "denominator") and not isinstance(x, (int, bool)):
        return f"{x.numerator}/{x.denominator}"
    if hasattr(x, "item"):
        return _jsonable(x.item())
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def thread_cap() -> int:
    """Worker count from CUBIC_TRACE_THREADS (default 1)."""
    raw = os.environ.get("CUBIC_TRACE_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise SystemExit(f"CUBIC_TRACE_THREADS must be a positive integer, got {raw!r}")
    if n < 1:
        raise SystemExit(f"CUBIC_TRACE_THREADS must be a positive integer, got {raw!r}")
    return n


# ------------------------------------------------------------------ commands

def cmd_kloosterman(args) -> Report:
    r = Report("kloosterman", {"m": args.m, "n": args.n, "c": args.c})
    S = arith.kloosterman(args.m, args.n, args.c)
    direct = arith.kloosterman_direct(args.m, args.n, args.c)
    bound = arith.weil_bound(args.m, args.n, args.c)
    r.values = {"S": S, "weil_bound": bound, "weil_ratio": abs(S) / bound if bound else 0.0,
                "gcd_m_n_c": math.gcd(math.gcd(args.m, args.n), args.c)}
    r.check("crt_vs_direct", abs(S - direct) <= 1e-9, S, direct, 1e-9)
    r.check("weil_bound", abs(S) <= bound + 1e-9, abs(S), bound, 1e-9)
    return r


def _orbital_grid(p_max: int, rng: random.Random, extra_units: int) -> list[tuple]:
    grid = []
    for p in [q for q in (2, 3, 5, 7, 11, 13) if q <= p_max]:
        units = [u for u in range(1, 12) if u % p][:3]
        units += [rng.choice([u for u in range(1, p**4) if u % p]) for _ in range(extra_units)]
        for m in range(1, p):
            for v in (-4, -6, -8):
                for u in units:
                    grid.append(("plain", p, m, v, u))
            for u in range(1, p * p):
                if u % p:
                    grid.append(("twisted", p, m, -3, u))
    return grid


def cmd_verify_orbital(args) -> Report:
    rng = random.Random(args.seed)
    r = Report("verify-orbital", {"p_max": args.p_max, "form": args.form, "seed": args.seed,
                                  "extra_units": args.extra_units, "inject_fault": args.inject_fault})
    closed_fn: Callable = {
        "printed": localpadic.orbital_second_local_closed,
        "central": localpadic.orbital_second_local_central,
    }[args.form]
    grid = _orbital_grid(args.p_max, rng, args.extra_units)

    def one(item):
        variant, p, m, v, u = item
        spec = localpadic.LocalTestSpec(p, m, variant=variant)
        a = localpadic.PAdicApprox.from_parts(p, v, u)
        closed = closed_fn(spec, a)
        if args.inject_fault:
            closed = closed * 1.001 + 1e-3
        brute = localpadic.orbital_second_local_bruteforce(spec, a)
        return item, closed, brute

    with ThreadPoolExecutor(max_workers=thread_cap()) as pool:
        results = list(pool.map(one, grid))
    worst = 0.0
    for (variant, p, m, v, u), closed, brute in results:
        diff = abs(closed - brute)
        worst = max(worst, diff)
        if diff > args.tol or args.verbose:
            r.check(f"{variant} p={p} m={m} v={v} u={u}", diff <= args.tol, closed, brute, args.tol)
    r.values = {"grid_points": len(grid), "max_abs_diff": worst}
    r.check("all grid points", worst <= args.tol, worst, 0.0, args.tol)
    return r


def _fixture_for(args, weight):
    if args.fixtures:
        return spectral.load_fixtures(args.fixtures)
    if args.packaged:
        return spectral.packaged_fixture(weight)
    return None


def cmd_petersson(args) -> Report:
    q = geometric.PeterssonQuery(args.k, args.N, args.n1, args.n2, args.twisted, args.M)
    r = Report("petersson", {"N": args.N, "k": args.k, "weight": 2 * args.k, "n1": args.n1, "n2": args.n2,
                             "twisted": args.twisted, "M": args.M, "tol": args.tol})
    fn = geometric.petersson_twisted_geometric if args.twisted else geometric.petersson_geometric
    geo = fn(q, tol=args.tol)
    r.values = {"diagonal": geo.diagonal_term, "c_sum": geo.c_sum, "total": geo.total,
                "truncation_c": geo.truncation_c}
    r.tail_bounds = {"c_sum": geo.tail_bound}
    if args.check_m_sum and args.M is None:
        parts = [fn(q.with_M(M), truncation_c=geo.truncation_c) for M in arith.coprime_residues(args.N)]
        total = sum(complex(p.total) for p in parts)
        r.values["sum_over_M"] = total
        r.check("sum over M equals full formula", abs(total - geo.total) <= 1e-10 * max(1.0, abs(geo.total)),
                total, geo.total, 1e-10)
    fs = _fixture_for(args, 2 * args.k)
    if fs is not None:
        if args.M is not None:
            raise CubicTraceError("spectral comparison is only available for the full formula (omit --M)")
        if fs.N != args.N or fs.weight != 2 * args.k:
            raise CubicTraceError(f"fixture is for N={fs.N}, weight {fs.weight}")
        spec_fn = spectral.spectral_petersson_twisted if args.twisted else spectral.spectral_petersson
        sv = spec_fn(fs, args.n1, args.n2)
        rep = spectral.compare(sv, geo, rel_tol=args.rel_tol)
        r.values["spectral"] = sv
        r.values["comparison"] = rep.as_dict()
        r.check("spectral vs geometric", rep.passed, sv, geo.total, args.rel_tol)
    return r


def _h_preset(args) -> special.TestFunctionH:
    if args.h == "zero":
        return special.zero_h()
    if args.h == "gaussian":
        return special.gaussian_h(args.width)
    return weyl.localized_h(weyl.fejer_h(args.order), args.mu, args.L)


def cmd_kuznetsov(args) -> Report:
    h = _h_preset(args)
    r = Report("kuznetsov", {"N": args.N, "n1": args.n1, "n2": args.n2, "h": h.name, "M": args.M,
                             "tol": args.tol, "max_c": args.max_c})
    geo = geometric.kuznetsov_geometric(h, args.N, args.n1, args.n2, cuspidal_M=args.M, tol=args.tol,
                                        max_c=args.max_c)
    r.values = {"diagonal": geo.diagonal_term, "c_sum": geo.c_sum, "total": geo.total,
                "truncation_c": geo.truncation_c, "certified": geo.metadata.get("certified")}
    r.tail_bounds = {"c_sum_empirical": geo.tail_bound}
    r.values["tol_met"] = bool(geo.metadata.get("tol_met"))
    if args.require_tail:
        r.check("tail below tolerance", r.values["tol_met"], geo.tail_bound, args.tol, args.tol)
    if args.fixtures:
        fs = spectral.load_fixtures(args.fixtures)
        sv = spectral.spectral_kuznetsov(fs, h, args.n1, args.n2)
        rep = spectral.compare(sv, geo, rel_tol=args.rel_tol)
        r.values["spectral"] = sv
        r.check("spectral vs geometric", rep.passed, sv, geo.total, args.rel_tol)
    return r


def cmd_moments(args) -> Report:
    r = Report("moments", {"N": args.N, "k": args.k, "delta": args.delta, "m": args.m})
    c = moments.moment_constants(args.m, args.k, args.N)
    r.values = {
        "m1_main": moments.m1_main(args.m, args.k, args.N),
        "m2_main": moments.m2_main(args.m, args.k, args.N),
        "c_minus1": c.c_minus1, "c_01": c.c_01, "c_02": c.c_02, "g_k": c.g_kN,
        "proportion": moments.nonvanishing_proportion(args.delta),
    }
    r.check("m2 main = c01 + c02", math.isclose(r.values["m2_main"], c.c_01 + c.c_02, rel_tol=1e-12, abs_tol=1e-12),
            r.values["m2_main"], c.c_01 + c.c_02, 1e-12)
    spec = moments.mollifier_build(args.N, args.delta)
    back = moments.y_from_x(spec.x, spec.M, spec.N)
    rt = max((abs(back[n] - spec.y[n]) for n in spec.y), default=0.0)
    r.values["mollifier_length"] = spec.M
    r.values["mollifier_table"] = [{"n": n, "x": spec.x[n], "y": spec.y[n]} for n in sorted(spec.x)[: args.table_rows]]
    r.check("mollifier round trip", rt <= 1e-10, rt, 0.0, 1e-10)
    if spec.M <= args.brute_max:
        fast = moments.quadratic_forms(spec, args.k)
        slow = moments.quadratic_forms_bruteforce(spec, args.k)
        diff = max(abs(a - b) for a, b in zip(fast, slow))
        r.check("quadratic forms vs brute force", diff <= 1e-9, list(fast), list(slow), 1e-9)
    if args.delta == 1.5:
        r.check("proportion at delta = 3/2", r.values["proportion"] == 0.25, r.values["proportion"], 0.25, 0.0)
    if args.sweep:
        rows = []
        for N in args.sweep:
            s = moments.mollifier_build(N, args.delta)
            m1, m2 = moments.mollified_main_terms(N, args.delta, args.k)
            rows.append({"N": N, "M": s.M, "first": moments.mollified_first_moment(s),
                         "second": moments.mollified_second_moment_direct(s, args.k),
                         "first_main": m1, "second_main": m2})
        r.values["sweep"] = rows
    return r


def cmd_weyl(args) -> Report:
    N, T = args.N, args.T
    r = Report("weyl", {"N": N, "T": T})
    main = weyl.weyl_main(N, T)
    phi = arith.totient(N)
    r.values = {"weyl_main": main, "weyl_main_per_M": weyl.weyl_main_per_M(N, T), "density": weyl.density(N),
                "truncated_main": weyl.truncated_main(N, T)}
    r.values["ratio"] = r.values["truncated_main"] / r.values["weyl_main_per_M"] if T > 0 else None
    r.check("weyl main closed form", main == N * N * phi * T * T / (2 * math.pi**2), main, None, 0.0)
    r.check("density closed form", weyl.density(N) == phi**2 / N**2, weyl.density(N), phi**2 / N**2, 0.0)
    gap = abs(weyl.tanh_moment(T) - T * T)
    r.values["tanh_moment_gap"] = gap
    r.check("|int tanh(pi t) t - T^2| <= 1/12", gap <= 1 / 12 + 1e-9, gap, 1 / 12, 1e-9)
    if args.sweep:
        r.values["sweep"] = [{"T": t, "ratio": weyl.truncated_main(N, t) / weyl.weyl_main_per_M(N, t)}
                             for t in args.sweep]
    return r


def cmd_rankin(args) -> Report:
    rng = random.Random(args.seed)
    r = Report("rankin", {"N": args.N, "quad_tol": args.quad_tol, "seed": args.seed})
    tol = args.quad_tol
    for s, k in ((1.0, 2), (1.5, 3), (2.0 + 0.5j, 4)):
        c = rankin.rs_arch_holomorphic(s, k)
        r.check(f"holomorphic archimedean s={s} k={k}", c.rel_diff <= tol, c.closed, c.independent, tol)
    for s, t in ((1.2, 0.8), (1.0, 0.0), (2.0, 2.5)):
        c = rankin.rs_arch_maass(s, t)
        r.check(f"maass archimedean s={s} t={t}", c.rel_diff <= max(tol, 1e-7), c.closed, c.independent, max(tol, 1e-7))
    for s, mu, nu in ((1.5, 0.7j, 0.3j), (2.0, 0.25, 0.5), (3.0, 2j, -1j)):
        c = rankin.k_product_integral(s, mu, nu)
        r.check(f"K-Bessel product integral s={s} mu={mu} nu={nu}", c.rel_diff <= tol, c.closed, c.independent, tol)
    for p in arith.prime_divisors(args.N) or [2]:
        c = rankin.rs_local_ramified(1.0 + rng.random(), p)
        r.check(f"ramified local integral p={p}", c.abs_diff <= 1e-14, c.closed, c.independent, 1e-14)
        theta = rng.uniform(0, math.pi)
        c = rankin.rs_local_unramified(2.0, p, rankin.SatakePair.from_angle(theta))
        r.check(f"unramified local integral p={p} theta={theta:.6f}", c.rel_diff <= 1e-10, c.closed, c.independent, 1e-10)
    b = rankin.residue_bookkeeping(args.N)
    r.values = {"phi_hat": b.phi_hat, "residue_N_part": b.residue_from_local, "level_factor": b.level_factor}
    r.check("residue bookkeeping (exact)", b.holds, b.residue_from_local, b.residue_from_inner_product, 0.0)
    return r


# ----------------------------------------------------------------- plumbing

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv", "human"), default="human", help="output format (default human)")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"seed for randomized sweeps (default {DEFAULT_SEED})")

    ap = argparse.ArgumentParser(prog="cubictrace", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kloosterman", parents=[common], help="S(m,n;c) and its Weil-bound ratio")
    for name in ("m", "n", "c"):
        p.add_argument(name, type=int)
    p.set_defaults(func=cmd_kloosterman)

    p = sub.add_parser("verify-orbital", parents=[common], help="closed forms vs brute force for the local orbital integrals")
    p.add_argument("--p-max", type=int, default=7)
    p.add_argument("--form", choices=("central", "printed"), default="central",
                   help="closed form to test: 'central' (default) or the 'printed' v=-4 formula")
    p.add_argument("--extra-units", type=int, default=0, help="random extra unit residues per (p, m, v)")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--inject-fault", action="store_true", help="perturb the closed forms (self-test)")
    p.add_argument("--verbose", action="store_true", help="list every grid point")
    p.set_defaults(func=cmd_verify_orbital)

    p = sub.add_parser("petersson", parents=[common], help="geometric side of the Petersson formula")
    p.add_argument("N", type=int)
    p.add_argument("k", type=int, help="half the weight")
    p.add_argument("n1", type=int)
    p.add_argument("n2", type=int)
    p.add_argument("--twisted", action="store_true")
    p.add_argument("--M", type=int, default=None, help="cuspidal parameter")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--rel-tol", type=float, default=1e-3)
    p.add_argument("--fixtures", default=None, help="newform fixture JSON for a spectral comparison")
    p.add_argument("--packaged", action="store_true", help="use the bundled level-8 fixture")
    p.add_argument("--check-m-sum", action="store_true", help="also sum the per-M formulas")
    p.set_defaults(func=cmd_petersson)

    p = sub.add_parser("kuznetsov", parents=[common], help="geometric side of the Kuznetsov formula")
    p.add_argument("N", type=int)
    p.add_argument("n1", type=int)
    p.add_argument("n2", type=int)
    p.add_argument("--h", choices=("gaussian", "zero", "localized"), default="gaussian")
    p.add_argument("--width", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=5.0)
    p.add_argument("--L", type=float, default=2.0)
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--M", type=int, default=None)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-c", type=int, default=400)
    p.add_argument("--rel-tol", type=float, default=1e-3)
    p.add_argument("--fixtures", default=None)
    p.add_argument("--require-tail", action="store_true",
                   help="fail unless the empirical tail estimate is below --tol")
    p.set_defaults(func=cmd_kuznetsov)

    p = sub.add_parser("moments", parents=[common], help="moment main terms and the mollifier")
    p.add_argument("N", type=int)
    p.add_argument("k", type=int)
    p.add_argument("delta", type=float)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--table-rows", type=int, default=10)
    p.add_argument("--brute-max", type=int, default=200)
    p.add_argument("--sweep", type=int, nargs="*", default=None, help="levels for a main-term sweep")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("weyl", parents=[common], help="Weyl-law main terms and density")
    p.add_argument("N", type=int)
    p.add_argument("T", type=float)
    p.add_argument("--sweep", type=float, nargs="*", default=None)
    p.set_defaults(func=cmd_weyl)

    p = sub.add_parser("rankin", parents=[common], help="Rankin-Selberg identity suite")
    p.add_argument("N", type=int, nargs="?", default=1)
    p.add_argument("--quad-tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_rankin)
    return ap


def render(report: Report, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report.as_dict(), indent=2)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["command", "name", "pass", "lhs", "rhs", "tol"])
        for c in report.checks:
            w.writerow([report.command, c["name"], c["pass"], json.dumps(c["lhs"]), json.dumps(c["rhs"]), c["tol"]])
        return buf.getvalue().rstrip("\n")
    lines = [f"{report.command}  " + "  ".join(f"{k}={v}" for k, v in report.params.items())]
    for k, v in _jsonable(report.values).items():
        if isinstance(v, list):
            lines.append(f"  {k}: {len(v)} rows")
            for row in v:
                lines.append(f"    {row}")
        else:
            lines.append(f"  {k:<24}{v}")
    for k, v in report.tail_bounds.items():
        lines.append(f"  tail[{k}]{'':<12}{v}")
    for c in report.checks:
        lines.append(f"  [{'PASS' if c['pass'] else 'FAIL'}] {c['name']}")
    return "\n".join(lines)


def run(argv: Sequence[str] | None = None) -> tuple[int, Report]:
    args = build_parser().parse_args(argv)
    report = args.func(args)
    return (0 if report.ok else 1), report


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report = args.func(args)
    except CubicTraceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(render(report, args.format))
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
