"""Command-line front end.

    qfcover phase --n 1e8 --alpha -2,-1,0,1,2
    qfcover classnum --dmin -3 --dmax -10000 --out classnum.csv
    qfcover verify

Flags override values from ``--config FILE`` (plain key=value lines).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import subprocess
import sys
import warnings
from datetime import datetime, timezone
from decimal import Decimal, InvalidOperation
from pathlib import Path

SCHEMA = "qfcover/1"
CAP_N = 10**9
CAP_DELTA = 10**5
CAP_DISC = 10**6


class ConfigError(Exception):
    pass


# --------------------------------------------------------------------------
# argument types
# --------------------------------------------------------------------------

def parse_int(s: str) -> int:
    """Integer, scientific notation allowed (1e8)."""
    try:
        v = Decimal(str(s).strip())
    except InvalidOperation:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}")
    if not v.is_finite() or v != v.to_integral_value():
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}")
    return int(v)


def parse_float(s: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}")
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"not finite: {s!r}")
    return v


def _list_of(conv):
    def parse(s: str):
        if isinstance(s, list):
            return s
        return [conv(t) for t in str(s).split(",") if t.strip()]
    return parse


int_list = _list_of(parse_int)
float_list = _list_of(parse_float)


def read_config(path: str) -> dict[str, str]:
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, val = (t.strip() for t in line.split("=", 1))
        out[key.replace("-", "_")] = val
    return out


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_csv(rows: list[dict], columns: list[str] | None = None) -> str:
    columns = columns or (list(rows[0]) if rows else [])
    buf = io.StringIO()
    buf.write(f"# schema={SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def git_hash() -> str:
    try:
        res = subprocess.run(["git", "rev-parse", "HEAD"], capture_output=True, text=True,
                             cwd=Path(__file__).resolve().parent, timeout=5)
        return res.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def to_json(rows: list[dict], params: dict) -> str:
    doc = {"params": params, "rows": rows,
           "provenance": {"git_hash": git_hash(),
                          "timestamp": datetime.now(timezone.utc).isoformat()}}
    return json.dumps(doc, indent=1, default=str) + "\n"


def emit(rows: list[dict], args, columns: list[str] | None = None) -> None:
    params = {k: v for k, v in vars(args).items() if k not in ("func", "config")}
    texts = []
    if args.format in ("csv", "both"):
        texts.append(("csv", to_csv(rows, columns)))
    if args.format in ("json", "both"):
        texts.append(("json", to_json(rows, params)))
    if args.out is None:
        for _, t in texts:
            sys.stdout.write(t)
        return
    for kind, t in texts:
        path = Path(args.out)
        if args.format == "both":
            path = path.with_suffix("." + kind)
        try:
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(t)
        except OSError as exc:
            raise ConfigError(f"cannot write {path}: {exc}")


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------

def _need(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def check_N(N: int, lo: int = 1):
    _need(lo <= N <= CAP_N, f"N must be in [{lo}, {CAP_N}], got {N}")


def check_delta(delta: float):
    _need(1 <= delta <= CAP_DELTA, f"Delta must be in [1, {CAP_DELTA}], got {delta}")


def check_disc(D: int):
    _need(1 <= abs(D) <= CAP_DISC, f"|D| must be <= {CAP_DISC}, got {D}")


def _common(args):
    _need(args.workers >= 1, "--workers must be >= 1")
    _need(args.segment >= 8 and args.segment % 8 == 0, "--segment must be a positive multiple of 8")


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_phase(args) -> int:
    from .coverage import phase_experiment
    _common(args)
    check_N(args.n, 16)
    alphas = args.alpha or [-3, -2, -1, 0, 1, 2, 3]
    rows = phase_experiment(args.n, alphas, workers=args.workers, segment=args.segment)
    for r in rows:
        check_delta(max(r["delta"], 1))
    emit(rows, args, ["alpha", "delta", "covered", "fraction", "phi"])
    return 0


def cmd_perk(args) -> int:
    from .coverage import count_by_k
    _common(args)
    check_N(args.n)
    check_delta(args.delta)
    t = count_by_k(args.n, args.delta, workers=args.workers, segment=args.segment)
    rows = []
    for r in t.rows():
        k = r["k"]
        if args.k and k not in args.k:
            continue
        r["fraction_uncovered"] = r["uncovered"] / r["A"]
        r["upper_regime"] = k >= 1 and args.delta <= 2 ** k / k ** 4
        r["lower_regime"] = args.delta >= k ** 3 * 2 ** k
        rows.append(r)
    emit(rows, args)
    return 0


def cmd_selberg(args) -> int:
    from .coverage import selberg_compare
    check_N(args.n, 16)
    rows = selberg_compare(args.n, args.k or [1, 2, 3, 4, 5, 6])
    emit(rows, args, ["k", "count", "prediction", "ratio"])
    return 0


def cmd_classnum(args) -> int:
    from .arith import fundamental_discriminants
    from .lfunctions import certified_class_number
    from .quadforms import class_number
    lo, hi = sorted((args.dmin, args.dmax))
    _need(hi <= -3, "discriminants must be <= -3")
    check_disc(lo)
    rows = []
    bad = 0
    for D in reversed(fundamental_discriminants(lo, hi)):
        h_enum = class_number(D)
        h_form, ok, _ = certified_class_number(D)
        bad += (not ok) or h_form != h_enum
        rows.append({"D": D, "h_enum": h_enum, "h_formula": h_form, "certified": ok})
    emit(rows, args, ["D", "h_enum", "h_formula", "certified"])
    if bad:
        print(f"{bad} mismatched or uncertified discriminants", file=sys.stderr)
    return 1 if bad else 0


def cmd_lvalues(args) -> int:
    from .arith import fundamental_discriminants, is_fundamental
    from .lfunctions import l1_to_tolerance
    if args.disc:
        discs = args.disc
    else:
        _need(args.dmin is not None and args.dmax is not None, "give --disc or --dmin/--dmax")
        lo, hi = sorted((args.dmin, args.dmax))
        discs = fundamental_discriminants(lo, hi)
    rows = []
    flagged = 0
    for D in discs:
        check_disc(D)
        _need(is_fundamental(D), f"{D} is not a fundamental discriminant")
        est, ok = l1_to_tolerance(D, args.tol, args.m)
        flagged += not ok
        lo_, hi_ = est.interval
        rows.append({"disc": D, "M": est.M, "value": est.value, "tail_bound": est.tail_bound,
                     "lower": lo_, "upper": hi_, "certified": ok})
    emit(rows, args)
    return 1 if flagged else 0


def cmd_moments(args) -> int:
    from . import moments
    check_N(args.n, 16)
    check_delta(args.delta)
    _need(args.w >= 2, "--w must be >= 2")
    _need(args.j in (0, 1), "--j must be 0 or 1")
    Dj = moments.build_Dj(args.j, args.delta, args.w)
    if args.prop == "5.5":
        rep = moments.prop55_average(args.j, args.delta, args.w, tol=args.tol, Dj=Dj)
        emit([rep.row()], args)
        return 0
    _need(len(Dj) >= 1, "D_j is empty; raise --delta")
    k = moments.default_k(args.n) if args.k is None else args.k
    ctx = moments.MomentContext(args.n, k, args.j, args.w)
    ds = args.d or list(Dj.members)
    for d in ds:
        _need(d in Dj, f"d={d} is not in D_{args.j}")
    if args.prop == "variance":
        emit([moments.variance_report(ctx, Dj).row()], args)
        return 0
    rows = []
    if args.prop == "5.3":
        for a in range(len(ds)):
            for b in range(a + 1, len(ds)):
                rows.append(moments.moment_sum("5.3", ctx, Dj, ds[a], ds[b], tol=args.tol).row())
    else:
        for d in ds:
            rows.append(moments.moment_sum(args.prop, ctx, Dj, d, tol=args.tol).row())
    emit(rows, args)
    return 0


def cmd_verify(args) -> int:
    from .verify import run_checks
    results = run_checks()
    rows = [{"check": name, "passed": ok, "detail": detail} for name, ok, detail in results]
    for r in rows:
        print(f"{'PASS' if r['passed'] else 'FAIL'}  {r['check']}  {r['detail']}", file=sys.stderr)
    if args.out is not None:
        emit(rows, args, ["check", "passed", "detail"])
    failed = sum(not r["passed"] for r in rows)
    print(f"{len(rows) - failed}/{len(rows)} checks passed", file=sys.stderr)
    return 1 if failed else 0


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qfcover", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, sieve=False):
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--format", choices=["csv", "json", "both"], default="csv")
        if sieve:
            sp.add_argument("--workers", type=parse_int, default=1)
            sp.add_argument("--segment", type=parse_int, default=1 << 24)

    sp = sub.add_parser("phase", help="covered fraction against alpha")
    sp.add_argument("--n", type=parse_int, default=10**8)
    sp.add_argument("--alpha", type=float_list, default=None)
    common(sp, sieve=True)
    sp.set_defaults(func=cmd_phase)

    sp = sub.add_parser("perk", help="coverage of A(N, k) per k")
    sp.add_argument("--n", type=parse_int, default=10**6)
    sp.add_argument("--delta", type=parse_float, required=False, default=10.0)
    sp.add_argument("--k", type=int_list, default=None)
    common(sp, sieve=True)
    sp.set_defaults(func=cmd_perk)

    sp = sub.add_parser("selberg", help="|A(N, k)| against the Sathe-Selberg prediction")
    sp.add_argument("--n", type=parse_int, default=10**8)
    sp.add_argument("--k", type=int_list, default=None)
    common(sp)
    sp.set_defaults(func=cmd_selberg)

    sp = sub.add_parser("classnum", help="enumerated vs analytic class numbers")
    sp.add_argument("--dmin", type=parse_int, default=-3)
    sp.add_argument("--dmax", type=parse_int, default=-10000)
    common(sp)
    sp.set_defaults(func=cmd_classnum)

    sp = sub.add_parser("lvalues", help="certified L(1, chi) values")
    sp.add_argument("--disc", type=int_list, default=None)
    sp.add_argument("--dmin", type=parse_int, default=None)
    sp.add_argument("--dmax", type=parse_int, default=None)
    sp.add_argument("--tol", type=parse_float, default=1e-4)
    sp.add_argument("--m", type=parse_int, default=None, help="starting truncation")
    common(sp)
    sp.set_defaults(func=cmd_lvalues)

    sp = sub.add_parser("moments", help="second-moment sums over D_j")
    sp.add_argument("--prop", choices=["5.2", "5.3", "5.4", "5.5", "variance"], default="5.2")
    sp.add_argument("--n", type=parse_int, default=10**6)
    sp.add_argument("--k", type=parse_int, default=None)
    sp.add_argument("--j", type=parse_int, default=0)
    sp.add_argument("--delta", type=parse_float, default=300.0)
    sp.add_argument("--w", type=parse_float, default=2.0)
    sp.add_argument("--d", type=int_list, default=None)
    sp.add_argument("--tol", type=parse_float, default=1e-3)
    common(sp)
    sp.set_defaults(func=cmd_moments)

    sp = sub.add_parser("verify", help="run the oracle cross-checks")
    common(sp)
    sp.set_defaults(func=cmd_verify)
    return p


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    cfg = read_config(known.config)
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    cmd = next((t for t in argv if t in sub.choices), None)
    if cmd is None:
        return
    sp = sub.choices[cmd]
    dests = {a.dest for a in sp._actions}
    unknown = set(cfg) - dests
    if unknown:
        raise ConfigError(f"unknown config keys for {cmd}: {', '.join(sorted(unknown))}")
    # string defaults are run through each option's type by argparse
    sp.set_defaults(**cfg)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except MemoryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
