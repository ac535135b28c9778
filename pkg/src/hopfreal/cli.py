"""Command line front end.

Subcommands ``series``, ``rank``, ``realize``, ``regenerate``, ``verify`` and
``tree``. Exit codes: 0 success, 2 verification mismatch, 3 parse error,
4 degree or bound violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

from hopfreal.chen import ControlSignals, compare_series_vs_simulation
from hopfreal.diffops import Derivation, System, format_multipoly, parse_multipoly, psi
from hopfreal.errors import DegreeExceeded, NonFinite, ParseError
from hopfreal.freealg import format_poly, format_series, parse_series
from hopfreal.realize import (
    build_realization,
    format_realization,
    generating_series,
    induced_vector_fields,
    lie_rank,
    parse_realization,
    regenerate_series,
    verify_realization,
)
from hopfreal.treehopf import TreePoly, format_treepoly, format_treetensor, tree_coproduct, tree_parse

EXIT_OK = 0
EXIT_MISMATCH = 2
EXIT_PARSE = 3
EXIT_DEGREE = 4


def _rational(v, what: str) -> Fraction:
    if isinstance(v, bool) or isinstance(v, float) or not isinstance(v, (int, str)):
        raise ParseError(f"{what} must be an exact rational string or integer, got {v!r}")
    try:
        return Fraction(v)
    except ValueError:
        raise ParseError(f"{what}: bad rational {v!r}") from None


def system_from_dict(doc: dict) -> System:
    """Validate a system document (see README for the schema)."""
    try:
        N, M = int(doc["N"]), int(doc["M"])
        names = tuple(doc.get("vars") or [f"x{i}" for i in range(1, N + 1)])
        fields = doc["derivations"]
        obs = doc["observation"]
        x0 = doc["x0"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"system file: missing or malformed field ({exc})") from None
    if len(names) != N or len(set(names)) != N:
        raise ParseError(f"system file: need {N} distinct variable names")
    if len(fields) != M or any(len(row) != N for row in fields):
        raise ParseError(f"system file: 'derivations' must be {M} lists of {N} polynomial strings")
    if len(x0) != N:
        raise ParseError(f"system file: 'x0' needs {N} entries")
    ders = tuple(Derivation(tuple(parse_multipoly(str(s), names) for s in row)) for row in fields)
    point = tuple(_rational(v, "x0 entry") for v in x0)
    return System(ders, parse_multipoly(str(obs), names), point, names)


def load_system(path: str) -> System:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from None
    return system_from_dict(doc)


def _write(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_series(args) -> int:
    p = generating_series(load_system(args.system), args.degree)
    _write(format_series(p), args.out)
    return EXIT_OK


def cmd_rank(args) -> int:
    p = parse_series(Path(args.series).read_text())
    cert = lie_rank(p, args.lie_degree)
    lines = [f"rank {cert.rank}", "complement"]
    lines += [format_poly(e.expansion) for e in cert.complement]
    lines.append("L basis")
    lines += [format_poly(e.expansion) for e in cert.L_basis]
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_realize(args) -> int:
    p = parse_series(Path(args.series).read_text())
    cert = lie_rank(p, args.lie_degree)
    if args.realization:
        real = parse_realization(Path(args.realization).read_text())
        if real.alphabet != p.alphabet:
            raise ParseError("realization and series use different alphabets")
    else:
        real = build_realization(p, cert, args.order)
        if args.vector_fields:
            induced_vector_fields(real)
        _write(format_realization(real), args.out)
    report = verify_realization(p, real, rank=cert.rank)
    for line in report.lines():
        print(line, file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_MISMATCH


def cmd_regenerate(args) -> int:
    real = parse_realization(Path(args.realization).read_text())
    _write(format_series(regenerate_series(real, args.degree)), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    system = load_system(args.system)
    specs = [s.strip() for s in args.controls.split(",")]
    if len(specs) != system.M:
        raise ParseError(f"--controls needs {system.M} comma-separated entries, got {len(specs)}")
    u = ControlSignals.from_specs(specs)
    rep = compare_series_vs_simulation(system, u, args.degree, args.t, args.steps, dps=args.dps)
    fh = open(args.csv, "w", newline="") if args.csv else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        names = list(system.var_names)
        writer.writerow(["t", *names, "f", "series", "error"])
        traj = rep.trajectory
        for k, t in enumerate(traj.t):
            f, s = traj.f[k], rep.series[k]
            writer.writerow([repr(float(t)), *(repr(float(v)) for v in traj.x[k]), repr(float(f)), repr(float(s)), repr(float(abs(f - s)))])
    finally:
        if args.csv:
            fh.close()
    order = "unresolved" if rep.order is None else f"{rep.order:.4g}"
    print(f"max_error {rep.max_error:.6g}", file=sys.stderr)
    print(f"error_at_t {rep.error:.6g}", file=sys.stderr)
    print(f"order {order}", file=sys.stderr)
    return EXIT_OK


def cmd_tree(args) -> int:
    trees = [tree_parse(s) for s in args.trees]
    if args.op == "mul":
        acc = TreePoly.of(trees[0])
        for t in trees[1:]:
            acc = acc * TreePoly.of(t)
        print(format_treepoly(acc))
    elif args.op == "comul":
        for t in trees:
            print(format_treetensor(tree_coproduct(TreePoly.of(t))))
    else:
        if not args.system:
            raise ParseError("tree apply needs --system")
        system = load_system(args.system)
        for t in trees:
            print(format_multipoly(psi(system, t, system.observation), system.var_names))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hopfreal", description="Generating series and formal realizations.")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("series", help="generating series of a system file")
    s.add_argument("system")
    s.add_argument("--degree", "-D", type=int, default=6)
    s.add_argument("--out")
    s.set_defaults(func=cmd_series)

    r = sub.add_parser("rank", help="truncated Lie rank of a series file")
    r.add_argument("series")
    r.add_argument("--lie-degree", "-d", type=int, default=3)
    r.set_defaults(func=cmd_rank)

    z = sub.add_parser("realize", help="build and verify a formal realization")
    z.add_argument("series")
    z.add_argument("--lie-degree", "-d", type=int, default=3)
    z.add_argument("--order", "-T", type=int)
    z.add_argument("--out")
    z.add_argument("--vector-fields", action="store_true", help="include the induced vector fields")
    z.add_argument("--realization", help="verify this realization dump instead of building one")
    z.set_defaults(func=cmd_realize)

    g = sub.add_parser("regenerate", help="series of a realization dump")
    g.add_argument("realization")
    g.add_argument("--degree", type=int)
    g.add_argument("--out")
    g.set_defaults(func=cmd_regenerate)

    v = sub.add_parser("verify", help="compare the truncated series with simulation")
    v.add_argument("system")
    v.add_argument("--controls", required=True, help="comma-separated: one, zero, ramp, sin:<w>, or polynomial in t")
    v.add_argument("--degree", "-D", type=int, default=6)
    v.add_argument("--t", type=float, default=0.1)
    v.add_argument("--steps", type=int, default=1000)
    v.add_argument("--dps", type=int, help="integrate with this many decimal digits (mpmath) instead of float64")
    v.add_argument("--csv", help="write the CSV here instead of stdout")
    v.set_defaults(func=cmd_verify)

    t = sub.add_parser("tree", help="tree algebra utilities")
    t.add_argument("op", choices=["mul", "comul", "apply"])
    t.add_argument("trees", nargs="+")
    t.add_argument("--system")
    t.set_defaults(func=cmd_tree)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DegreeExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGREE
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NonFinite as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGREE


if __name__ == "__main__":
    sys.exit(main())
