"""Command line front end: ``twistpara <command> ...``.

Exit status is 0 on success, 1 when a search is exhausted or a certificate
is invalid, and 2 on usage errors.  Every file written carries the run
configuration, and files are replaced atomically.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass
from fractions import Fraction

from . import __version__
from ._io import atomic_write
from .certify import (
    build_certificate,
    compute_twist_set,
    find_parallelepiped,
    load_certificate,
    verify_certificate,
)
from .curve import X0_19, X0_19_CONDUCTOR, OracleConfig, WeierstrassCurve, load_rank_table
from .density import format_set, read_set_file, smoothed_density
from .parasearch import GuidedPolicy, SearchExhausted, format_record, indstep_diagnostics


@dataclass
class RunConfig:
    command: str
    curve: str
    N: int
    search_bound: int
    sieve_height: int
    table: str | None
    parity: bool
    conductor: int | None
    threads: int
    version: str = __version__

    def header(self) -> str:
        return "config " + json.dumps(asdict(self), sort_keys=True)


def _curve(text: str) -> WeierstrassCurve:
    try:
        coeffs = [Fraction(part) for part in text.strip("[] ").split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad coefficient list {text!r}") from exc
    if len(coeffs) != 5:
        raise argparse.ArgumentTypeError("a curve is given as a1,a2,a3,a4,a6")
    try:
        return WeierstrassCurve(*coeffs)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _positive(text: str) -> int:
    v = int(float(text)) if "e" in text.lower() else int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return v


def _nonnegative(text: str) -> int:
    v = int(float(text)) if "e" in text.lower() else int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("expected a nonnegative integer")
    return v


def _add_curve_options(p: argparse.ArgumentParser):
    g = p.add_argument_group("twist set")
    g.add_argument("--curve", type=_curve, default=X0_19, help="a1,a2,a3,a4,a6 (default: X0(19) = 0,1,1,-9,-15)")
    g.add_argument("-N", type=_positive, default=20000, help="bound on |d| (default 20000)")
    g.add_argument(
        "--search-bound",
        type=_nonnegative,
        default=0,
        help="naive height per twist the sieve missed; 0 disables it (default)",
    )
    g.add_argument("--sieve-height", type=_nonnegative, default=1000, help="height of the twist sieve (default 1000)")
    g.add_argument("--table", help="rank table with d<TAB>x<TAB>y or d<TAB>? lines")
    g.add_argument("--parity", action="store_true", help="skip per-twist search where the root number is +1")
    g.add_argument("--conductor", type=_positive, help="conductor of the curve, needed by --parity")
    g.add_argument("--threads", type=_positive, default=1)
    g.add_argument("--set", dest="set_file", help="read the set from a file instead of computing it")


def _run_config(args) -> RunConfig:
    return RunConfig(
        command=args.command,
        curve=str(args.curve),
        N=args.N,
        search_bound=args.search_bound,
        sieve_height=args.sieve_height,
        table=args.table,
        parity=args.parity,
        conductor=_conductor(args),
        threads=args.threads,
    )


def _conductor(args):
    if args.conductor:
        return args.conductor
    return X0_19_CONDUCTOR if args.curve == X0_19 else None


def _twist_set(args):
    if args.parity and _conductor(args) is None:
        raise UsageError("--parity needs --conductor for this curve")
    config = OracleConfig(
        search_bound=args.search_bound,
        table=load_rank_table(args.table, args.curve) if args.table else None,
        parity_filter=args.parity,
        conductor=_conductor(args),
    )
    return compute_twist_set(args.curve, args.N, config, sieve_height=args.sieve_height, threads=args.threads)


def _the_set(args):
    if args.set_file:
        return read_set_file(args.set_file)
    return _twist_set(args).derived


class UsageError(Exception):
    pass


def _emit(args, text: str):
    if getattr(args, "output", None):
        atomic_write(args.output, text)
    else:
        sys.stdout.write(text)


def _policy(args) -> GuidedPolicy:
    return GuidedPolicy(mode=args.policy, window=tuple(args.window))


# --------------------------------------------------------------------------
# commands


def cmd_sieve(args) -> int:
    t0 = time.perf_counter()
    tw = _twist_set(args)
    header = "\n".join(
        [
            f"twist set of {args.curve} for d <= {args.N}",
            f"{len(tw.witnessed_classes)} witnessed squarefree classes, {len(tw.derived)} elements",
            _run_config(args).header(),
        ]
    )
    _emit(args, format_set(tw.derived, header))
    if args.store:
        from .certify import write_witness_store

        write_witness_store(args.store, args.curve, tw.statuses)
    print(
        f"{len(tw.derived)} of {args.N} integers witnessed ({time.perf_counter() - t0:.2f} s)",
        file=sys.stderr,
    )
    return 0


def cmd_density(args) -> int:
    S = _the_set(args)
    T = args.T if args.T else max(3.0, S.universe_bound / 10.0)
    rep = smoothed_density(S, T)
    _emit(
        args,
        f"N={S.universe_bound} |S|={len(S)} T={rep.T:g} "
        f"smoothed_density={rep.value:.12g} truncation_bound={rep.truncation_error_bound:.3g}\n",
    )
    return 0


def cmd_find(args) -> int:
    S = _the_set(args)
    finder = "brute" if args.brute else "guided" if args.guided else "auto"
    try:
        P, how = find_parallelepiped(S, args.n, finder, _policy(args))
    except SearchExhausted as exc:
        print(f"exhausted: {exc}", file=sys.stderr)
        return 1
    lines = [f"# found by {how} search"]
    if not args.set_file:
        lines.append("# " + _run_config(args).header())
    lines.append(format_record(P))
    _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_certify(args) -> int:
    tw = _twist_set(args)
    finder = "brute" if args.brute else "guided" if args.guided else "auto"
    try:
        P, how = find_parallelepiped(tw.derived, args.n, finder, _policy(args))
    except SearchExhausted as exc:
        print(f"exhausted: {exc}", file=sys.stderr)
        return 1
    meta = {"config": asdict(_run_config(args)), "finder": how, "window": list(args.window), "policy": args.policy}
    cert = build_certificate(tw, P, meta)
    _emit(args, cert.to_json())
    print(format_record(P), file=sys.stderr)
    return 0


def cmd_verify(args) -> int:
    try:
        doc = load_certificate(args.certificate)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"invalid: cannot read certificate: {exc}", file=sys.stderr)
        return 1
    problems = verify_certificate(doc)
    if problems:
        for p in problems:
            print(f"invalid: {p}")
        return 1
    print(f"valid: {len(doc['entries'])} twists, generators {', '.join(doc['generators'])}")
    return 0


def cmd_diagnose(args) -> int:
    S = _the_set(args)
    a, b = args.window
    T = args.T if args.T else max(3.0, S.universe_bound / 10.0)
    rep = indstep_diagnostics(S, a, b, T)
    _emit(args, rep.format() + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twistpara", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"twistpara {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sieve", help="compute the witnessed twist set and write it as a set file")
    _add_curve_options(p)
    p.add_argument("-o", "--output")
    p.add_argument("--store", help="also write the witness points here")
    p.set_defaults(func=cmd_sieve)

    p = sub.add_parser("density", help="smoothed density of a set")
    _add_curve_options(p)
    p.add_argument("-T", type=float, help="scale (default N/10)")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_density)

    for name, func, helptext in (
        ("find", cmd_find, "look for a strict n-parallelepiped"),
        ("certify", cmd_certify, "find a parallelepiped of twists and write its certificate"),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_curve_options(p)
        p.add_argument("--n", type=_positive, default=2, help="dimension (default 2)")
        how = p.add_mutually_exclusive_group()
        how.add_argument("--brute", action="store_true", help="brute force only")
        how.add_argument("--guided", action="store_true", help="guided search only")
        p.add_argument("--window", type=_positive, nargs=2, default=(2, 97), metavar=("A", "B"))
        p.add_argument("--policy", choices=("heuristic", "rigorous"), default="heuristic")
        p.add_argument("-o", "--output")
        p.set_defaults(func=func)

    p = sub.add_parser("verify", help="recheck a certificate")
    p.add_argument("certificate")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("diagnose", help="check the induction-step inequalities on a set")
    _add_curve_options(p)
    p.add_argument("--window", type=_positive, nargs=2, default=(2, 97), metavar=("A", "B"))
    p.add_argument("-T", type=float, help="scale (default N/10)")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
