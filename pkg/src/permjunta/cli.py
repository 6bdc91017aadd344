"""Command-line entry point: permjunta <subcommand> ...

Exit codes: 0 success, 2 verification or contract failure, 3 resource limit, 4 I/O or parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Sequence

import numpy as np

from permjunta import io as pio
from permjunta.config import CEILINGS, SYMBOLIC_EPSILON, ExperimentConfig, env_threads, resolve_epsilon
from permjunta.errors import ParseError, PermJuntaError, ResourceLimitError
from permjunta.exact import format_fraction
from permjunta.perm import PermFamily, pairwise_agreement_counts, to_one_based

EXIT_OK, EXIT_CONTRACT, EXIT_RESOURCE, EXIT_IO = 0, 2, 3, 4


def _echo(args: argparse.Namespace) -> None:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    print("# config " + json.dumps(cfg, sort_keys=True, default=str), file=sys.stderr)


def _emit(data: dict, out: str | None) -> None:
    text = pio.write_json(data, out)
    if out is None:
        sys.stdout.write(text)


def _config(args: argparse.Namespace, **kw) -> ExperimentConfig:
    budgets = None
    if getattr(args, "long_running", False):
        budgets = dict(ExperimentConfig().budgets, search=CEILINGS["search"])
    cfg = ExperimentConfig(threads=args.threads, seed=args.seed, **kw)
    if budgets:
        cfg.budgets = budgets
    return cfg


# ---------------------------------------------------------------------------
# subcommands


def cmd_spectrum(args: argparse.Namespace) -> int:
    from permjunta.extremal import build_agreement_graph, diagonalized_spectrum, predicted_spectrum
    from permjunta.rep_theory import partition_str, spectrum

    cfg = _config(args, n=max(args.n, 1))
    cfg.require_budget("spectral", args.n)
    rows = spectrum(args.n, args.a, cfg.budgets["spectral"])
    sys.stdout.write(
        pio.to_csv(
            ["partition", "dimension", "eigenvalue"],
            ((partition_str(r.partition), r.f_alpha, format_fraction(r.eigenvalue)) for r in rows),
        )
    )
    if args.diagonalize:
        cfg.require_budget("diagonalize", args.n)
        g = build_agreement_graph(args.n, args.a)
        dev = float(np.abs(diagonalized_spectrum(g) - predicted_spectrum(g)).max())
        print(f"# diagonalization deviation {dev:.3e}", file=sys.stderr)
        if dev > 1e-9:
            return EXIT_CONTRACT
    return EXIT_OK


def cmd_decompose(args: argparse.Namespace) -> int:
    from permjunta.regularity import decompose, verify_decomposition

    F = pio.read_family(args.family)
    s = args.s if args.s is not None else 2 * args.r - 1
    cfg = _config(args, n=F.n, r=args.r, s=s)
    cfg.require_budget("decompose", F.n)
    d = decompose(F, args.r, s, cfg.threads)
    rep = verify_decomposition(d)
    print(d.tree.render())
    for line in rep.lines():
        print(line)
    data = d.to_json()
    data["verification"] = {"ok": rep.ok, "failures": list(rep.failures)}
    if args.out:
        pio.write_json(data, args.out)
    return EXIT_OK if rep.ok else EXIT_CONTRACT


def _violating_pair(F: PermFamily, test) -> list[list[int]] | None:
    A = F.array
    for start, block in zip(range(0, A.shape[0], 512), pairwise_agreement_counts(A, A)):
        for i, row in enumerate(block):
            for j in np.nonzero(test(row))[0]:
                if j != start + i:
                    return [to_one_based(F.sorted_members[start + i]), to_one_based(F.sorted_members[int(j)])]
    return None


def cmd_check(args: argparse.Namespace) -> int:
    from permjunta.pseudorandom import check_captureable, check_quasirandom, check_quasiregular

    F = pio.read_family(args.family)
    if args.t_intersecting is not None:
        t = args.t_intersecting
        pair = _violating_pair(F, lambda row: row < t)
        report = {"kind": "t-intersecting", "t": t, "verdict": pair is None, "witness": pair}
    elif args.intersection_free is not None:
        a = args.intersection_free
        pair = _violating_pair(F, lambda row: row == a)
        report = {"kind": "intersection-free", "agreements": a, "verdict": pair is None, "witness": pair}
    elif args.captureable is not None:
        s, eps = int(args.captureable[0]), resolve_epsilon(_epsilon_arg(args.captureable[1]), F.n)
        report = check_captureable(F, s, eps, args.threads).to_json()
    elif args.quasiregular is not None:
        s, alpha = int(args.quasiregular[0]), pio.parse_rational(args.quasiregular[1])
        report = check_quasiregular(F, s, alpha, args.threads).to_json()
    else:
        r, eps = int(args.quasirandom[0]), resolve_epsilon(_epsilon_arg(args.quasirandom[1]), F.n)
        report = check_quasirandom(F, r, eps, args.threads).to_json()
    report["n"] = F.n
    report["size"] = len(F)
    _emit(report, args.out)
    return EXIT_OK


def _epsilon_arg(text: str) -> str | Fraction:
    return text if text.replace(" ", "") == SYMBOLIC_EPSILON else pio.parse_rational(text)


def cmd_search(args: argparse.Namespace) -> int:
    from permjunta.extremal import search_extremal

    cfg = _config(args, n=args.n)
    cfg.require_budget("search", args.n)
    res = search_extremal(
        args.n, args.forbidden_agreements, not args.no_symmetry, cfg.threads, args.long_running
    )
    print(f"size: {res.size}", file=sys.stderr)
    if res.hoffman is not None:
        print(f"Hoffman bound: {format_fraction(res.hoffman)} (tight: {res.tight})", file=sys.stderr)
    _emit(res.to_json(), args.out)
    return EXIT_OK


def cmd_surgery_demo(args: argparse.Namespace) -> int:
    from permjunta.corpus import SURGERY_CORPUS, surgery_instance
    from permjunta.surgery import MatchingQuadruple, classify_edges, run_surgery, validate_good_properties

    if args.list:
        for inst in SURGERY_CORPUS:
            print(f"{inst.name}: n={inst.n}, covers {', '.join(inst.covers)}")
        return EXIT_OK
    inst = surgery_instance(args.instance)
    cfg = _config(args, n=inst.n)
    cfg.require_budget("surgery", inst.n)
    F1, F2 = inst.families()
    q = MatchingQuadruple.from_families(F1, F2)
    good = validate_good_properties(q)
    print(f"instance {inst.name}: n={inst.n}, |F1|={len(F1)}, |F2|={len(F2)}")
    print(f"good properties: {good.ok}")
    print(f"components: {', '.join(str(c) for c in classify_edges(q).cycles + classify_edges(q).paths)}")
    run = run_surgery(F1, F2, s=args.s, t=inst.t, enforce=not args.waive)
    for line in run.lines():
        print(line)
    print(f"final n = {run.q.n}; all checks {'green' if run.ok else 'FAILED'}")
    if args.out:
        pio.write_json({"instance": inst.name, **run.to_json()}, args.out)
    return EXIT_OK if run.ok and good.ok else EXIT_CONTRACT


def cmd_pipeline(args: argparse.Namespace) -> int:
    from permjunta.pipeline import DEMO, demo_family, run_pipeline

    if args.family:
        F = pio.read_family(args.family)
        t, r = args.t or 1, args.r or 2
    else:
        F = demo_family()
        t, r = args.t or DEMO["t"], args.r or DEMO["r"]
    cfg = _config(args, n=F.n, t=t, r=r, epsilon=args.epsilon, waive=args.waive)
    cfg.require_budget("surgery", F.n)
    res = run_pipeline(F, t, r, cfg.eps(), enforce=not args.waive, N=args.N, threads=cfg.threads)
    for line in res.lines():
        print(line)
    if args.out:
        pio.write_json({"config": cfg.to_json(), **res.to_json()}, args.out)
    return EXIT_OK if res.ok else EXIT_CONTRACT


def cmd_accept(args: argparse.Namespace) -> int:
    from permjunta.acceptance import CRITERIA, run_criterion

    only = [int(x) for x in args.only.split(",")] if args.only else None
    ok = True
    for num, *_ in CRITERIA:
        if only is not None and num not in only:
            continue
        c = run_criterion(num)
        print(c.line(), flush=True)
        ok &= c.passed
    return EXIT_OK if ok else EXIT_CONTRACT


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="permjunta", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, default=None, help="worker threads (default: $PERMJUNTA_THREADS or 1)")
    parser.add_argument("--seed", type=int, default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="eigenvalue table of the agreement-a Cayley graph as CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--a", type=int, default=0, help="agreement count (0 gives the derangement graph)")
    p.add_argument("--diagonalize", action="store_true", help="cross-check against dense diagonalization")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("decompose", help="weak-regularity decomposition of a family")
    p.add_argument("family")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--s", type=int, default=None, help="capture size (default 2r-1)")
    p.add_argument("--out", default=None, help="write the decomposition JSON here")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("check", help="test one intersection or pseudorandomness property")
    p.add_argument("family")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--t-intersecting", type=int, metavar="T")
    g.add_argument("--intersection-free", type=int, metavar="A", help="forbidden agreement count")
    g.add_argument("--captureable", nargs=2, metavar=("S", "EPS"))
    g.add_argument("--quasiregular", nargs=2, metavar=("S", "ALPHA"))
    g.add_argument("--quasirandom", nargs=2, metavar=("R", "EPS"))
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("search", help="exact maximum family avoiding a given agreement count")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--forbidden-agreements", type=int, default=0)
    p.add_argument("--no-symmetry", action="store_true")
    p.add_argument("--long-running", action="store_true", help="allow n = 6")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("surgery-demo", help="run the surgery moves on a bundled instance")
    p.add_argument("--instance", default="cycle4-n6")
    p.add_argument("--list", action="store_true")
    p.add_argument("--s", type=int, default=1, help="quasiregularity order to track")
    p.add_argument("--waive", action="store_true", help="log failed size gates instead of stopping")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_surgery_demo)

    p = sub.add_parser("pipeline", help="end-to-end run on a family (the bundled S_7 demo by default)")
    p.add_argument("--family", default=None)
    p.add_argument("--t", type=int, default=None)
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--epsilon", default=SYMBOLIC_EPSILON)
    p.add_argument("--N", type=int, default=None, help="capture size for the transfer step")
    p.add_argument("--waive", action="store_true", help="log failed size gates instead of stopping")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("accept", help="run the acceptance suite")
    p.add_argument("--only", default=None, help="comma-separated criterion numbers")
    p.set_defaults(func=cmd_accept)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.threads is None:
            args.threads = env_threads(1)
        _echo(args)
        return args.func(args)
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (PermJuntaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
