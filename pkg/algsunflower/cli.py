import argparse
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from algsunflower.algcore import closure, find_isomorphism, load_structure, structure_to_json
from algsunflower.bounds import MonotoneMap, corollary_alpha, synth_beta
from algsunflower.cache import check_certificate, delete_certificate, write_certificate
from algsunflower.errors import (
    CertificateFailure,
    FormatError,
    HorizonExceeded,
    NoGenerator,
    NotMonotone,
    PreconditionViolation,
    SizeCapExceeded,
)
from algsunflower.flora import MATERIALIZE_CAP, BetaFn, MkFragmentSpec, build_mk_fragment, materialize
from algsunflower.setcore import load_family, subfamily_sunflowers
from algsunflower.sfsearch import SearchBudget, exact_sf, greedy_sunflower
from algsunflower.suites import SUITES, ExperimentReport, run_invariants, run_proposition, run_theorem
from algsunflower.utils import get_thread_count, read_json, write_json
from algsunflower.version import __version__

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NOT_FOUND = 1
EXIT_INVALID = 2
EXIT_FAILED = 3
EXIT_HORIZON = 4


def _ids(text: str) -> list[int]:
    try:
        return [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from None


def _beta(text: str) -> BetaFn:
    try:
        return BetaFn.parse(text)
    except PreconditionViolation as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _emit(payload: Any, out: str | None) -> None:
    if out:
        write_json(out, payload)
        logger.info("wrote %s", out)
    else:
        print(json.dumps(payload, indent=2, sort_keys=True))


def cmd_find_sunflower(args: argparse.Namespace) -> int:
    family = load_family(args.family)
    k = args.k if args.k is not None else family.max_size()
    witness = greedy_sunflower(family, args.n, k)
    if witness is None and args.exhaustive:
        witness = next(subfamily_sunflowers(family, args.n), None)
    if witness is None:
        logger.warning("no %d-sunflower found among %d sets", args.n, len(family))
        return EXIT_NOT_FOUND
    _emit(witness.to_json(), args.out)
    return EXIT_OK


def cmd_exact_sf(args: argparse.Namespace) -> int:
    budget = SearchBudget(args.max_universe, args.max_family, args.time_hint)
    if args.refresh:
        delete_certificate(args.n, args.k)
    answer = None if args.no_cache else check_certificate(args.n, args.k, budget)
    if answer is None:
        answer = exact_sf(args.n, args.k, budget, threads=args.threads)
        if not args.no_cache:
            write_certificate(answer, budget)
    _emit(answer.to_json(), args.out)
    return EXIT_OK


def cmd_build(args: argparse.Namespace) -> int:
    if args.kind == "mk":
        if args.k is None:
            raise PreconditionViolation("building M_k needs --k")
        payload = structure_to_json(build_mk_fragment(MkFragmentSpec(args.k, args.copies)))
    else:
        if args.beta is None:
            raise PreconditionViolation("building N_beta needs --beta")
        fragment = materialize(args.beta, args.base, args.cap)
        payload = structure_to_json(fragment.structure) | {
            "beta": args.beta.to_json(),
            "base": sorted(fragment.base),
            "elements": [x.to_json() for x in fragment.elements],
        }
    _emit(payload, args.out)
    return EXIT_OK


def cmd_closure(args: argparse.Namespace) -> int:
    sub = closure(load_structure(args.structure), args.elements)
    _emit({"seed": sorted(set(args.elements)), "carrier": sorted(sub.carrier)}, args.out)
    return EXIT_OK


def cmd_iso(args: argparse.Namespace) -> int:
    M = load_structure(args.structure)
    A, B = closure(M, args.first), closure(M, args.second)
    mapping = find_isomorphism(A, B)
    if mapping is None:
        print("none")
        return EXIT_NOT_FOUND
    _emit({"first": sorted(A.carrier), "second": sorted(B.carrier), "isomorphism": sorted(mapping.items())}, args.out)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    budget = SearchBudget(args.max_universe, args.max_family, args.time_hint)
    certificates = Path(args.certificates) if args.certificates else None
    if args.suite == "invariants":
        report = run_invariants(
            args.seed, cases=args.cases or 500, threads=args.threads, budget=budget, certificate_dir=certificates
        )
    elif args.suite == "proposition":
        report = run_proposition(range(2, args.max_k + 1), copies=args.copies, max_n=args.max_n, threads=args.threads)
    else:
        report = run_theorem(
            args.seed,
            cases=args.cases or 1000,
            beta=args.beta,
            alpha=args.alpha or "affine:1,3",
            threads=args.threads,
            budget=budget,
            certificate_dir=certificates,
        )
    if args.out:
        write_json(args.out, report.to_json())
    print(report.render_table(), end="")
    return EXIT_OK if report.ok else EXIT_FAILED


def cmd_synth_beta(args: argparse.Namespace) -> int:
    alpha = MonotoneMap.parse(args.alpha)
    if args.n is not None:
        alpha = corollary_alpha(alpha, args.n)
    certificate = synth_beta(alpha, args.checked_k)
    _emit(certificate.to_json(), args.out)
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    report = ExperimentReport.from_json(read_json(args.report), path=args.report)
    print(report.render_table(), end="")
    return EXIT_OK if report.ok else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="log debug output")
    common.add_argument("-q", "--quiet", action="store_true", help="log warnings and errors only")
    common.add_argument("--out", help="write the result to this file instead of stdout")
    common.add_argument("--threads", type=int, default=get_thread_count(), help="worker threads")

    parser = argparse.ArgumentParser(
        prog="algsunflower",
        description="Sunflowers in set families and in substructures of algebraic structures.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("find-sunflower", parents=[common], help="find an n-sunflower in a family file")
    p.add_argument("family", help='JSON file {"sets": [[...], ...]}')
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, help="largest member size (default: read from the family)")
    p.add_argument("--exhaustive", action="store_true", help="fall back to checking every sub-family")
    p.set_defaults(func=cmd_find_sunflower)

    p = commands.add_parser("exact-sf", parents=[common], help="compute SF(n, k) exactly")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--max-universe", type=int, default=24)
    p.add_argument("--max-family", type=int, default=64)
    p.add_argument("--time-hint", type=float, help="stop after roughly this many seconds")
    p.add_argument("--no-cache", action="store_true", help="ignore SUNFLOWER_CACHE_DIR")
    p.add_argument("--refresh", action="store_true", help="drop any cached certificate before searching")
    p.set_defaults(func=cmd_exact_sf)

    p = commands.add_parser("build", parents=[common], help="write M_k or N_beta fragment tables")
    p.add_argument("kind", choices=("mk", "nbeta"))
    p.add_argument("--k", type=int)
    p.add_argument("--copies", type=int, default=1)
    p.add_argument("--beta", type=_beta, help="comma separated beta(1),...,beta(H)")
    p.add_argument("--base", type=_ids, default=[], help="comma separated base atoms")
    p.add_argument("--cap", type=int, default=MATERIALIZE_CAP, help="largest fragment to materialize")
    p.set_defaults(func=cmd_build)

    p = commands.add_parser("closure", parents=[common], help="generated substructure of a structure file")
    p.add_argument("structure")
    p.add_argument("--elements", type=_ids, default=[], help="comma separated seed element ids")
    p.set_defaults(func=cmd_closure)

    p = commands.add_parser("iso", parents=[common], help="isomorphism between two generated substructures")
    p.add_argument("structure")
    p.add_argument("--first", type=_ids, required=True)
    p.add_argument("--second", type=_ids, required=True)
    p.set_defaults(func=cmd_iso)

    p = commands.add_parser("verify", parents=[common], help="run a verification suite")
    p.add_argument("suite", choices=SUITES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cases", type=int)
    p.add_argument("--beta", type=_beta)
    p.add_argument("--alpha")
    p.add_argument("--max-universe", type=int, default=24)
    p.add_argument("--max-family", type=int, default=64)
    p.add_argument("--time-hint", type=float, help="stop each exact search after roughly this many seconds")
    p.add_argument("--certificates", help="directory for SF certificates (default: SUNFLOWER_CACHE_DIR)")
    p.add_argument("--max-k", type=int, default=6)
    p.add_argument("--max-n", type=int, default=5)
    p.add_argument("--copies", type=int, default=8)
    p.set_defaults(func=cmd_verify)

    p = commands.add_parser("synth-beta", parents=[common], help="synthesize and certify beta from alpha")
    p.add_argument("--alpha", required=True, help="affine:a,b | poly:c0,c1,... | table:v0,v1,...[;slope]")
    p.add_argument("--checked-k", type=int, default=10**4)
    p.add_argument("--n", type=int, help="synthesize for the sunflower-size bound alpha itself")
    p.set_defaults(func=cmd_synth_beta)

    p = commands.add_parser("report", parents=[common], help="render a saved verification report")
    p.add_argument("report")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INVALID if e.code else EXIT_OK

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    try:
        return args.func(args)
    except (FormatError, PreconditionViolation, NotMonotone, NoGenerator) as e:
        logger.error("%s", e)
        return EXIT_INVALID
    except CertificateFailure as e:
        logger.error("%s", e)
        return EXIT_FAILED
    except (HorizonExceeded, SizeCapExceeded) as e:
        logger.error("%s", e)
        return EXIT_HORIZON
