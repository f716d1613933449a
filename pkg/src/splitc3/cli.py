"""Command-line entry point: convergence ladders, error fields, verification."""

from __future__ import annotations

import argparse
import logging
import sys

from .harness import PROBLEM_IDS, ExperimentConfig, run_convergence, run_errorfield, verify
from .schemes import SchemeId


def _parse_ladder(spec: str) -> list[float]:
    """'k0..k1' -> [0.02 * 2^-k for k in k0..k1]."""
    try:
        k0, k1 = spec.split("..")
        k0, k1 = int(k0), int(k1)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad ladder spec {spec!r}, expected 'k0..k1'") from exc
    if k1 < k0:
        raise argparse.ArgumentTypeError("ladder end before start")
    return [0.02 * 2.0**-k for k in range(k0, k1 + 1)]


def _parse_methods(spec: str) -> list[str]:
    return [SchemeId.parse(m).value for m in spec.split(",")]


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--problem", required=True, choices=PROBLEM_IDS)
    p.add_argument("--T", type=float, default=0.1)
    p.add_argument("--dx", type=float, default=None)
    p.add_argument("--ref-tau", type=float, default=1e-6)
    p.add_argument("--ref-mode", choices=["strang", "affine"], default=None)
    p.add_argument("--out", default="results")
    p.add_argument("--jobs", type=int, default=1)


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    ap = argparse.ArgumentParser(prog="splitc3")
    sub = ap.add_subparsers(dest="command", required=True)

    pc = sub.add_parser("convergence", help="run a (scheme x tau) error ladder")
    _add_common(pc)
    pc.add_argument("--methods", type=_parse_methods, default=[s.value for s in SchemeId])
    pc.add_argument("--tau-ladder", type=_parse_ladder, default=_parse_ladder("0..6"))

    pe = sub.add_parser("errorfield", help="pointwise |error| field at one tau")
    _add_common(pe)
    pe.add_argument("--method", required=True)
    pe.add_argument("--tau", type=float, required=True)

    pv = sub.add_parser("verify", help="run the numerical property suite")
    pv.add_argument("--self-test", action="store_true")

    sub.add_parser("list-problems", help="list known problem ids")

    args = ap.parse_args(argv)

    if args.command == "list-problems":
        for pid in PROBLEM_IDS:
            print(pid)
        return 0

    if args.command == "verify":
        report = verify(self_test=args.self_test)
        ok = True
        for c in report.checks:
            status = "PASS" if c.passed else "FAIL"
            print(f"[{status}] {c.name}: {c.detail}")
        if args.self_test:
            ok = any(c.name == "self_test_mutation_detected" and c.passed for c in report.checks)
        else:
            ok = report.passed
        return 0 if ok else 1

    cfg = ExperimentConfig(
        problem=args.problem,
        T=args.T,
        dx=args.dx,
        ref_tau=args.ref_tau,
        ref_mode=args.ref_mode,
        out_dir=args.out,
        jobs=args.jobs,
    )
    if args.command == "convergence":
        cfg.schemes = args.methods
        cfg.tau_ladder = args.tau_ladder
        path = run_convergence(cfg)
        print(path)
        return 0
    if args.command == "errorfield":
        path = run_errorfield(cfg, SchemeId.parse(args.method).value, args.tau)
        print(path)
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
