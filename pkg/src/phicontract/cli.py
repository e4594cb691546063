"""Command line entry point: ``phicontract <command> <scenario> [flags]``.

Exit status: 0 when everything passes or converges, 1 when a violation or
non-convergence is found, 2 on input errors.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .comparison import check_hypotheses, f_inverse, lemma3_crosscheck, phi_iterate
from .contraction import ConditionKind, check_contraction, corollary2_equivalence, falsify
from .core import DEFAULT_TOL, SampleSet
from .errors import InputError, MapError, PhiContractError
from .report import dumps, render_text
from .scenario import load_scenario
from .solver import SolveOptions, solve_fixed_point
from .verify import check_axioms, check_induced_metric


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phicontract", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("scenario", help="builtin scenario name or path to a scenario JSON file")
        p.add_argument("--format", choices=("json", "text"), default="json")
        p.add_argument("--grid-step", type=float, default=None, help="override the scenario grid step")
        p.add_argument("--max-witnesses", type=int, default=None,
                       help="witness cap per report (0 = report all)")

    def condition(p):
        p.add_argument("--condition", choices=("eq3", "eq8", "eq9", "thm1"), default=None)
        p.add_argument("--alpha", type=float, default=None, help="alpha for thm1")

    common(sub.add_parser("axioms", help="partial metric axioms and the induced metric"))
    p = sub.add_parser("phi", help="comparison-function hypotheses")
    common(p)
    p.add_argument("--iterate", nargs=2, metavar=("T", "N"), default=None)
    p.add_argument("--inverse", type=float, metavar="S", default=None)
    p = sub.add_parser("contraction", help="scan a contraction condition over sampled pairs")
    common(p)
    condition(p)
    p = sub.add_parser("solve", help="Picard iteration with fixed-point certificate")
    common(p)
    condition(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--start", type=float, default=None)
    g.add_argument("--all-starts", action="store_true")
    p.add_argument("--max-iter", type=int, default=10_000)
    p = sub.add_parser("falsify", help="seeded random counterexample search")
    common(p)
    condition(p)
    p.add_argument("--budget", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _condition(scn, args) -> ConditionKind:
    kind = getattr(args, "condition", None) or scn.condition.kind
    if kind == "thm1":
        alpha = args.alpha if getattr(args, "alpha", None) is not None else (
            scn.condition.alpha if scn.condition.kind == "thm1" else scn.phi.alpha)
        if alpha is None:
            raise InputError("thm1 needs --alpha (scenario phi is not linear)")
        return ConditionKind.thm1(alpha)
    return ConditionKind(kind, phi=scn.phi)


def _tolerances(scn, args):
    tol = scn.tolerances
    if args.max_witnesses is not None:
        from dataclasses import replace
        tol = replace(tol, k_max=None if args.max_witnesses == 0 else args.max_witnesses)
    return tol


def run(argv=None) -> tuple:
    """Execute one command; returns (exit_code, document or None, error message)."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        scn = load_scenario(args.scenario)
        tol = _tolerances(scn, args)
        grid_step = args.grid_step if args.grid_step is not None else scn.sampling.grid_step
        doc = {"scenario": scn.name, "command": args.command,
               "options": {"tolerances": tol.as_dict(),
                           "sampling": {"grid_step": grid_step, "orbit_depth": scn.sampling.orbit_depth},
                           "partial_metric": scn.space.distance_source,
                           "carrier": scn.carrier.as_dict(),
                           "phi": scn.phi.as_dict()},
               "reports": []}
        code = _dispatch(args, scn, tol, grid_step, doc)
    except MapError as exc:
        doc["error"] = {"type": type(exc).__name__, "message": str(exc),
                        "x": getattr(exc, "x", None), "image": getattr(exc, "image", None)}
        code = 1
    except (InputError, PhiContractError) as exc:
        return 2, None, str(exc)
    doc["version"] = __version__
    return code, doc, ""


def _dispatch(args, scn, tol, grid_step, doc) -> int:
    cmd = args.command
    if cmd == "axioms":
        sample = scn.sample(with_orbits=False, grid_step=grid_step)
        reps = check_axioms(scn.space, sample, tol) + [check_induced_metric(scn.space, sample, tol)]
        doc["reports"] = [r.as_dict() for r in reps]
        return 0 if all(r.passed for r in reps) else 1

    if cmd == "phi":
        hyp = check_hypotheses(scn.phi, tol.eps_num)
        viol = lemma3_crosscheck(hyp)
        doc["hypotheses"] = hyp.as_dict()
        doc["lemma3_violations"] = viol
        if args.iterate is not None:
            t, n = float(args.iterate[0]), int(args.iterate[1])
            doc["iterate"] = {"t": t, "n": n, "value": phi_iterate(scn.phi, t, n)}
        if args.inverse is not None:
            t = f_inverse(scn.phi, args.inverse)
            doc["inverse"] = {"s": args.inverse, "value": t, "f_of_value": scn.phi.f(t)}
        return 0 if hyp.all_hold and not viol else 1

    kind = _condition(scn, args)
    doc["options"]["condition"] = kind.as_dict()

    if cmd == "contraction":
        sample = scn.sample(grid_step=grid_step)
        rep = check_contraction(scn.space, scn.map, kind, sample, tol)
        doc["reports"] = [rep.as_dict()]
        ok = rep.passed
        if kind.kind == "thm1" and kind.alpha > 0:
            eq = corollary2_equivalence(scn.space, scn.map, kind.alpha, sample, tol)
            doc["corollary2"] = {"alpha": kind.alpha, "equivalent": eq}
            ok = ok and eq
        return 0 if ok else 1

    if cmd == "falsify":
        out = falsify(scn.space, scn.map, kind, args.budget, args.seed, tol)
        doc["falsify"] = out.as_dict()
        return 1 if out.witness is not None else 0

    # solve
    if args.start is not None:
        starts = SampleSet.from_points([args.start], scn.carrier, "grid", tol.delta_pt)
    else:
        starts = scn.start_set()
    opts = SolveOptions(args.max_iter, tol, scn.sample(grid_step=grid_step))
    res = solve_fixed_point(scn.space, scn.map, scn.phi, kind, starts, opts)
    doc["reports"] = [r.as_dict() for r in res.reports]
    doc["result"] = res.as_dict()
    return 0 if res.converged and not res.warnings else 1


def main(argv=None) -> int:
    code, doc, err = run(argv)
    if doc is None:
        print(f"phicontract: error: {err}", file=sys.stderr)
        return code
    fmt = "json"
    args = argv if argv is not None else sys.argv[1:]
    if "--format" in args:
        fmt = args[args.index("--format") + 1]
    elif any(a == "--format=text" for a in args):
        fmt = "text"
    print(render_text(doc) if fmt == "text" else dumps(doc))
    return code


if __name__ == "__main__":
    sys.exit(main())
