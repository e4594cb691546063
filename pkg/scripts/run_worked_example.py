"""Reproduce the two-interval worked example end to end.

Runs the condition scan on the repaired carrier, the usual-metric failure,
the Picard solve from every start, and the orbit radius table.

    python3 scripts/run_worked_example.py [--grid-step 0.03125]
"""

import argparse
import math
import time

from phicontract import ComparisonFunction, ConditionKind
from phicontract.contraction import check_contraction
from phicontract.core import Tolerances
from phicontract.errors import NotASelfMapError
from phicontract.exprlang import apply_map
from phicontract.scenario import load_scenario
from phicontract.solver import SolveOptions, compute_Mx, solve_fixed_point


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--grid-step", type=float, default=1 / 32)
    args = ap.parse_args()
    rational = ComparisonFunction.rational()
    eq8 = ConditionKind("eq8", phi=rational)

    unrepaired = load_scenario("example2-paper")
    try:
        apply_map(unrepaired.map, unrepaired.carrier, 3.0)
    except NotASelfMapError as exc:
        print(f"unrepaired carrier: {exc}")

    ex2 = load_scenario("example2-repaired")
    sample = ex2.sample(grid_step=args.grid_step)
    t0 = time.perf_counter()
    rep = check_contraction(ex2.space, ex2.map, eq8, sample)
    print(f"repaired carrier, eq8: pass={rep.passed} worst={rep.worst_margin:.3g} "
          f"pairs={rep.pairs_scanned} ({time.perf_counter() - t0:.2f}s)")

    usual = load_scenario("usual-metric-example2")
    rep = check_contraction(usual.space, usual.map, eq8, usual.sample(grid_step=args.grid_step),
                            Tolerances(k_max=None))
    w13 = next(w for w in rep.witnesses if w.points == (1.0, 3.0))
    print(f"usual metric, eq8: pass={rep.passed} worst={rep.worst_margin:.6g} at {rep.witnesses[0].points}; "
          f"at (1, 3): lhs={w13.lhs:.6g} rhs={w13.rhs:.6g} margin={w13.margin:.15g} (7/30={7 / 30:.15g})")

    res = solve_fixed_point(ex2.space, ex2.map, rational, eq8, ex2.start_set(),
                            SolveOptions(contraction_sample=sample))
    print(f"solve: z={res.candidate:.3g} p(z,z)={res.self_distance:.3g} rho_p={res.rho_p} "
          f"unique={res.unique_claimed} agreement={res.starts_agreement:.2g}")
    print(f"{'start':>6} {'iters':>6} {'M_x':>12} {'closed form':>12}")
    for s in res.per_start:
        x = s.start
        # p(x, Tx) = x for every start here, so M_x = f^{-1}(x) + x with f^{-1}(s) = (s + sqrt(s^2 + 4s))/2
        closed = (x + math.sqrt(x * x + 4 * x)) / 2 + x
        print(f"{x:>6g} {s.iterations:>6d} {compute_Mx(ex2.space, ex2.map, rational, x):>12.9f} {closed:>12.9f}")


if __name__ == "__main__":
    main()
