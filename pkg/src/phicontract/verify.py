"""Finite-evidence checks of the partial metric axioms, the induced metric, and orbit tails.

Every check here falsifies rather than proves: a pass only means no sampled
pair or triple violates the inequality beyond ``eps_num``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DEFAULT_TOL, CheckReport, PartialMetricSpace, SampleSet, Tolerances, build_report
from .errors import InputError

AXIOM_SAMPLE_CAP = 200
CAUCHY_TAIL_TOL = 1e-6


def _prepare(space: PartialMetricSpace, sample: SampleSet, cap: int):
    if len(sample) == 0:
        raise InputError("axiom checks need a nonempty sample")
    used = sample.subsample(cap)
    xs = used.array
    P = space.p_array(xs[:, None], xs[None, :])
    return used, xs, P


def check_axioms(space: PartialMetricSpace, sample: SampleSet,
                 tolerances: Tolerances = DEFAULT_TOL, cap: int = AXIOM_SAMPLE_CAP) -> list:
    """Reports for P1 (symmetry), P2 (equality), P3 (small self-distances), P4 (triangularity)."""
    used, xs, P = _prepare(space, sample, cap)
    n = xs.size
    d = np.diag(P)
    eps = tolerances.eps_num
    echo = {"sample_size": n, "sample_cap": cap, "sampled_from": len(sample)}
    upper = np.triu(np.ones((n, n), dtype=bool))
    strict = np.triu(np.ones((n, n), dtype=bool), k=1)

    p1 = build_report(
        "P1", np.abs(P - P.T),
        lambda ix: ((xs[ix[0]], xs[ix[1]]), abs(P[ix] - P[ix[::-1]]), 0.0),
        "P1: p(x,y) = p(y,x)", tolerances, mask=upper, extra_echo=echo)

    # indistancy: violation when p(x,x), p(x,y), p(y,y) agree to within eps.
    # Encoded with lhs = -spread, rhs = -2 eps so that margin > eps <=> spread < eps.
    spread = np.maximum(np.abs(d[:, None] - P), np.abs(d[None, :] - P))
    p2 = build_report(
        "P2", -spread + 2 * eps,
        lambda ix: ((xs[ix[0]], xs[ix[1]]), -spread[ix], -2 * eps),
        "P2: p(x,x) = p(x,y) = p(y,y) implies x = y", tolerances, mask=strict, extra_echo=echo)

    lhs3 = np.broadcast_to(d[:, None], P.shape)
    p3 = build_report(
        "P3", lhs3 - P,
        lambda ix: ((xs[ix[0]], xs[ix[1]]), d[ix[0]], P[ix]),
        "P3: p(x,x) <= p(x,y)", tolerances, extra_echo=echo)

    # index order [x, y, z]
    lhs4 = P[:, None, :] + d[None, :, None]
    rhs4 = P[:, :, None] + P[None, :, :]
    p4 = build_report(
        "P4", lhs4 - rhs4,
        lambda ix: ((xs[ix[0]], xs[ix[1]], xs[ix[2]]),
                    P[ix[0], ix[2]] + d[ix[1]], P[ix[0], ix[1]] + P[ix[1], ix[2]]),
        "P4: p(x,z) + p(y,y) <= p(x,y) + p(y,z)", tolerances, extra_echo=echo)
    return [p1, p2, p3, p4]


def check_induced_metric(space: PartialMetricSpace, sample: SampleSet,
                         tolerances: Tolerances = DEFAULT_TOL, cap: int = AXIOM_SAMPLE_CAP) -> CheckReport:
    """One report covering symmetry, zero diagonal, positivity and the triangle inequality of p^s.

    The scan is the concatenation of the four sub-checks; a witness label
    names the clause it violates.
    """
    used, xs, P = _prepare(space, sample, cap)
    n = xs.size
    eps = tolerances.eps_num
    d = np.diag(P)
    S = 2 * P - (d[:, None] + d[None, :])
    echo = {"sample_size": n, "sample_cap": cap, "sampled_from": len(sample)}
    parts = [
        build_report("ps-symmetry", np.abs(S - S.T),
                     lambda ix: ((xs[ix[0]], xs[ix[1]]), abs(S[ix] - S[ix[::-1]]), 0.0),
                     "p^s(x,y) = p^s(y,x)", tolerances, mask=np.triu(np.ones((n, n), dtype=bool))),
        build_report("ps-diagonal", np.abs(np.diag(S)),
                     lambda ix: ((xs[ix[0]],), abs(S[ix[0], ix[0]]), 0.0),
                     "p^s(x,x) = 0", tolerances),
        build_report("ps-positive", -S + 2 * eps,
                     lambda ix: ((xs[ix[0]], xs[ix[1]]), -S[ix], -2 * eps),
                     "p^s(x,y) > 0 for x != y", tolerances,
                     mask=np.triu(np.ones((n, n), dtype=bool), k=1)),
        build_report("ps-triangle",
                     S[:, None, :] - (S[:, :, None] + S[None, :, :]),
                     lambda ix: ((xs[ix[0]], xs[ix[1]], xs[ix[2]]),
                                 S[ix[0], ix[2]], S[ix[0], ix[1]] + S[ix[1], ix[2]]),
                     "p^s(x,z) <= p^s(x,y) + p^s(y,z)", tolerances),
    ]
    return merge_reports("induced-metric", parts, tolerances, echo)


def merge_reports(check_id: str, parts: list, tolerances: Tolerances, echo: dict) -> CheckReport:
    witnesses = sorted((w for r in parts for w in r.witnesses), key=lambda w: (-w.margin, w.points))
    if tolerances.k_max is not None:
        witnesses = witnesses[: tolerances.k_max]
    worst = max(r.worst_margin for r in parts)
    options = {"eps_num": tolerances.eps_num, "k_max": tolerances.k_max, **echo}
    return CheckReport(check_id, all(r.passed for r in parts), worst, tuple(witnesses),
                       sum(r.pairs_scanned for r in parts), options,
                       sum(r.violations for r in parts))


@dataclass(frozen=True)
class OrbitDiagnostics:
    r_x_estimate: float
    self_distances_nonincreasing: bool
    is_zero_cauchy: bool
    ps_cauchy: bool
    tail_length: int
    tail_max_p: float
    tail_max_ps_step: float

    def as_dict(self) -> dict:
        return {"r_x_estimate": self.r_x_estimate,
                "self_distances_nonincreasing": self.self_distances_nonincreasing,
                "is_zero_cauchy": self.is_zero_cauchy,
                "ps_cauchy": self.ps_cauchy,
                "heuristic_tail": {"length": self.tail_length, "max_p": self.tail_max_p,
                                   "max_ps_step": self.tail_max_ps_step,
                                   "threshold": CAUCHY_TAIL_TOL}}


def orbit_diagnostics(trace, eps_num: float = DEFAULT_TOL.eps_num,
                      tail_tol: float = CAUCHY_TAIL_TOL) -> OrbitDiagnostics:
    """Monotonicity of self-distances, r_x = inf p(x_n, x_n), and tail Cauchy heuristics.

    The Cauchy flags look only at the last quarter of the recorded iterates.
    """
    steps = trace.steps
    if len(steps) < 2:
        raise InputError("orbit diagnostics need at least two iterates")
    selfd = np.array([s.self_distance for s in steps])
    nonincr = bool(np.all(selfd[1:] <= selfd[:-1] + eps_num))
    k = max(2, (len(steps) + 3) // 4)
    tail = np.array([s.point for s in steps[-k:]])
    tail_p = trace.space.p_array(tail[:, None], tail[None, :])
    tail_ps = np.array([s.ps_step for s in steps[-k:]])
    return OrbitDiagnostics(
        r_x_estimate=float(selfd.min()),
        self_distances_nonincreasing=nonincr,
        is_zero_cauchy=bool(np.all(tail_p <= tail_tol)),
        ps_cauchy=bool(np.all(tail_ps <= tail_tol)),
        tail_length=k,
        tail_max_p=float(tail_p.max()),
        tail_max_ps_step=float(tail_ps.max()),
    )
