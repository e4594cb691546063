"""Picard iteration instrumented with the fixed-point proof's quantities.

Convergence is declared in the induced metric p^s: the iteration stops at
the first n with p^s(x_{n-1}, x_n) <= tol.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .comparison import ComparisonFunction, check_hypotheses, f_inverse
from .contraction import ConditionKind, check_contraction
from .core import (DEFAULT_TOL, CheckReport, PartialMetricSpace, SampleSet, Tolerances,
                   build_report, induced_ps, rho_and_Xp, _p, _ps)
from .errors import InputError, MapError, OutsideCarrierError
from .exprlang import PiecewiseMap, apply_map
from .verify import orbit_diagnostics

MAX_ITER = 10_000


@dataclass(frozen=True)
class OrbitStep:
    n: int
    point: float
    self_distance: float
    step: float            # p(x_n, x_{n+1})
    distance_to_start: float
    ps_step: float         # p^s(x_n, x_{n+1})

    def as_dict(self) -> dict:
        return {"n": self.n, "point": self.point, "self_distance": self.self_distance,
                "step": self.step, "distance_to_start": self.distance_to_start,
                "ps_step": self.ps_step}


@dataclass(frozen=True)
class OrbitTrace:
    space: PartialMetricSpace = field(repr=False, compare=False)
    start: float
    steps: tuple
    termination: str  # converged | max_iter | error
    error: Optional[str] = None

    @property
    def iterations(self) -> int:
        return len(self.steps) - 1

    @property
    def last(self) -> float:
        return self.steps[-1].point

    def as_dict(self, full: bool = False) -> dict:
        d = {"start": self.start, "termination": self.termination,
             "iterations": self.iterations if self.steps else 0,
             "last": self.last if self.steps else None}
        if self.error:
            d["error"] = self.error
        if full:
            d["steps"] = [s.as_dict() for s in self.steps]
        return d


def picard_orbit(space: PartialMetricSpace, T: PiecewiseMap, x0: float,
                 max_iter: int = MAX_ITER, tol: float = DEFAULT_TOL.tol) -> OrbitTrace:
    """x_{n+1} = T(x_n) from x0 until p^s(x_{n-1}, x_n) <= tol or n = max_iter.

    Every recorded step carries p(x_n, T x_n) and p^s(x_n, T x_n), so the
    final step also holds the residual of the returned candidate.  A map
    error mid-orbit is re-raised with ``partial_trace`` attached.
    """
    if max_iter < 1:
        raise InputError("max_iter must be at least 1")
    if not tol > 0:
        raise InputError("tol must be positive")
    x0 = float(x0)
    if not space.carrier.contains(x0):
        raise OutsideCarrierError(x0, space.carrier)
    steps = []
    x = x0
    termination = "max_iter"
    for n in itertools.count():
        try:
            tx = apply_map(T, space.carrier, x)
        except MapError as exc:
            exc.partial_trace = OrbitTrace(space, x0, tuple(steps), "error", str(exc))
            raise
        pxx = _p(space, x, x)
        step = _p(space, x, tx)
        ps_step = _ps(space, x, tx)
        steps.append(OrbitStep(n, x, pxx, step, _p(space, x, x0), ps_step))
        if n >= 1 and steps[-2].ps_step <= tol:
            termination = "converged"
            break
        if n >= max_iter:
            break
        x = tx
    return OrbitTrace(space, x0, tuple(steps), termination)


def compute_Mx(space: PartialMetricSpace, T: PiecewiseMap, cf: ComparisonFunction, x: float) -> float:
    """Orbit radius f^{-1}(p(x, Tx)) + p(x, x) bounding p(T^n x, x) for every n."""
    tx = apply_map(T, space.carrier, x)
    return f_inverse(cf, _p(space, x, tx)) + _p(space, x, x)


def verify_bound4(trace: OrbitTrace, Mx: float, tolerances: Tolerances = DEFAULT_TOL) -> CheckReport:
    if not trace.steps:
        raise InputError("empty trace")
    dist = np.array([s.distance_to_start for s in trace.steps])
    return build_report(
        "orbit-radius", dist - Mx,
        lambda ix: ((float(ix[0]), trace.steps[ix[0]].point), dist[ix[0]], Mx),
        "p(T^n x, x) <= M_x (points: n, T^n x)", tolerances,
        extra_echo={"start": trace.start, "M_x": Mx})


@dataclass(frozen=True)
class SolveOptions:
    max_iter: int = MAX_ITER
    tolerances: Tolerances = DEFAULT_TOL
    contraction_sample: Optional[SampleSet] = None


@dataclass(frozen=True)
class StartSummary:
    start: float
    candidate: float
    iterations: int
    termination: str
    M_x: Optional[float]
    bound4_pass: Optional[bool]
    in_Xp: bool
    diagnostics: Optional[dict]

    def as_dict(self) -> dict:
        return {"start": self.start, "candidate": self.candidate, "iterations": self.iterations,
                "termination": self.termination, "M_x": self.M_x, "bound4_pass": self.bound4_pass,
                "start_in_Xp": self.in_Xp, "diagnostics": self.diagnostics}


@dataclass(frozen=True)
class FixedPointResult:
    candidate: float
    ps_residual: float
    eq6_residual: float
    self_distance: float
    rho_p: float
    rho_method: str
    in_Xp: bool
    r_x_estimate: float
    iterations: int
    starts_agreement: float
    unique_claimed: bool
    uniqueness_scope: str
    converged: bool
    warnings: tuple
    per_start: tuple
    reports: tuple = ()
    traces: tuple = field(default=(), repr=False, compare=False)

    def as_dict(self) -> dict:
        return {"candidate": self.candidate, "ps_residual": self.ps_residual,
                "eq6_residual": self.eq6_residual, "self_distance": self.self_distance,
                "rho_p": self.rho_p, "rho_method": self.rho_method, "in_Xp": self.in_Xp,
                "r_x_estimate": self.r_x_estimate, "iterations": self.iterations,
                "starts_agreement": self.starts_agreement, "unique_claimed": self.unique_claimed,
                "uniqueness_scope": self.uniqueness_scope, "converged": self.converged,
                "warnings": list(self.warnings),
                "per_start": [s.as_dict() for s in self.per_start]}


def solve_fixed_point(space: PartialMetricSpace, T: PiecewiseMap, cf: Optional[ComparisonFunction],
                      kind: ConditionKind, starts: SampleSet,
                      opts: SolveOptions = SolveOptions()) -> FixedPointResult:
    """Run Picard orbits from every start and certify the common limit.

    Hypothesis and contraction failures become warnings: the orbits still
    run, but no uniqueness is claimed.
    """
    if len(starts) == 0:
        raise InputError("solve needs at least one start")
    tols = opts.tolerances
    cf = kind.comparison if cf is None or kind.kind == "thm1" else cf
    warnings = []
    reports = []

    hyp = check_hypotheses(cf, tols.eps_num)
    if not hyp.all_hold:
        failed = [k for k in ("phi_increasing", "f_increasing", "f_inverse_rc_at_0", "phi_iterates_vanish")
                  if not getattr(hyp, k)]
        warnings.append("hypotheses-violated: " + ", ".join(failed))
    cond_sample = opts.contraction_sample or starts
    cond = check_contraction(space, T, kind, cond_sample, tols)
    reports.append(cond)
    if not cond.passed:
        warnings.append(f"hypotheses-violated: contraction {kind.kind} fails "
                        f"(worst margin {cond.worst_margin:.6g})")

    traces = []
    for x0 in sorted(starts.points):
        traces.append(picard_orbit(space, T, x0, opts.max_iter, tols.tol))

    orbit_pts = [s.point for tr in traces for s in tr.steps]
    rho_sample = starts.with_points(orbit_pts, "orbit", tols.delta_pt)
    rho = rho_and_Xp(space, rho_sample, tols.eps_num)

    summaries = []
    for tr in traces:
        Mx = b4 = None
        try:
            Mx = compute_Mx(space, T, cf, tr.start)
            b4_rep = verify_bound4(tr, Mx, tols)
            b4 = b4_rep.passed
            reports.append(b4_rep)
            if not b4:
                warnings.append(f"orbit radius bound fails from start {tr.start!r}")
        except Exception as exc:  # f^{-1} range/hypothesis failures
            warnings.append(f"M_x unavailable from start {tr.start!r}: {exc}")
        diag = orbit_diagnostics(tr, tols.eps_num).as_dict() if len(tr.steps) >= 2 else None
        start_in = abs(_p(space, tr.start, tr.start) - rho.rho) <= tols.tol
        summaries.append(StartSummary(tr.start, tr.last, tr.iterations, tr.termination,
                                      Mx, b4, start_in, diag))
        if tr.termination != "converged":
            warnings.append(f"no convergence from start {tr.start!r} after {tr.iterations} iterations")

    first = next(tr for tr in traces if tr.start == float(starts.points[0]))
    z = first.last
    tz = apply_map(T, space.carrier, z)
    pzz = _p(space, z, z)
    ps_res = induced_ps(space, z, tz)
    eq6 = abs(_p(space, tz, z) - pzz)

    cands = [tr.last for tr in traces]
    agreement = _max_pairwise_ps(space, cands)
    in_Xp = abs(pzz - rho.rho) <= tols.tol
    r_x = min(s.self_distance for s in first.steps)
    converged = all(tr.termination == "converged" for tr in traces)

    if kind.kind in ("eq8", "eq9"):
        scope = "global"
        scoped_agree = agreement
    else:
        scope = "X_p"
        xp_cands = [s.candidate for s in summaries if s.in_Xp]
        scoped_agree = _max_pairwise_ps(space, xp_cands) if xp_cands else float("inf")
    unique = (converged and cond.passed and hyp.all_hold and in_Xp
              and scoped_agree <= tols.agree_tol)

    return FixedPointResult(
        candidate=z, ps_residual=ps_res, eq6_residual=eq6, self_distance=pzz,
        rho_p=rho.rho, rho_method=rho.method, in_Xp=in_Xp, r_x_estimate=r_x,
        iterations=max(tr.iterations for tr in traces), starts_agreement=agreement,
        unique_claimed=unique, uniqueness_scope=scope, converged=converged,
        warnings=tuple(warnings), per_start=tuple(summaries), reports=tuple(reports),
        traces=tuple(traces))


def _max_pairwise_ps(space: PartialMetricSpace, pts) -> float:
    if len(pts) < 2:
        return 0.0
    a = np.array(pts, dtype=float)
    return float(np.max(space.ps_array(a[:, None], a[None, :])))
