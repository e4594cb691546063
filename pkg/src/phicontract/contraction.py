"""Contraction-type conditions on a self-map, scanned over sampled pairs.

Four conditions are supported, all of the form p(Tx, Ty) <= rhs(x, y):

* ``eq3``  -- max{phi(p(x,y)), p(x,x), p(y,y)}
* ``eq8``  -- max{phi(p(x,y)), (p(x,x) + p(y,y)) / 2}
* ``eq9``  -- phi(p(x,y))
* ``thm1`` -- max{alpha p(x,y), p(x,x), p(y,y)}, the linear special case of ``eq3``
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .comparison import ComparisonFunction
from .core import (DEFAULT_TOL, CheckReport, PartialMetricSpace, SampleSet, Tolerances, Witness,
                   build_report)
from .errors import InputError
from .exprlang import PiecewiseMap, apply_map_array

KINDS = ("eq3", "eq8", "eq9", "thm1")


@dataclass(frozen=True)
class ConditionKind:
    kind: str
    phi: Optional[ComparisonFunction] = None
    alpha: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown condition {self.kind!r}; expected one of {KINDS}")
        if self.kind == "thm1":
            if self.alpha is None or not (0 <= self.alpha < 1):
                raise InputError(f"thm1 needs alpha in [0, 1), got {self.alpha!r}")
        elif self.phi is None:
            raise InputError(f"{self.kind} needs a comparison function")

    @classmethod
    def eq3(cls, phi): return cls("eq3", phi=phi)

    @classmethod
    def eq8(cls, phi): return cls("eq8", phi=phi)

    @classmethod
    def eq9(cls, phi): return cls("eq9", phi=phi)

    @classmethod
    def thm1(cls, alpha): return cls("thm1", alpha=float(alpha))

    @property
    def comparison(self) -> ComparisonFunction:
        """phi for this condition; thm1 uses linear(alpha)."""
        return ComparisonFunction.linear(self.alpha) if self.kind == "thm1" else self.phi

    def as_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "thm1":
            d["alpha"] = self.alpha
        else:
            d["phi"] = self.phi.as_dict()
        return d


def condition_rhs(kind: ConditionKind, p_xy, p_xx, p_yy):
    scalar = all(np.ndim(v) == 0 for v in (p_xy, p_xx, p_yy))
    p_xy, p_xx, p_yy = (np.asarray(v, dtype=float) for v in (p_xy, p_xx, p_yy))
    if kind.kind == "thm1":
        out = np.maximum(np.maximum(kind.alpha * p_xy, p_xx), p_yy)
    else:
        phi = kind.phi.vectorized(p_xy)
        if kind.kind == "eq3":
            out = np.maximum(np.maximum(phi, p_xx), p_yy)
        elif kind.kind == "eq8":
            out = np.maximum(phi, (p_xx + p_yy) / 2)
        else:
            out = phi
    return float(out) if scalar else out


@dataclass(frozen=True)
class PairScan:
    """All pair quantities of one contraction scan; matrices are indexed [x, y]."""

    xs: np.ndarray
    images: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    p: np.ndarray

    @property
    def margin(self) -> np.ndarray:
        return self.lhs - self.rhs

    @property
    def mask(self) -> np.ndarray:
        n = self.xs.size
        return np.triu(np.ones((n, n), dtype=bool))


def scan_pairs(space: PartialMetricSpace, T: PiecewiseMap, kind: ConditionKind,
               sample: SampleSet) -> PairScan:
    if len(sample) == 0:
        raise InputError("contraction scan needs a nonempty sample")
    xs = sample.array
    tx = apply_map_array(T, space.carrier, xs)
    P = space.p_array(xs[:, None], xs[None, :])
    d = np.diag(P)
    lhs = space.p_array(tx[:, None], tx[None, :])
    rhs = condition_rhs(kind, P, d[:, None], d[None, :])
    rhs = np.broadcast_to(rhs, P.shape)
    if kind.kind != "thm1":
        _assert_ordering(kind.phi, P, d)
    return PairScan(xs, tx, lhs, rhs, P)


def _assert_ordering(phi: ComparisonFunction, P: np.ndarray, d: np.ndarray):
    r9 = condition_rhs(ConditionKind.eq9(phi), P, d[:, None], d[None, :])
    r8 = condition_rhs(ConditionKind.eq8(phi), P, d[:, None], d[None, :])
    r3 = condition_rhs(ConditionKind.eq3(phi), P, d[:, None], d[None, :])
    if not (np.all(r9 <= r8) and np.all(r8 <= r3)):
        raise RuntimeError("internal inconsistency: rhs(eq9) <= rhs(eq8) <= rhs(eq3) violated")


def check_contraction(space: PartialMetricSpace, T: PiecewiseMap, kind: ConditionKind,
                      sample: SampleSet, tolerances: Tolerances = DEFAULT_TOL) -> CheckReport:
    scan = scan_pairs(space, T, kind, sample)
    xs, lhs, rhs = scan.xs, scan.lhs, scan.rhs
    return build_report(
        f"contraction-{kind.kind}", scan.margin,
        lambda ix: ((xs[ix[0]], xs[ix[1]]), lhs[ix], rhs[ix]),
        f"{kind.kind}: p(Tx,Ty) <= rhs", tolerances, mask=scan.mask,
        extra_echo={"condition": kind.as_dict(), "sample_size": int(xs.size)})


def corollary2_equivalence(space: PartialMetricSpace, T: PiecewiseMap, alpha: float,
                           sample: SampleSet, tolerances: Tolerances = DEFAULT_TOL,
                           pair_tol: float = 1e-15) -> bool:
    """thm1(alpha) and eq3 with phi = alpha*t must agree pair by pair."""
    if not 0 < alpha < 1:
        raise InputError(f"alpha must lie in (0, 1), got {alpha!r}")
    a = scan_pairs(space, T, ConditionKind.thm1(alpha), sample)
    b = scan_pairs(space, T, ConditionKind.eq3(ComparisonFunction.linear(alpha)), sample)
    mask = a.mask
    diff = np.abs(a.margin - b.margin)[mask]
    pass_a = float(a.margin[mask].max()) <= tolerances.eps_num
    pass_b = float(b.margin[mask].max()) <= tolerances.eps_num
    return pass_a == pass_b and bool(np.all(diff <= pair_tol))


# -- random counterexample search --------------------------------------------

@dataclass(frozen=True)
class FalsifyOutcome:
    witness: Optional[Witness]
    status: str  # "found" or "exhausted"
    budget: int
    seed: int
    evaluations: int

    def as_dict(self) -> dict:
        return {"status": self.status, "budget": self.budget, "seed": self.seed,
                "evaluations": self.evaluations,
                "witness": self.witness.as_dict() if self.witness else None}


def _components(carrier):
    comps = [(lo, hi) for lo, hi in carrier.intervals] + [(p, p) for p in carrier.extra_points]
    lengths = np.array([hi - lo for lo, hi in comps], dtype=float)
    total = lengths.sum()
    # isolated points get a small fixed share so they are reachable
    atom = 0.01 * total / len(comps) if total > 0 else 1.0
    weights = np.where(lengths > 0, lengths, atom)
    return comps, weights / weights.sum()


def draw_points(carrier, n: int, rng: np.random.Generator) -> np.ndarray:
    comps, probs = _components(carrier)
    which = rng.choice(len(comps), size=n, p=probs)
    u = rng.random(n)
    lo = np.array([c[0] for c in comps])[which]
    hi = np.array([c[1] for c in comps])[which]
    return np.minimum(lo + u * (hi - lo), hi)


def _pair_margin(space, T, kind, x, y):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    tx = apply_map_array(T, space.carrier, x)
    ty = apply_map_array(T, space.carrier, y)
    lhs = space.p_array(tx, ty)
    rhs = condition_rhs(kind, space.p_array(x, y), space.p_array(x, x), space.p_array(y, y))
    return lhs, np.broadcast_to(rhs, lhs.shape)


def _clamp(carrier, v: float, home: tuple) -> float:
    lo, hi = home
    return min(max(v, lo), hi)


def _home(carrier, v: float) -> tuple:
    for lo, hi in carrier.intervals:
        if lo <= v <= hi:
            return lo, hi
    return v, v


def falsify(space: PartialMetricSpace, T: PiecewiseMap, kind: ConditionKind, budget: int,
            seed: int, tolerances: Tolerances = DEFAULT_TOL, rounds: int = 20,
            chunk: int = 4096) -> FalsifyOutcome:
    """Seeded uniform pair search followed by step-halving local refinement."""
    if budget < 0:
        raise InputError("budget must be nonnegative")
    rng = np.random.default_rng(seed)
    best = None  # (margin, x, y)
    evals = 0
    remaining = budget
    while remaining > 0:
        m = min(chunk, remaining)
        x = draw_points(space.carrier, m, rng)
        y = draw_points(space.carrier, m, rng)
        lhs, rhs = _pair_margin(space, T, kind, x, y)
        marg = lhs - rhs
        evals += m
        remaining -= m
        k = int(np.argmax(marg))
        if best is None or marg[k] > best[0]:
            best = (float(marg[k]), float(x[k]), float(y[k]))
    if best is None or best[0] <= 0:
        return FalsifyOutcome(None, "exhausted", budget, seed, evals)

    margin, bx, by = best
    hx, hy = _home(space.carrier, bx), _home(space.carrier, by)
    step = max(hx[1] - hx[0], hy[1] - hy[0], 1.0) / 16
    for _ in range(rounds):
        cand_x = np.array([_clamp(space.carrier, bx + dx * step, hx) for dx in (-1, 0, 1) for _ in range(3)])
        cand_y = np.array([_clamp(space.carrier, by + dy * step, hy) for _ in range(3) for dy in (-1, 0, 1)])
        lhs, rhs = _pair_margin(space, T, kind, cand_x, cand_y)
        marg = lhs - rhs
        evals += marg.size
        k = int(np.argmax(marg))
        if marg[k] > margin:
            margin, bx, by = float(marg[k]), float(cand_x[k]), float(cand_y[k])
        step /= 2
    if margin <= tolerances.eps_num:
        return FalsifyOutcome(None, "exhausted", budget, seed, evals)
    x, y = min(bx, by), max(bx, by)
    lhs, rhs = _pair_margin(space, T, kind, x, y)
    w = Witness((x, y), float(lhs[0]), float(rhs[0]), float(lhs[0] - rhs[0]),
                f"{kind.kind}: p(Tx,Ty) <= rhs")
    return FalsifyOutcome(w, "found", budget, seed, evals)
