"""Carriers, partial metric spaces, the induced metric and finite samples."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InputError, InvalidMetricError, OutsideCarrierError
from .exprlang import Expression, PiecewiseMap, parse

EPS_NUM = 1e-9
DELTA_PT = 1e-12
K_MAX = 10

COMPLETENESS_TAGS = ("complete", "zero-complete", "unknown")
PROVENANCE_ORDER = {"endpoint": 0, "extra": 1, "grid": 2, "orbit": 3}


@dataclass(frozen=True)
class Tolerances:
    eps_num: float = EPS_NUM
    delta_pt: float = DELTA_PT
    tol: float = 1e-8
    agree_tol: float = 1e-6
    k_max: Optional[int] = K_MAX  # None: report every witness

    def __post_init__(self):
        for name in ("eps_num", "delta_pt", "tol", "agree_tol"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InputError(f"tolerance {name} must be a positive real, got {v!r}")
        if self.k_max is not None and self.k_max < 0:
            raise InputError("k_max must be nonnegative")

    def as_dict(self) -> dict:
        return {"eps_num": self.eps_num, "delta_pt": self.delta_pt, "tol": self.tol,
                "agree_tol": self.agree_tol, "k_max": self.k_max}


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class CarrierSpec:
    """Finite union of closed intervals plus isolated points.

    Construct through :meth:`make` to get the normalized form (sorted,
    merged intervals; extra points outside every interval, deduplicated).
    """

    intervals: tuple = ()
    extra_points: tuple = ()
    completeness_tag: str = "unknown"
    delta_pt: float = DELTA_PT

    @classmethod
    def make(cls, intervals: Sequence = (), extra_points: Sequence = (),
             completeness_tag: str = "unknown", delta_pt: float = DELTA_PT) -> "CarrierSpec":
        if completeness_tag not in COMPLETENESS_TAGS:
            raise InputError(f"completeness_tag must be one of {COMPLETENESS_TAGS}, got {completeness_tag!r}")
        ivs = []
        for iv in intervals:
            lo, hi = (float(v) for v in iv)
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise InputError(f"interval [{lo}, {hi}] is not finite")
            if lo > hi:
                raise InputError(f"interval [{lo}, {hi}] has lo > hi")
            ivs.append((lo, hi))
        ivs.sort()
        merged: list = []
        for lo, hi in ivs:
            if merged and lo <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
            else:
                merged.append((lo, hi))
        pts = []
        for p in sorted(float(v) for v in extra_points):
            if not math.isfinite(p):
                raise InputError(f"extra point {p} is not finite")
            if any(lo <= p <= hi for lo, hi in merged):
                continue
            if pts and p - pts[-1] <= delta_pt:
                continue
            pts.append(p)
        if not merged and not pts:
            raise InputError("carrier is empty")
        return cls(tuple(merged), tuple(pts), completeness_tag, delta_pt)

    def contains(self, x: float) -> bool:
        if not math.isfinite(x):
            return False
        for lo, hi in self.intervals:
            if lo <= x <= hi:
                return True
        return any(abs(x - p) <= self.delta_pt for p in self.extra_points)

    def contains_array(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        inside = np.zeros(xs.shape, dtype=bool)
        for lo, hi in self.intervals:
            inside |= (xs >= lo) & (xs <= hi)
        for p in self.extra_points:
            inside |= np.abs(xs - p) <= self.delta_pt
        return inside

    @property
    def least_point(self) -> float:
        cands = [lo for lo, _ in self.intervals] + list(self.extra_points)
        return min(cands)

    @property
    def is_intervals_only(self) -> bool:
        return not self.extra_points

    def as_dict(self) -> dict:
        return {"intervals": [list(iv) for iv in self.intervals],
                "extra_points": list(self.extra_points),
                "completeness": self.completeness_tag}

    def __str__(self):
        parts = [f"[{lo:g}, {hi:g}]" for lo, hi in self.intervals]
        if self.extra_points:
            parts.append("{" + ", ".join(f"{p:g}" for p in self.extra_points) + "}")
        return " U ".join(parts)


@dataclass(frozen=True)
class SampleSet:
    """Ascending, pairwise distinct carrier points with a provenance tag each."""

    points: tuple
    provenance: tuple

    def __post_init__(self):
        if len(self.points) != len(self.provenance):
            raise InputError("points and provenance differ in length")

    @property
    def array(self) -> np.ndarray:
        return np.array(self.points, dtype=float)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @classmethod
    def from_points(cls, points, carrier: CarrierSpec, tag: str = "grid",
                    delta_pt: float = DELTA_PT) -> "SampleSet":
        pts = [float(p) for p in points]
        for p in pts:
            if not carrier.contains(p):
                raise OutsideCarrierError(p, carrier)
        return _assemble([(p, tag) for p in pts], delta_pt)

    def subsample(self, cap: int) -> "SampleSet":
        """Evenly spaced deterministic subset of at most ``cap`` points (keeps both ends)."""
        n = len(self.points)
        if cap <= 0 or n <= cap:
            return self
        idx = np.unique(np.round(np.linspace(0, n - 1, cap)).astype(int))
        return SampleSet(tuple(self.points[i] for i in idx), tuple(self.provenance[i] for i in idx))

    def with_points(self, points, tag: str, delta_pt: float = DELTA_PT) -> "SampleSet":
        items = list(zip(self.points, self.provenance)) + [(float(p), tag) for p in points]
        return _assemble(items, delta_pt)


def _assemble(items, delta_pt: float) -> SampleSet:
    items = sorted(items, key=lambda it: (it[0], PROVENANCE_ORDER.get(it[1], 9)))
    pts: list = []
    tags: list = []
    for p, tag in items:
        if pts and p - pts[-1] <= delta_pt:
            if PROVENANCE_ORDER.get(tag, 9) < PROVENANCE_ORDER.get(tags[-1], 9):
                tags[-1] = tag
            continue
        pts.append(p)
        tags.append(tag)
    return SampleSet(tuple(pts), tuple(tags))


@dataclass(frozen=True)
class SamplingOptions:
    grid_step: float = 1 / 16
    orbit_depth: int = 64
    include_orbits: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.grid_step) and self.grid_step > 0):
            raise InputError(f"grid_step must be positive, got {self.grid_step!r}")
        if self.orbit_depth < 0:
            raise InputError("orbit_depth must be nonnegative")

    def as_dict(self) -> dict:
        return {"grid_step": self.grid_step, "orbit_depth": self.orbit_depth,
                "include_orbits": self.include_orbits}


def make_sample(carrier: CarrierSpec, options: SamplingOptions = SamplingOptions(),
                T: Optional[PiecewiseMap] = None) -> SampleSet:
    """Grid + endpoints + extra points, closed under up to ``orbit_depth`` images of T.

    Orbits stop silently at the first point that leaves the carrier; the
    contraction checks report such points as not-a-self-map errors.
    """
    items = []
    for lo, hi in carrier.intervals:
        items.append((lo, "endpoint"))
        items.append((hi, "endpoint"))
        n = int(math.floor((hi - lo) / options.grid_step + 1e-9))
        for k in range(1, n + 1):
            p = lo + k * options.grid_step
            if p < hi:
                items.append((p, "grid"))
    items.extend((p, "extra") for p in carrier.extra_points)
    base = _assemble(items, carrier.delta_pt)
    if T is None or not options.include_orbits or options.orbit_depth == 0:
        return base

    frontier = base.array
    found = []
    for _ in range(options.orbit_depth):
        images = np.full(frontier.shape, np.nan)
        for i, x in enumerate(frontier):
            try:
                images[i] = T.raw(float(x))
            except Exception:
                pass
        keep = np.isfinite(images) & carrier.contains_array(images)
        frontier = np.unique(images[keep])
        if frontier.size == 0:
            break
        found.append(frontier)
    if not found:
        return base
    return base.with_points(np.concatenate(found), "orbit", carrier.delta_pt)


@dataclass(frozen=True)
class PartialMetricSpace:
    """A carrier with a distance: the builtin ``"max"`` or an expression in x, y."""

    name: str
    carrier: CarrierSpec
    distance: object = "max"

    @classmethod
    def make(cls, name: str, carrier: CarrierSpec, distance) -> "PartialMetricSpace":
        if isinstance(distance, str) and distance.strip() != "max":
            distance = parse(distance, {"x", "y"})
        elif isinstance(distance, str):
            distance = "max"
        return cls(name, carrier, distance)

    @property
    def is_builtin_max(self) -> bool:
        return isinstance(self.distance, str) and self.distance == "max"

    @property
    def distance_source(self) -> str:
        return "max" if self.is_builtin_max else self.distance.source

    def p_array(self, xs, ys) -> np.ndarray:
        """Vectorized p over broadcast arrays; no carrier check."""
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if self.is_builtin_max:
            return np.maximum(xs, ys)
        out = self.distance.vectorized(x=xs, y=ys)
        bad = out < 0
        if bad.any():
            i = np.argwhere(bad)[0]
            bx, by = np.broadcast_arrays(xs, ys)
            raise InvalidMetricError(float(bx[tuple(i)]), float(by[tuple(i)]), float(out[tuple(i)]))
        return out

    def ps_array(self, xs, ys) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if self.is_builtin_max:
            return np.abs(xs - ys)
        return 2 * self.p_array(xs, ys) - (self.p_array(xs, xs) + self.p_array(ys, ys))


def _require(space: PartialMetricSpace, *pts):
    for p in pts:
        if not space.carrier.contains(p):
            raise OutsideCarrierError(p, space.carrier)


def _p(space: PartialMetricSpace, x: float, y: float) -> float:
    if space.is_builtin_max:
        return max(x, y)
    from .errors import EvaluationError
    try:
        v = space.distance(x=x, y=y)
    except EvaluationError as exc:
        raise InvalidMetricError(x, y, str(exc)) from exc
    if not (math.isfinite(v) and v >= 0):
        raise InvalidMetricError(x, y, v)
    return v


def eval_p(space: PartialMetricSpace, x: float, y: float) -> float:
    x, y = float(x), float(y)
    _require(space, x, y)
    return _p(space, x, y)


def _ps(space: PartialMetricSpace, x: float, y: float) -> float:
    if space.is_builtin_max:
        # 2 max(x, y) - x - y, evaluated without cancellation
        return abs(x - y)
    return 2 * _p(space, x, y) - (_p(space, x, x) + _p(space, y, y))


def induced_ps(space: PartialMetricSpace, x: float, y: float) -> float:
    """2 p(x, y) - p(x, x) - p(y, y)."""
    x, y = float(x), float(y)
    _require(space, x, y)
    return _ps(space, x, y)


@dataclass(frozen=True)
class RhoEstimate:
    rho: float
    Xp: tuple
    method: str  # "exact" (builtin max fast path) or "sampled infimum"

    def __iter__(self):
        return iter((self.rho, self.Xp))


def rho_and_Xp(space: PartialMetricSpace, sample: SampleSet,
               eps_num: float = EPS_NUM) -> RhoEstimate:
    if len(sample) == 0:
        raise InputError("rho_and_Xp needs a nonempty sample")
    xs = sample.array
    diag = space.p_array(xs, xs)
    if space.is_builtin_max:
        rho = space.carrier.least_point
        method = "exact"
    else:
        rho = float(np.min(space.p_array(xs[:, None], xs[None, :])))
        method = "sampled infimum"
    members = tuple(float(x) for x, d in zip(xs, diag) if d <= rho + eps_num)
    return RhoEstimate(rho, members, method)


def ball_contains(space: PartialMetricSpace, center: float, eps: float, y: float) -> bool:
    """Strict membership y in B_p(center, eps)."""
    if not eps > 0:
        raise InputError(f"ball radius must be positive, got {eps!r}")
    # p(c, y) < p(c, c) + eps, arranged so tiny eps is not absorbed by rounding
    return eval_p(space, center, y) - eval_p(space, center, center) < eps


# -- reports -----------------------------------------------------------------

@dataclass(frozen=True)
class Witness:
    points: tuple
    lhs: float
    rhs: float
    margin: float
    label: str

    def as_dict(self) -> dict:
        return {"points": list(self.points), "lhs": self.lhs, "rhs": self.rhs,
                "margin": self.margin, "label": self.label}


@dataclass(frozen=True)
class CheckReport:
    check_id: str
    passed: bool
    worst_margin: float
    witnesses: tuple = ()
    pairs_scanned: int = 0
    options_echo: dict = field(default_factory=dict)
    violations: int = 0

    def as_dict(self) -> dict:
        return {"check_id": self.check_id, "pass": self.passed,
                "worst_margin": self.worst_margin,
                "violations": self.violations,
                "witnesses": [w.as_dict() for w in self.witnesses],
                "pairs_scanned": self.pairs_scanned,
                "options": dict(self.options_echo)}


def build_report(check_id: str, margin: np.ndarray, describe: Callable, label: str,
                 tolerances: Tolerances = DEFAULT_TOL, mask: Optional[np.ndarray] = None,
                 extra_echo: Optional[dict] = None) -> CheckReport:
    """Assemble a canonical report from a margin array over scanned tuples.

    ``describe(index)`` maps a multi-index of ``margin`` to ``(points, lhs,
    rhs)``.  Only entries where ``mask`` is true count as scanned.  Witnesses
    are entries with margin > eps_num, sorted by margin descending, then
    lexicographically by points, truncated to ``k_max``.
    """
    margin = np.asarray(margin, dtype=float)
    flat = margin.ravel()
    if mask is None:
        valid = np.arange(flat.size)
    else:
        valid = np.flatnonzero(np.broadcast_to(mask, margin.shape).ravel())
    vals = flat[valid]
    worst = float(vals.max()) if vals.size else -math.inf
    bad = valid[vals > tolerances.eps_num]
    witnesses = []
    if bad.size:
        chosen = bad
        k_max = tolerances.k_max
        if k_max is not None and bad.size > k_max:
            cut = np.sort(flat[bad])[::-1][k_max - 1] if k_max > 0 else math.inf
            chosen = bad[flat[bad] >= cut]
        rows = []
        for i in chosen:
            pts, lhs, rhs = describe(np.unravel_index(int(i), margin.shape))
            pts = tuple(float(v) for v in pts)
            rows.append((-float(flat[i]), pts, float(lhs), float(rhs)))
        rows.sort(key=lambda r: (r[0], r[1]))
        if k_max is not None:
            rows = rows[:k_max]
        witnesses = [Witness(pts, lhs, rhs, -neg, label) for neg, pts, lhs, rhs in rows]
    echo = {"eps_num": tolerances.eps_num, "k_max": tolerances.k_max}
    if extra_echo:
        echo.update(extra_echo)
    return CheckReport(check_id, worst <= tolerances.eps_num, worst, tuple(witnesses),
                       int(vals.size), echo, int(bad.size))
