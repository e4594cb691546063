"""Comparison functions phi, the gap f(t) = t - phi(t), its inverse, and hypothesis probes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import EPS_NUM
from .errors import EvaluationError, InputError, InvalidHypothesisError, NonFiniteError, RangeError
from .exprlang import Expression, parse

T_MAX = 1e12
F_INV_TOL = 1e-12


def default_grid() -> np.ndarray:
    return np.concatenate([[0.0], np.logspace(-6, 3, 96)])


@dataclass(frozen=True)
class ComparisonFunction:
    """phi from one of three families: ``linear`` (alpha*t), ``rational`` (t/(1+t)), ``custom``."""

    family: str
    alpha: Optional[float] = None
    expr: Optional[Expression] = None
    grid: tuple = field(default_factory=lambda: tuple(default_grid()))

    def __post_init__(self):
        if self.family == "linear":
            a = self.alpha
            if a is None or not (0 <= a < 1):
                raise InputError(f"linear family needs alpha in [0, 1), got {a!r}")
        elif self.family == "custom":
            if self.expr is None:
                raise InputError("custom family needs an expression in t")
        elif self.family != "rational":
            raise InputError(f"unknown phi family {self.family!r}")

    @classmethod
    def linear(cls, alpha: float) -> "ComparisonFunction":
        return cls("linear", alpha=float(alpha))

    @classmethod
    def rational(cls) -> "ComparisonFunction":
        return cls("rational")

    @classmethod
    def custom(cls, source: str) -> "ComparisonFunction":
        return cls("custom", expr=parse(source, {"t"}))

    @property
    def description(self) -> str:
        if self.family == "linear":
            return f"{self.alpha!r}*t"
        if self.family == "rational":
            return "t/(1+t)"
        return self.expr.source

    def as_dict(self) -> dict:
        d = {"family": self.family}
        if self.family == "linear":
            d["alpha"] = self.alpha
        elif self.family == "custom":
            d["expr"] = self.expr.source
        return d

    def __call__(self, t: float) -> float:
        t = float(t)
        if self.family == "linear":
            return self.alpha * t
        if self.family == "rational":
            return t / (1 + t)
        return self.expr(t=t)

    def vectorized(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.family == "linear":
            return self.alpha * t
        if self.family == "rational":
            return t / (1 + t)
        return self.expr.vectorized(t=t)

    def f(self, t: float) -> float:
        return t - self(t)


def f_inverse(cf: ComparisonFunction, s: float, tol: float = F_INV_TOL,
              t_max: float = T_MAX, method: str = "auto") -> float:
    """Smallest-effort t with |f(t) - s| <= tol, where f(t) = t - phi(t).

    ``method="auto"`` uses closed forms for the builtin families and
    bracketing + bisection otherwise; ``method="bisect"`` forces the latter.
    """
    s = float(s)
    if not (math.isfinite(s) and s >= 0):
        raise InputError(f"f_inverse needs s >= 0, got {s!r}")
    if s == 0:
        return 0.0
    if method == "auto" and cf.family == "linear":
        return s / (1 - cf.alpha)
    if method == "auto" and cf.family == "rational":
        return (s + math.sqrt(s * s + 4 * s)) / 2
    if method not in ("auto", "bisect"):
        raise InputError(f"unknown method {method!r}")
    # tiny s: an absolute tolerance alone would accept t = s
    return _bisect_inverse(cf.f, s, min(tol, 1e-12 * s), t_max)


def _bisect_inverse(f: Callable[[float], float], s: float, tol: float, t_max: float) -> float:
    lo = s
    f_lo = f(lo)
    if abs(f_lo - s) <= tol:
        return lo
    if f_lo > s + tol:
        raise InvalidHypothesisError(f"f({lo!r}) = {f_lo!r} exceeds s = {s!r}; phi takes negative values")
    hi = max(s, 1.0)
    f_hi = f(hi)
    while f_hi < s:
        if hi >= t_max:
            raise RangeError(f"f(t) < {s!r} for all t <= {t_max:g}; f is bounded below the requested value")
        hi = min(2 * hi, t_max)
        f_hi = f(hi)
    best, best_err = hi, abs(f_hi - s)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = f(mid)
        if f_mid < f_lo - EPS_NUM or f_mid > f_hi + EPS_NUM:
            raise InvalidHypothesisError(
                f"f is not monotone on [{lo!r}, {hi!r}]: f(mid={mid!r}) = {f_mid!r}")
        err = abs(f_mid - s)
        if err < best_err:
            best, best_err = mid, err
        if err <= tol:
            return mid
        if f_mid < s:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    return best


def phi_orbit(cf: ComparisonFunction, t: float, n: int) -> list:
    """[phi^0(t), phi^1(t), ..., phi^n(t)]."""
    if n < 0:
        raise InputError("iteration count must be nonnegative")
    out = [float(t)]
    v = float(t)
    for _ in range(n):
        v = cf(v)
        if not math.isfinite(v):
            raise NonFiniteError(f"phi iterate became non-finite", {"t": t})
        out.append(v)
    return out


def phi_iterate(cf: ComparisonFunction, t: float, n: int) -> float:
    return phi_orbit(cf, t, n)[-1]


@dataclass(frozen=True)
class Lemma3Flags:
    """Properties of phi: (i) monotone, (ii) phi(t) < t, (iii) phi(0) = 0,
    (iv) right upper semicontinuous, (v) right continuous, (vi) iterates vanish."""

    i: bool
    ii: bool
    iii: bool
    iv: bool
    v: bool
    vi: bool

    def as_dict(self) -> dict:
        return {"i": self.i, "ii": self.ii, "iii": self.iii, "iv": self.iv, "v": self.v, "vi": self.vi}


@dataclass(frozen=True)
class HypothesisReport:
    phi: str
    phi_increasing: bool
    f_increasing: bool
    f_inverse_rc_at_0: bool
    phi_iterates_vanish: bool
    lemma3: Lemma3Flags
    evidence: dict

    @property
    def all_hold(self) -> bool:
        return (self.phi_increasing and self.f_increasing
                and self.f_inverse_rc_at_0 and self.phi_iterates_vanish)

    def as_dict(self) -> dict:
        return {"phi": self.phi,
                "phi_increasing": self.phi_increasing,
                "f_increasing": self.f_increasing,
                "f_inverse_rc_at_0": self.f_inverse_rc_at_0,
                "phi_iterates_vanish": self.phi_iterates_vanish,
                "lemma3": self.lemma3.as_dict(),
                "evidence": self.evidence}


def _worst_decrease(grid: np.ndarray, values: np.ndarray, eps: float):
    drops = values[:-1] - values[1:]
    if drops.size == 0:
        return True, None
    k = int(np.argmax(drops))
    ok = bool(drops[k] <= eps)
    return ok, None if ok else {"t": [float(grid[k]), float(grid[k + 1])],
                                "values": [float(values[k]), float(values[k + 1])]}


def _decay(cf: ComparisonFunction, t: float, threshold: float, n_max: int) -> dict:
    v = t
    for n in range(n_max + 1):
        if v < threshold:
            return {"t": t, "vanished": True, "n": n, "value": v}
        try:
            nxt = cf(v)
        except NonFiniteError:
            nxt = math.inf
        if not math.isfinite(nxt):
            return {"t": t, "vanished": False, "n": n + 1, "value": None, "reason": "diverged"}
        if nxt == v:
            return {"t": t, "vanished": False, "n": n + 1, "value": v, "reason": "stalled"}
        v = nxt
    return {"t": t, "vanished": False, "n": n_max, "value": v, "reason": "budget"}


def check_hypotheses(cf: ComparisonFunction, eps_num: float = EPS_NUM,
                     decay_threshold: float = 1e-5, decay_budget: int = 10**6,
                     rc_threshold: float = 1e-4) -> HypothesisReport:
    grid = np.asarray(cf.grid, dtype=float)
    phis = np.array([cf(t) for t in grid])
    if not np.all(np.isfinite(phis)) or np.any(phis < 0):
        k = int(np.argmax(~np.isfinite(phis) | (phis < 0)))
        raise EvaluationError(f"phi is not finite and nonnegative (phi={phis[k]!r})", {"t": float(grid[k])})
    fs = grid - phis
    evidence = {"grid": {"size": int(grid.size), "min": float(grid.min()), "max": float(grid.max())}}

    phi_inc, ev = _worst_decrease(grid, phis, eps_num)
    evidence["phi_increasing"] = ev
    f_inc, ev = _worst_decrease(grid, fs, eps_num)
    evidence["f_increasing"] = ev

    # right continuity of f^{-1} at 0 along s_k = 2^-k
    rc_ok = True
    try:
        inv = [f_inverse(cf, 2.0 ** -k, method="bisect" if cf.family == "custom" else "auto")
               for k in range(1, 41)]
        rises = [k for k in range(1, len(inv)) if inv[k] > inv[k - 1] + eps_num]
        rc_ok = not rises and inv[-1] <= rc_threshold
        evidence["f_inverse_rc_at_0"] = {"f_inv_at_2^-40": inv[-1], "threshold": rc_threshold,
                                         "nonincreasing": not rises}
    except (RangeError, InvalidHypothesisError) as exc:
        rc_ok = False
        evidence["f_inverse_rc_at_0"] = {"error": str(exc)}

    traces = [_decay(cf, t, decay_threshold, decay_budget) for t in (0.1, 1.0, 10.0, 100.0)]
    vanish = all(tr["vanished"] for tr in traces)
    evidence["phi_iterates_vanish"] = traces

    pos = grid > 0
    below = bool(np.all(phis[pos] < grid[pos]))
    zero_ok = abs(cf(0.0)) <= eps_num

    # right-limit probes at each grid point
    h = 2.0 ** -40
    jumps = np.array([cf(t + h) - cf(t) for t in grid])
    usc = bool(np.all(jumps <= eps_num))
    rcont = bool(np.all(np.abs(jumps) <= eps_num))
    evidence["right_limit_probe"] = {"h": h, "max_jump": float(np.max(np.abs(jumps)))}

    flags = Lemma3Flags(i=phi_inc, ii=below, iii=zero_ok, iv=usc, v=rcont, vi=vanish)
    return HypothesisReport(cf.description, phi_inc, f_inc, rc_ok, vanish, flags, evidence)


IMPLICATIONS = (
    ("(1) i & ii => iii", lambda f: not (f.i and f.ii) or f.iii),
    ("(2) ii & v => iii", lambda f: not (f.ii and f.v) or f.iii),
    ("(3) i & vi => ii", lambda f: not (f.i and f.vi) or f.ii),
    ("(4) i & iv => vi", lambda f: not (f.i and f.iv) or f.vi),
    ("(5) i => (iv <=> v)", lambda f: not f.i or (f.iv == f.v)),
)


def lemma3_crosscheck(report) -> list:
    """Labels of the implications whose premises hold but whose conclusion fails.

    A nonempty result means the numeric probes contradict each other.
    """
    flags = report.lemma3 if isinstance(report, HypothesisReport) else report
    if isinstance(flags, dict):
        flags = Lemma3Flags(**{k: bool(flags.get(k, False)) for k in ("i", "ii", "iii", "iv", "v", "vi")})
    return [label for label, holds in IMPLICATIONS if not holds(flags)]
