"""Scenario files: JSON descriptions of a space, a self-map, phi and a condition."""

from __future__ import annotations

import copy
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Optional

from .comparison import ComparisonFunction
from .contraction import KINDS, ConditionKind
from .core import CarrierSpec, PartialMetricSpace, SampleSet, SamplingOptions, Tolerances, make_sample
from .errors import ExprError, InputError
from .exprlang import PiecewiseMap, parse


class ScenarioError(InputError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


TOP_FIELDS = {"name", "description", "carrier", "completeness", "partial_metric", "map", "phi",
              "condition", "sampling", "tolerances", "starts"}

BUILTINS: dict = {
    "example1": {
        "name": "example1",
        "description": "max partial metric on nonnegative reals (truncated to [0,1]); "
                       "0-complete, used with the phi-only condition",
        "carrier": {"intervals": [[0, 1]], "extra_points": []},
        "completeness": "zero-complete",
        "partial_metric": "max",
        "map": [{"when": [0, 1], "expr": "x/2"}],
        "phi": {"family": "rational"},
        "condition": {"kind": "eq9"},
    },
    "example2-paper": {
        "name": "example2-paper",
        "description": "two-interval example on [0,1] and [3,4]: T sends [3,4] to 7/5, outside the carrier",
        "carrier": {"intervals": [[0, 1], [3, 4]], "extra_points": []},
        "completeness": "complete",
        "partial_metric": "max",
        "map": [{"when": [0, 1], "expr": "x/2"}, {"when": [3, 4], "expr": "7/5"}],
        "phi": {"family": "rational"},
        "condition": {"kind": "eq8"},
        "starts": [4, 3.5, 3, 1, 0.37],
    },
    "example2-repaired": {
        "name": "example2-repaired",
        "description": "two-interval example with the first interval widened to [0,2] so T is a self-map",
        "carrier": {"intervals": [[0, 2], [3, 4]], "extra_points": []},
        "completeness": "complete",
        "partial_metric": "max",
        "map": [{"when": [0, 2], "expr": "x/2"}, {"when": [3, 4], "expr": "7/5"}],
        "phi": {"family": "rational"},
        "condition": {"kind": "eq8"},
        "starts": [4, 3, 2, 1, 0.37],
    },
    "usual-metric-example2": {
        "name": "usual-metric-example2",
        "description": "repaired two-interval example with p replaced by |x - y|",
        "carrier": {"intervals": [[0, 2], [3, 4]], "extra_points": []},
        "completeness": "complete",
        "partial_metric": "abs(x - y)",
        "map": [{"when": [0, 2], "expr": "x/2"}, {"when": [3, 4], "expr": "7/5"}],
        "phi": {"family": "rational"},
        "condition": {"kind": "eq8"},
        "starts": [4, 3, 2, 1, 0.37],
    },
    "shifted-thm1": {
        "name": "shifted-thm1",
        "description": "max metric on [3,4], T(x) = 3 + (x-3)/2: fixed point with self-distance 3",
        "carrier": {"intervals": [[3, 4]], "extra_points": []},
        "completeness": "complete",
        "partial_metric": "max",
        "map": [{"when": [3, 4], "expr": "3 + (x - 3)/2"}],
        "phi": {"family": "linear", "alpha": 0.5},
        "condition": {"kind": "thm1", "alpha": 0.5},
        "starts": [3, 3.5, 4],
    },
}


@dataclass(frozen=True)
class Scenario:
    name: str
    space: PartialMetricSpace
    map: PiecewiseMap
    phi: ComparisonFunction
    condition: ConditionKind
    sampling: SamplingOptions = SamplingOptions()
    tolerances: Tolerances = Tolerances()
    starts: Optional[tuple] = None
    description: str = ""
    source: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def carrier(self) -> CarrierSpec:
        return self.space.carrier

    def sample(self, with_orbits: bool = True, grid_step: Optional[float] = None) -> SampleSet:
        opts = SamplingOptions(grid_step if grid_step is not None else self.sampling.grid_step,
                               self.sampling.orbit_depth, with_orbits)
        return make_sample(self.carrier, opts, self.map if with_orbits else None)

    def start_set(self) -> SampleSet:
        if self.starts is not None:
            return SampleSet.from_points(self.starts, self.carrier, "grid", self.tolerances.delta_pt)
        return self.sample(with_orbits=False)


def _expect(obj, typ, path):
    if not isinstance(obj, typ) or (typ in (int, float, (int, float)) and isinstance(obj, bool)):
        names = typ.__name__ if isinstance(typ, type) else "/".join(t.__name__ for t in typ)
        raise ScenarioError(path, f"expected {names}, got {type(obj).__name__}")
    return obj


def _real(obj, path) -> float:
    _expect(obj, (int, float), path)
    v = float(obj)
    if not math.isfinite(v):
        raise ScenarioError(path, "must be finite")
    return v


def _no_extra(d: dict, allowed: set, path: str):
    extra = sorted(set(d) - allowed)
    if extra:
        raise ScenarioError(f"{path}.{extra[0]}" if path else extra[0], "unknown field")


def _expr(src, variables, path):
    _expect(src, str, path)
    try:
        return parse(src, variables)
    except ExprError as exc:
        raise ScenarioError(path, str(exc)) from exc


def _phi(d, path) -> ComparisonFunction:
    if isinstance(d, str):
        return ComparisonFunction("custom", expr=_expr(d, {"t"}, path))
    _expect(d, dict, path)
    _no_extra(d, {"family", "alpha", "expr"}, path)
    fam = _expect(d.get("family"), str, f"{path}.family")
    try:
        if fam == "linear":
            return ComparisonFunction.linear(_real(d.get("alpha"), f"{path}.alpha"))
        if fam == "rational":
            return ComparisonFunction.rational()
        if fam == "custom":
            return ComparisonFunction("custom", expr=_expr(d.get("expr"), {"t"}, f"{path}.expr"))
    except ScenarioError:
        raise
    except InputError as exc:
        raise ScenarioError(path, str(exc)) from exc
    raise ScenarioError(f"{path}.family", f"unknown family {fam!r} (linear, rational, custom)")


def scenario_from_dict(data: Any) -> Scenario:
    _expect(data, dict, "$")
    _no_extra(data, TOP_FIELDS, "$")
    for req in ("name", "carrier", "partial_metric", "map", "phi", "condition"):
        if req not in data:
            raise ScenarioError(f"$.{req}", "missing required field")
    name = _expect(data["name"], str, "$.name")

    tol_d = _expect(data.get("tolerances", {}), dict, "$.tolerances")
    _no_extra(tol_d, {"eps_num", "delta_pt", "tol", "agree_tol", "k_max"}, "$.tolerances")
    try:
        tol_kwargs = {k: _real(v, f"$.tolerances.{k}") for k, v in tol_d.items() if k != "k_max"}
        if "k_max" in tol_d:
            tol_kwargs["k_max"] = None if tol_d["k_max"] is None else int(_expect(tol_d["k_max"], int, "$.tolerances.k_max"))
        tolerances = Tolerances(**tol_kwargs)
    except ScenarioError:
        raise
    except InputError as exc:
        raise ScenarioError("$.tolerances", str(exc)) from exc

    car = _expect(data["carrier"], dict, "$.carrier")
    _no_extra(car, {"intervals", "extra_points"}, "$.carrier")
    ivs = []
    for i, iv in enumerate(_expect(car.get("intervals", []), list, "$.carrier.intervals")):
        p = f"$.carrier.intervals[{i}]"
        _expect(iv, list, p)
        if len(iv) != 2:
            raise ScenarioError(p, "interval must be [lo, hi]")
        ivs.append((_real(iv[0], p + "[0]"), _real(iv[1], p + "[1]")))
    extras = [_real(v, f"$.carrier.extra_points[{i}]")
              for i, v in enumerate(_expect(car.get("extra_points", []), list, "$.carrier.extra_points"))]
    tag = _expect(data.get("completeness", "unknown"), str, "$.completeness")
    try:
        carrier = CarrierSpec.make(ivs, extras, tag, tolerances.delta_pt)
    except InputError as exc:
        raise ScenarioError("$.carrier", str(exc)) from exc

    pm = _expect(data["partial_metric"], str, "$.partial_metric")
    distance = "max" if pm.strip() == "max" else _expr(pm, {"x", "y"}, "$.partial_metric")
    space = PartialMetricSpace(name, carrier, distance)

    pieces = []
    for i, piece in enumerate(_expect(data["map"], list, "$.map")):
        p = f"$.map[{i}]"
        _expect(piece, dict, p)
        _no_extra(piece, {"when", "expr"}, p)
        when = _expect(piece.get("when"), list, p + ".when")
        if len(when) != 2:
            raise ScenarioError(p + ".when", "guard must be [lo, hi]")
        lo, hi = _real(when[0], p + ".when[0]"), _real(when[1], p + ".when[1]")
        if lo > hi:
            raise ScenarioError(p + ".when", "guard has lo > hi")
        pieces.append(((lo, hi), _expr(piece.get("expr"), {"x"}, p + ".expr")))
    if not pieces:
        raise ScenarioError("$.map", "needs at least one piece")
    T = PiecewiseMap.from_pairs(pieces, name="T")

    phi = _phi(data["phi"], "$.phi")

    cond = _expect(data["condition"], dict, "$.condition")
    _no_extra(cond, {"kind", "alpha"}, "$.condition")
    kind = _expect(cond.get("kind"), str, "$.condition.kind")
    if kind not in KINDS:
        raise ScenarioError("$.condition.kind", f"expected one of {KINDS}, got {kind!r}")
    try:
        if kind == "thm1":
            condition = ConditionKind.thm1(_real(cond.get("alpha"), "$.condition.alpha"))
        else:
            condition = ConditionKind(kind, phi=phi)
    except ScenarioError:
        raise
    except InputError as exc:
        raise ScenarioError("$.condition", str(exc)) from exc

    smp = _expect(data.get("sampling", {}), dict, "$.sampling")
    _no_extra(smp, {"grid_step", "orbit_depth"}, "$.sampling")
    try:
        sampling = SamplingOptions(
            _real(smp.get("grid_step", 1 / 16), "$.sampling.grid_step"),
            _expect(smp.get("orbit_depth", 64), int, "$.sampling.orbit_depth"))
    except ScenarioError:
        raise
    except InputError as exc:
        raise ScenarioError("$.sampling", str(exc)) from exc

    starts = None
    if "starts" in data:
        starts = tuple(_real(v, f"$.starts[{i}]") for i, v in enumerate(_expect(data["starts"], list, "$.starts")))
        for i, s in enumerate(starts):
            if not carrier.contains(s):
                raise ScenarioError(f"$.starts[{i}]", f"{s!r} is not in the carrier")
        if not starts:
            raise ScenarioError("$.starts", "must be nonempty")

    return Scenario(name, space, T, phi, condition, sampling, tolerances, starts,
                    _expect(data.get("description", ""), str, "$.description"), copy.deepcopy(data))


def load_scenario(path_or_name: str) -> Scenario:
    """A builtin scenario by name, or a JSON file path."""
    if path_or_name in BUILTINS:
        return scenario_from_dict(copy.deepcopy(BUILTINS[path_or_name]))
    if not os.path.isfile(path_or_name):
        raise ScenarioError("", f"no builtin scenario or file named {path_or_name!r} "
                                f"(builtins: {', '.join(sorted(BUILTINS))})")
    try:
        with open(path_or_name, encoding="utf-8") as fh:
            data = json.load(fh)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ScenarioError("", f"{path_or_name}: invalid JSON: {exc}") from exc
    return scenario_from_dict(data)
