import math
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from phicontract.comparison import ComparisonFunction
from phicontract.contraction import ConditionKind
from phicontract.core import CarrierSpec, PartialMetricSpace, SampleSet, Tolerances, eval_p
from phicontract.errors import InputError, NotASelfMapError, OutsideCarrierError
from phicontract.exprlang import PiecewiseMap, apply_map
from phicontract.solver import (OrbitStep, SolveOptions, compute_Mx, picard_orbit,
                                solve_fixed_point, verify_bound4)
from phicontract.verify import orbit_diagnostics

RATIONAL = ComparisonFunction.rational()
EQ8 = ConditionKind("eq8", phi=RATIONAL)

# golden-ratio style closed forms for the rational family: f^{-1}(s) solves t^2 - s t - s = 0
M3 = (3 + math.sqrt(21)) / 2 + 3
M1 = (1 + math.sqrt(5)) / 2 + 1


def test_picard_from_three(ex2):
    tr = picard_orbit(ex2.space, ex2.map, 3.0)
    assert tr.termination == "converged"
    assert tr.iterations <= 60
    assert [s.point for s in tr.steps[:3]] == [3.0, 1.4, 0.7]
    assert tr.last <= 1e-8


def test_picard_from_zero(ex2):
    tr = picard_orbit(ex2.space, ex2.map, 0.0)
    assert tr.termination == "converged" and tr.iterations == 1 and tr.last == 0.0


def test_picard_shifted(shifted):
    tr = picard_orbit(shifted.space, shifted.map, 4.0)
    assert tr.termination == "converged"
    assert abs(tr.last - 3.0) <= 1e-8
    assert all(s.self_distance >= 3.0 for s in tr.steps)


def test_picard_errors(ex2, ex2_unrepaired):
    with pytest.raises(OutsideCarrierError):
        picard_orbit(ex2.space, ex2.map, 2.5)
    with pytest.raises(InputError):
        picard_orbit(ex2.space, ex2.map, 1.0, max_iter=0)
    with pytest.raises(NotASelfMapError) as info:
        picard_orbit(ex2_unrepaired.space, ex2_unrepaired.map, 3.5)
    assert info.value.partial_trace.termination == "error"


def test_picard_max_iter(ex2):
    tr = picard_orbit(ex2.space, ex2.map, 4.0, max_iter=5)
    assert tr.termination == "max_iter" and tr.iterations == 5


def test_compute_Mx(ex2):
    assert abs(compute_Mx(ex2.space, ex2.map, RATIONAL, 3.0) - M3) <= 1e-6
    assert abs(compute_Mx(ex2.space, ex2.map, RATIONAL, 1.0) - M1) <= 1e-6
    assert compute_Mx(ex2.space, ex2.map, RATIONAL, 0.0) == 0.0
    assert M3 == pytest.approx(6.791287847, abs=1e-9)


def test_verify_bound4(ex2):
    tr = picard_orbit(ex2.space, ex2.map, 3.0)
    assert all(s.distance_to_start == 3.0 for s in tr.steps)
    assert verify_bound4(tr, compute_Mx(ex2.space, ex2.map, RATIONAL, 3.0)).passed
    zero = picard_orbit(ex2.space, ex2.map, 0.0)
    assert verify_bound4(zero, 0.0).passed
    bad_steps = list(tr.steps)
    bad_steps[4] = replace(bad_steps[4], distance_to_start=M3 + 1)
    rep = verify_bound4(replace(tr, steps=tuple(bad_steps)), M3)
    assert not rep.passed and rep.violations == 1
    assert rep.witnesses[0].points[0] == 4.0


def test_solve_worked_example(ex2):
    res = solve_fixed_point(ex2.space, ex2.map, RATIONAL, EQ8, ex2.start_set(),
                            SolveOptions(contraction_sample=ex2.sample()))
    assert res.converged and res.unique_claimed and res.uniqueness_scope == "global"
    assert abs(res.candidate) <= 1e-8 and res.rho_p == 0 and res.in_Xp
    assert res.starts_agreement <= 1e-8
    assert not res.warnings
    assert [s.start for s in res.per_start] == [0.37, 1.0, 2.0, 3.0, 4.0]


def test_solve_shifted(shifted):
    cf = ComparisonFunction.linear(0.5)
    res = solve_fixed_point(shifted.space, shifted.map, cf, ConditionKind.thm1(0.5), shifted.start_set())
    assert abs(res.candidate - 3) <= 1e-8
    assert abs(res.self_distance - 3) <= 1e-8 and res.rho_p == 3 and res.in_Xp
    assert res.uniqueness_scope == "X_p" and res.unique_claimed


def test_solve_single_point():
    carrier = CarrierSpec.make([], [2.5])
    sp = PartialMetricSpace.make("pt", carrier, "max")
    T = PiecewiseMap.from_pairs([((2.5, 2.5), "x")])
    res = solve_fixed_point(sp, T, RATIONAL, EQ8, SampleSet.from_points([2.5], carrier))
    assert res.candidate == 2.5 and res.iterations == 1 and res.converged


def test_solve_warns_when_condition_fails(usual):
    res = solve_fixed_point(usual.space, usual.map, RATIONAL, EQ8, usual.start_set(),
                            SolveOptions(contraction_sample=usual.sample()))
    assert not res.unique_claimed
    assert any(w.startswith("hypotheses-violated") for w in res.warnings)


def test_solve_empty_starts(ex2):
    with pytest.raises(InputError):
        solve_fixed_point(ex2.space, ex2.map, RATIONAL, EQ8, SampleSet((), ()))


@pytest.mark.parametrize("x0", [3.0, 3.25, 3.5, 3.75, 4.0])
def test_unrepaired_carrier_not_a_self_map(ex2_unrepaired, x0):
    with pytest.raises(NotASelfMapError):
        apply_map(ex2_unrepaired.map, ex2_unrepaired.carrier, x0)


@settings(max_examples=30, deadline=None)
@given(st.one_of(st.floats(0, 2), st.floats(3, 4)))
def test_orbit_invariants(x0):
    from phicontract.scenario import load_scenario
    ex2 = load_scenario("example2-repaired")
    tol = Tolerances()
    tr = picard_orbit(ex2.space, ex2.map, x0)
    assert tr.termination == "converged"
    diag = orbit_diagnostics(tr)
    assert diag.self_distances_nonincreasing
    assert diag.r_x_estimate <= min(s.self_distance for s in tr.steps)
    assert abs(diag.r_x_estimate - tr.steps[-1].self_distance) <= tol.tol
    Mx = compute_Mx(ex2.space, ex2.map, RATIONAL, x0)
    assert Mx >= tr.steps[0].step
    assert verify_bound4(tr, Mx).passed
    z = tr.last
    tz = apply_map(ex2.map, ex2.carrier, z)
    pzz, pzt = eval_p(ex2.space, z, z), eval_p(ex2.space, z, tz)
    assert pzz - tol.eps_num <= pzt <= pzz + 2 * tol.tol
