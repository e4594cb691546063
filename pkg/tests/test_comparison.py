import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phicontract.comparison import (ComparisonFunction, Lemma3Flags, check_hypotheses, f_inverse,
                                    lemma3_crosscheck, phi_iterate, phi_orbit)
from phicontract.errors import InputError, InvalidHypothesisError, RangeError

RATIONAL = ComparisonFunction.rational()
HALF = ComparisonFunction.linear(0.5)
# f = t - phi dips on [10, 12]: increasing, then decreasing, then increasing again
DIPPING = ComparisonFunction.custom("t - min(0.9*t, max(19 - t, 7 + 10*(t - 12)))")


def quadratic_root(s):
    """Positive root of t^2 - s t - s = 0 via numpy's companion-matrix solver."""
    roots = np.roots([1.0, -s, -s])
    return float(max(r.real for r in roots))


def test_f_inverse_examples():
    assert f_inverse(HALF, 1) == 2
    assert f_inverse(RATIONAL, 3) == pytest.approx(quadratic_root(3), abs=1e-12)
    assert quadratic_root(3) == pytest.approx((3 + math.sqrt(21)) / 2, abs=1e-15)
    assert quadratic_root(3) == pytest.approx(3.791287847, abs=1e-9)
    for cf in (HALF, RATIONAL, DIPPING):
        assert f_inverse(cf, 0) == 0


@pytest.mark.parametrize("s", [1e-6, 1e-3, 0.1, 1, 3, 10])
def test_bisection_agrees_with_quadratic_oracle(s):
    t = f_inverse(RATIONAL, s, method="bisect")
    assert abs(RATIONAL.f(t) - s) <= 1e-12
    assert t == pytest.approx(quadratic_root(s), rel=1e-9)
    t_lin = f_inverse(ComparisonFunction.linear(0.3), s, method="bisect")
    assert t_lin == pytest.approx(s / 0.7, rel=1e-10)


def test_f_inverse_errors():
    bounded = ComparisonFunction.custom("t - min(t, 1)")   # f(t) = min(t, 1)
    with pytest.raises(RangeError):
        f_inverse(bounded, 2)
    assert f_inverse(bounded, 0.5) == pytest.approx(0.5)
    with pytest.raises(InvalidHypothesisError):
        f_inverse(DIPPING, 8.5)
    with pytest.raises(InputError):
        f_inverse(RATIONAL, -1)


@settings(max_examples=200)
@given(st.floats(0, 1e6), st.sampled_from(["rational", "linear", "custom"]))
def test_f_inverse_is_right_inverse_and_dominates(s, fam):
    cf = {"rational": RATIONAL, "linear": ComparisonFunction.linear(0.8),
          "custom": ComparisonFunction.custom("t/(2+t)")}[fam]
    t = f_inverse(cf, s)
    assert t >= s
    assert abs(cf.f(t) - s) <= 1e-12 * max(1.0, s)


def test_phi_iterate_examples():
    composed = Fraction(2)
    for _ in range(3):
        composed = composed / (1 + composed)
    assert composed == Fraction(2, 7)
    assert phi_iterate(RATIONAL, 2, 3) == pytest.approx(float(composed), abs=1e-15)
    assert phi_iterate(RATIONAL, 0, 17) == 0
    assert phi_iterate(HALF, 8, 3) == 1
    assert phi_iterate(RATIONAL, 5, 0) == 5


@given(st.floats(0, 1e3), st.integers(0, 50), st.integers(0, 50))
def test_phi_iterate_semigroup(t, m, n):
    a = phi_iterate(RATIONAL, t, m + n)
    b = phi_iterate(RATIONAL, phi_iterate(RATIONAL, t, m), n)
    assert abs(a - b) <= 1e-12


def test_rational_iterates_match_closed_form():
    for t in (0.1, 1.0, 10.0, 1000.0):
        orbit = np.array(phi_orbit(RATIONAL, t, 10_000))
        n = np.arange(orbit.size)
        assert np.max(np.abs(orbit - t / (1 + n * t))) <= 1e-12


def test_hypotheses_rational():
    rep = check_hypotheses(RATIONAL)
    assert rep.phi_increasing and rep.f_increasing and rep.f_inverse_rc_at_0 and rep.phi_iterates_vanish
    f = rep.lemma3
    assert f.i and f.ii and f.iii and f.v and f.vi
    # f^{-1}(s) ~ sqrt(s) near 0
    assert rep.evidence["f_inverse_rc_at_0"]["f_inv_at_2^-40"] == pytest.approx(math.sqrt(2.0 ** -40), rel=1e-5)


def test_hypotheses_custom_rational_matches_builtin():
    a = check_hypotheses(ComparisonFunction.custom("t/(1+t)"))
    b = check_hypotheses(RATIONAL)
    assert (a.phi_increasing, a.f_increasing, a.f_inverse_rc_at_0, a.phi_iterates_vanish, a.lemma3) == \
           (b.phi_increasing, b.f_increasing, b.f_inverse_rc_at_0, b.phi_iterates_vanish, b.lemma3)


def test_hypotheses_doubling_diverges():
    rep = check_hypotheses(ComparisonFunction.custom("2*t"))
    assert not rep.phi_iterates_vanish
    assert not rep.f_increasing
    assert not rep.lemma3.ii
    assert all(tr["reason"] == "diverged" for tr in rep.evidence["phi_iterates_vanish"])


def test_hypotheses_linear_09():
    rep = check_hypotheses(ComparisonFunction.linear(0.9))
    assert rep.all_hold
    assert all(rep.lemma3.as_dict().values())


def test_hypotheses_detect_dip_in_f():
    rep = check_hypotheses(DIPPING)
    assert rep.phi_increasing is False or rep.f_increasing is False


def test_lemma3_crosscheck():
    assert lemma3_crosscheck(check_hypotheses(RATIONAL)) == []
    assert lemma3_crosscheck(check_hypotheses(HALF)) == []
    assert lemma3_crosscheck({"i": True, "vi": True, "ii": False}) == ["(3) i & vi => ii"]
    assert lemma3_crosscheck(Lemma3Flags(True, True, False, True, True, True)) == \
        ["(1) i & ii => iii", "(2) ii & v => iii"]
    assert lemma3_crosscheck(Lemma3Flags(True, True, True, True, False, True)) == ["(5) i => (iv <=> v)"]


@pytest.mark.parametrize("alpha", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
def test_lemma3_crosscheck_linear_family(alpha):
    assert lemma3_crosscheck(check_hypotheses(ComparisonFunction.linear(alpha))) == []


def test_family_validation():
    with pytest.raises(InputError):
        ComparisonFunction.linear(1.0)
    with pytest.raises(InputError):
        ComparisonFunction("quadratic")
