"""Numerical verification of phi-contraction fixed-point results in partial metric spaces."""

__version__ = "0.1.0"

from .comparison import (ComparisonFunction, HypothesisReport, check_hypotheses, f_inverse,
                         lemma3_crosscheck, phi_iterate)
from .contraction import ConditionKind, check_contraction, condition_rhs, corollary2_equivalence, falsify
from .core import (CarrierSpec, CheckReport, PartialMetricSpace, SampleSet, SamplingOptions, Tolerances,
                   Witness, ball_contains, eval_p, induced_ps, make_sample, rho_and_Xp)
from .exprlang import PiecewiseMap, apply_map, evaluate, parse
from .scenario import Scenario, load_scenario
from .solver import compute_Mx, picard_orbit, solve_fixed_point, verify_bound4
from .verify import check_axioms, check_induced_metric, orbit_diagnostics
