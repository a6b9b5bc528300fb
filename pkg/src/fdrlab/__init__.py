"""Adaptive step-up and step-down multiple tests with finite-sample FDR control."""

from .analysis import (SimulationConfig, SimulationReport, VerificationReport,
                       check_control_condition, fdp, lemma2_sides, multinomial_identity,
                       simulate_fdr, table1, thm1_identity, thm1_integrand)
from .bi_model import (BernoulliTruth, BiSample, DiracZero, FixedTruth, NormalShift,
                       PiecewiseD3, Table, alt_cdf, alt_quantile, parse_alternative,
                       sample_bi, std_normal_cdf, std_normal_quantile, uniform_alternative)
from .ecdf import Ecdf, OrderedSample, count_leq, count_true_leq, ecdf_eval, order
from .errors import ConfigError, DomainError, FdrlabError
from .estimators import (BH, Constant, Dynamic, GStorey, Storey, Weighted, dynamic_weights,
                         evaluate, gstorey_estimate, leave_zero_estimate, parse_estimator,
                         storey_estimate, variance_balanced_weights, weighted_estimate)
from .stepwise import (ProcedureConfig, TestResult, critical_values, run_procedure,
                       step_down, step_up)

__version__ = "0.1.0"
