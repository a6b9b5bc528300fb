"""Critical values and the step-up / step-down rejection rules.

All procedures use the capped adaptive ladder
``alpha_i = min(i * alpha / n0_hat, lambda)``, ``i = 1..n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bi_model import BiSample
from .ecdf import Ecdf, OrderedSample, order
from .errors import ConfigError, DomainError
from .estimators import BH, EstimatorSpec, parse_estimator, validate

DIRECTIONS = ("su", "sd")
TIE_VARIANTS = ("standard", "modified")


@dataclass(frozen=True)
class ProcedureConfig:
    alpha: float
    lam: float
    estimator: EstimatorSpec = field(default_factory=BH)
    direction: str = "su"
    tie_variant: str = "standard"

    def __post_init__(self):
        if isinstance(self.estimator, str):
            object.__setattr__(self, "estimator", parse_estimator(self.estimator))
        errors = config_errors(self.alpha, self.lam, self.direction, self.tie_variant)
        if errors:
            raise ConfigError("; ".join(errors))
        validate(self.estimator, self.lam)

    def with_direction(self, direction: str, tie_variant: str = "standard") -> "ProcedureConfig":
        return ProcedureConfig(self.alpha, self.lam, self.estimator, direction, tie_variant)

    def __str__(self) -> str:
        tie = "/modified" if self.tie_variant == "modified" else ""
        return f"{self.direction}{tie}[{self.estimator}] alpha={self.alpha} lambda={self.lam}"


def config_errors(alpha, lam, direction="su", tie_variant="standard") -> list:
    """Every violated precondition of a procedure, as readable messages."""
    errors = []
    if not 0.0 < alpha < 1.0:
        errors.append(f"alpha must lie in (0, 1), got {alpha}")
    if not 0.0 < lam < 1.0:
        errors.append(f"lambda must lie in (0, 1), got {lam}")
    if 0.0 < alpha < 1.0 and 0.0 < lam < 1.0 and not alpha < lam:
        errors.append(f"alpha must be smaller than lambda (0 < alpha < lambda), got alpha={alpha}, lambda={lam}")
    if direction not in DIRECTIONS:
        errors.append(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    if tie_variant not in TIE_VARIANTS:
        errors.append(f"tie_variant must be one of {TIE_VARIANTS}, got {tie_variant!r}")
    elif tie_variant == "modified" and direction != "sd":
        errors.append("tie_variant 'modified' requires direction 'sd'")
    return errors


@dataclass(frozen=True, eq=False)
class TestResult:
    """Outcome of one multiple test.

    ``rejected`` holds original (0-based) indices in increasing order.
    ``v`` and ``fdp`` are ``None`` when truth indicators are unknown.
    """

    r: int
    rejected: np.ndarray
    threshold: float
    estimate: float
    v: int | None = None
    fdp: float | None = None

    __test__ = False   # keep pytest from collecting this class


def critical_values(n: int, alpha: float, lam: float, n0_hat: float) -> np.ndarray:
    if not n0_hat > 0.0:
        raise DomainError(f"n0_hat must be positive, got {n0_hat}")
    return np.minimum(np.arange(1, n + 1) * (alpha / n0_hat), lam)


def _result(ordered: OrderedSample, crit: np.ndarray, r: int, estimate=float("nan")) -> TestResult:
    threshold = float(crit[r - 1]) if r > 0 else 0.0
    return TestResult(r, np.sort(ordered.perm[:r]), threshold, estimate)


def _check_lengths(ordered: OrderedSample, crit) -> np.ndarray:
    crit = np.asarray(crit, dtype=float)
    if crit.shape != (ordered.n,):
        raise DomainError(f"need {ordered.n} critical values, got {crit.size}")
    return crit


def step_up_count(sorted_p: np.ndarray, crit: np.ndarray) -> int:
    hits = np.flatnonzero(sorted_p <= crit)
    return int(hits[-1]) + 1 if hits.size else 0


def step_down_count(sorted_p: np.ndarray, crit: np.ndarray) -> int:
    misses = np.flatnonzero(sorted_p > crit)
    return int(misses[0]) if misses.size else int(sorted_p.size)


def modified_critical_values(sorted_p: np.ndarray, crit: np.ndarray) -> np.ndarray:
    """Tie-robust SD values: ``crit[R(p_(i)) - 1]`` with inclusive counts ``R``."""
    ranks = np.searchsorted(sorted_p, sorted_p, side="right")
    return crit[ranks - 1]


def step_up(ordered: OrderedSample, crit) -> TestResult:
    crit = _check_lengths(ordered, crit)
    return _result(ordered, crit, step_up_count(ordered.sorted_p, crit))


def step_down(ordered: OrderedSample, crit, tie_variant: str = "standard") -> TestResult:
    crit = _check_lengths(ordered, crit)
    if tie_variant == "modified":
        crit = modified_critical_values(ordered.sorted_p, crit)
    elif tie_variant != "standard":
        raise ConfigError(f"unknown tie_variant {tie_variant!r}")
    return _result(ordered, crit, step_down_count(ordered.sorted_p, crit))


def rejection_count(e: Ecdf, cfg: ProcedureConfig) -> tuple:
    """``(R, n0_hat, crit)`` for the procedure on an already ordered sample."""
    n0_hat = cfg.estimator.evaluate(e)
    crit = critical_values(e.n, cfg.alpha, cfg.lam, n0_hat)
    sp = e.ordered.sorted_p
    if cfg.direction == "su":
        r = step_up_count(sp, crit)
    else:
        if cfg.tie_variant == "modified":
            crit = modified_critical_values(sp, crit)
        r = step_down_count(sp, crit)
    return r, n0_hat, crit


def run_procedure(sample, cfg: ProcedureConfig) -> TestResult:
    """Apply the configured procedure to a :class:`BiSample` (or a plain p array)."""
    if not isinstance(sample, BiSample):
        sample = BiSample(np.asarray(sample, dtype=float))
    e = Ecdf(order(sample.p))
    r, n0_hat, crit = rejection_count(e, cfg)
    res = _result(e.ordered, crit, r, n0_hat)
    if sample.h is None:
        return res
    v = int(np.count_nonzero(sample.h[res.rejected] == 0))
    return TestResult(res.r, res.rejected, res.threshold, res.estimate, v, v / max(res.r, 1))
