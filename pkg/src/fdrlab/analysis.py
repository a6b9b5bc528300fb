"""Monte Carlo FDR estimation and checks of the exact FDR identities.

Replicate ``k`` of a run with master seed ``s`` draws its sample from
``numpy.random.default_rng([s, k])``, so every replicate is reproducible on
its own and results do not depend on how replicates are spread over worker
processes.  Per-replicate values are collected in replicate order before any
averaging, which makes reported means bit-identical for any worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .bi_model import (AlternativeDistribution, BiSample, DiracZero, FixedTruth,
                       NormalShift, PiecewiseD3, TruthAssignment, sample_bi)
from .ecdf import Ecdf, order
from .errors import ConfigError, DomainError
from .estimators import (BH, Dynamic, EstimatorSpec, Storey, Weighted, _ZeroedEcdf,
                         variance_balanced_weights)
from .stepwise import ProcedureConfig, TestResult, rejection_count

THREADS_ENV = "FDRLAB_THREADS"
SE_MARGIN = 3.0

# Columns of the per-replicate metric array produced by ``_replicate_metrics``.
FDP, POWER, ESTIMATE, R, INTEGRAND, COND = range(6)
N_METRICS = 6


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    if threads < 1:
        raise ConfigError("threads must be at least 1")
    return threads


def replicate_seed(master_seed, index: int) -> list:
    """Seed entropy for replicate ``index``; ``master_seed`` is an int or a tuple of ints."""
    base = master_seed if isinstance(master_seed, (tuple, list)) else (master_seed,)
    return [int(b) & 0xFFFFFFFFFFFFFFFF for b in base] + [int(index)]


@dataclass(frozen=True)
class SimulationConfig:
    n: int
    truth: TruthAssignment
    alt: AlternativeDistribution
    procedure: ProcedureConfig
    replications: int = 10_000
    master_seed: int = 0

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigError("replications must be at least 1")
        if self.n < 1:
            raise ConfigError("n must be at least 1")
        self.truth.validate(self.n)
        if self.truth.expected_n0(self.n) <= 0:
            raise ConfigError("the expected number of true nulls must be positive")

    def sample(self, index: int) -> BiSample:
        return sample_bi(self.n, self.truth, self.alt, replicate_seed(self.master_seed, index))


@dataclass(frozen=True)
class SimulationReport:
    fdr_hat: float
    fdr_se: float
    power_hat: float
    mean_estimate: float
    mean_r: float
    replications: int
    config: SimulationConfig | None = field(default=None, compare=False)

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in
               ("fdr_hat", "fdr_se", "power_hat", "mean_estimate", "mean_r", "replications")}
        if self.config is not None:
            c = self.config
            out["config"] = {
                "n": c.n, "truth": _truth_dict(c.truth), "alt": str(c.alt),
                "alpha": c.procedure.alpha, "lambda": c.procedure.lam,
                "estimator": str(c.procedure.estimator), "direction": c.procedure.direction,
                "tie_variant": c.procedure.tie_variant,
                "replications": c.replications, "master_seed": c.master_seed,
            }
        return out


def _truth_dict(truth) -> dict:
    if isinstance(truth, FixedTruth):
        return {"n0": truth.n0}
    return {"pi0": truth.pi0}


@dataclass(frozen=True)
class VerificationReport:
    name: str
    lhs: float
    rhs: float
    se_lhs: float
    se_rhs: float
    passed: bool
    margin: float

    def as_dict(self) -> dict:
        return {k: (float(v) if isinstance(v, (float, Fraction)) else v)
                for k, v in self.__dict__.items()}

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.name}: lhs={float(self.lhs):.6g} (se {self.se_lhs:.2g}) "
                f"rhs={float(self.rhs):.6g} (se {self.se_rhs:.2g}) margin={self.margin:.3g}")


def mean_se(x: np.ndarray) -> tuple:
    x = np.asarray(x, dtype=float)
    m = float(np.mean(x))
    se = float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    return m, se


# --------------------------------------------------------------------------
# Per-sample quantities


def fdp(result: TestResult) -> float:
    if result.v is None:
        raise DomainError("FDP needs a result with known truth (v)")
    return result.v / max(result.r, 1)


def _integrand(v_lam: int, r_lam: int, n0_hat: float, alpha: float, lam: float,
               variant: str = "proof") -> float:
    if v_lam == 0:
        return 0.0
    second = lam / (r_lam * alpha) if variant == "proof" else 1.0 / (r_lam * alpha)
    return (alpha / lam) * v_lam * min(1.0 / n0_hat, second)


def thm1_integrand(sample: BiSample, cfg: ProcedureConfig, variant: str = "proof") -> float:
    """``(alpha/lambda) * V(lambda) * min(1/n0_hat, lambda / (R(lambda) alpha))``.

    Its expectation is the exact FDR of the step-up procedure.  ``variant=
    "statement"`` drops the ``lambda`` in the second argument of the min.
    """
    if cfg.direction != "su":
        raise ConfigError("the exact FDR formula applies to step-up procedures")
    if variant not in ("proof", "statement"):
        raise ConfigError(f"unknown integrand variant {variant!r}")
    e = Ecdf(order(sample.p))
    n0_hat = cfg.estimator.evaluate(e)
    r_lam = int(e.count(cfg.lam))
    v_lam = int(np.count_nonzero(sample.p[sample.h == 0] <= cfg.lam))
    return _integrand(v_lam, r_lam, n0_hat, cfg.alpha, cfg.lam, variant)


def _replicate_metrics(sample: BiSample, procedures: Sequence[ProcedureConfig]) -> np.ndarray:
    e = Ecdf(order(sample.p))
    true_mask = sample.h == 0
    n_false = sample.n - int(np.count_nonzero(true_mask))
    true_sorted = true_mask[e.ordered.perm]
    out = np.empty((len(procedures), N_METRICS))
    lam_cache = {}
    for j, cfg in enumerate(procedures):
        r, n0_hat, _ = rejection_count(e, cfg)
        v = int(np.count_nonzero(true_sorted[:r]))
        if cfg.lam not in lam_cache:
            r_lam = int(e.count(cfg.lam))
            lam_cache[cfg.lam] = (r_lam, int(np.count_nonzero(true_sorted[:r_lam])))
        r_lam, v_lam = lam_cache[cfg.lam]
        out[j, FDP] = v / max(r, 1)
        out[j, POWER] = (r - v) / n_false if n_false else 0.0
        out[j, ESTIMATE] = n0_hat
        out[j, R] = r
        out[j, INTEGRAND] = _integrand(v_lam, r_lam, n0_hat, cfg.alpha, cfg.lam)
        out[j, COND] = v_lam / n0_hat
    return out


def _lemma_sides(sample: BiSample, cfg: ProcedureConfig) -> tuple:
    """``V(lambda) / (lambda n0_hat)`` and ``sum_{true i} 1 / n0_hat^(i)``."""
    e = Ecdf(order(sample.p))
    spec = cfg.estimator
    n0_hat = spec.evaluate(e)
    true_p = sample.p[sample.h == 0]
    v_lam = int(np.count_nonzero(true_p <= cfg.lam))
    rhs = math.fsum(1.0 / spec.evaluate(_ZeroedEcdf(e, float(x))) for x in true_p)
    return v_lam / (cfg.lam * n0_hat), rhs


# --------------------------------------------------------------------------
# Replicate engine


def _chunk_worker(args):
    n, truth, alt, master_seed, lo, hi, fn = args
    rows = []
    for k in range(lo, hi):
        s = sample_bi(n, truth, alt, replicate_seed(master_seed, k))
        rows.append(fn(s))
    return np.asarray(rows, dtype=float)


def run_replicates(n: int, truth: TruthAssignment, alt: AlternativeDistribution,
                   fn: Callable[[BiSample], np.ndarray], replications: int,
                   master_seed: int, threads: int | None = None) -> np.ndarray:
    """Apply ``fn`` to ``replications`` independent BI samples.

    Returns an array whose first axis is the replicate index.  ``fn`` must be
    picklable when more than one worker process is used.
    """
    threads = min(resolve_threads(threads), replications)
    if threads == 1:
        return _chunk_worker((n, truth, alt, master_seed, 0, replications, fn))
    bounds = np.linspace(0, replications, 4 * threads + 1).astype(int)
    jobs = [(n, truth, alt, master_seed, int(a), int(b), fn)
            for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(_chunk_worker, jobs))
    return np.concatenate(parts, axis=0)


class _Metrics:
    def __init__(self, procedures):
        self.procedures = tuple(procedures)

    def __call__(self, sample):
        return _replicate_metrics(sample, self.procedures)


class _LemmaSides:
    def __init__(self, cfg):
        self.cfg = cfg

    def __call__(self, sample):
        return _lemma_sides(sample, self.cfg)


def simulate_metrics(n: int, truth, alt, procedures: Sequence[ProcedureConfig],
                     replications: int, master_seed: int, threads: int | None = None) -> np.ndarray:
    """Per-replicate metrics, shape ``(replications, len(procedures), N_METRICS)``.

    All procedures see the same samples (common random numbers).
    """
    return run_replicates(n, truth, alt, _Metrics(procedures), replications, master_seed, threads)


def _report(metrics: np.ndarray, cfg: SimulationConfig | None) -> SimulationReport:
    fdr_hat, fdr_se = mean_se(metrics[:, FDP])
    return SimulationReport(
        fdr_hat=fdr_hat, fdr_se=fdr_se,
        power_hat=float(np.mean(metrics[:, POWER])),
        mean_estimate=float(np.mean(metrics[:, ESTIMATE])),
        mean_r=float(np.mean(metrics[:, R])),
        replications=int(metrics.shape[0]), config=cfg)


def simulate_fdr(cfg: SimulationConfig, threads: int | None = None) -> SimulationReport:
    m = simulate_metrics(cfg.n, cfg.truth, cfg.alt, [cfg.procedure],
                         cfg.replications, cfg.master_seed, threads)
    return _report(m[:, 0, :], cfg)


def compare_means(name: str, a: np.ndarray, b: np.ndarray,
                  k: float = SE_MARGIN) -> VerificationReport:
    """Two Monte Carlo means agree within ``k`` combined standard errors."""
    ma, sa = mean_se(a)
    mb, sb = mean_se(b)
    margin = k * math.hypot(sa, sb)
    return VerificationReport(name, ma, mb, sa, sb, abs(ma - mb) <= margin, margin)


def thm1_identity(cfg: SimulationConfig, threads: int | None = None) -> VerificationReport:
    """Mean FDP versus mean exact-formula integrand on the same replicates."""
    if cfg.procedure.direction != "su":
        raise ConfigError("the exact FDR formula applies to step-up procedures")
    m = simulate_metrics(cfg.n, cfg.truth, cfg.alt, [cfg.procedure],
                         cfg.replications, cfg.master_seed, threads)[:, 0, :]
    return compare_means(f"thm1 {cfg.procedure} {cfg.alt}", m[:, FDP], m[:, INTEGRAND])


def check_control_condition(cfg: SimulationConfig, threads: int | None = None) -> VerificationReport:
    """Monte Carlo check of ``E(V(lambda) / n0_hat) <= lambda``."""
    m = simulate_metrics(cfg.n, cfg.truth, cfg.alt, [cfg.procedure],
                         cfg.replications, cfg.master_seed, threads)[:, 0, :]
    est, se = mean_se(m[:, COND])
    lam = cfg.procedure.lam
    margin = SE_MARGIN * se
    return VerificationReport(f"condition {cfg.procedure.estimator} {cfg.alt}",
                              est, lam, se, 0.0, est <= lam + margin, margin)


def lemma2_sides(cfg: SimulationConfig, threads: int | None = None) -> VerificationReport:
    """Both sides of the leave-one-out identity
    ``E(V(lambda)/n0_hat) / lambda = E(sum_{i true} 1/n0_hat^(i))``."""
    sides = run_replicates(cfg.n, cfg.truth, cfg.alt, _LemmaSides(cfg.procedure),
                           cfg.replications, cfg.master_seed, threads)
    return compare_means(f"lemma {cfg.procedure.estimator} {cfg.alt}", sides[:, 0], sides[:, 1])


def fdr_comparison(name: str, fdp_a: np.ndarray, fdp_b: np.ndarray) -> VerificationReport:
    """``mean(a) <= mean(b) + 3 combined SE``."""
    ma, sa = mean_se(fdp_a)
    mb, sb = mean_se(fdp_b)
    margin = SE_MARGIN * math.hypot(sa, sb)
    return VerificationReport(name, ma, mb, sa, sb, ma <= mb + margin, margin)


# --------------------------------------------------------------------------
# Exact multinomial identity


def _as_prob(x):
    if isinstance(x, (Fraction, int)):
        return Fraction(x)
    return float(x)


def multinomial_expectation(n: int, p1, p2, p3):
    """``E(V1 / (n + 1 - V1 - V2))`` for ``(V1, V2, V3) ~ Multinomial(n; p1, p2, p3)``,
    by summing over all outcomes.  Exact when the probabilities are Fractions."""
    probs = [_as_prob(p1), _as_prob(p2), _as_prob(p3)]
    exact = all(isinstance(p, Fraction) for p in probs)
    p1, p2, p3 = probs
    terms = []
    for k1 in range(1, n + 1):
        c1 = math.comb(n, k1)
        for k2 in range(0, n - k1 + 1):
            k3 = n - k1 - k2
            w = c1 * math.comb(n - k1, k2)
            pmf = w * p1 ** k1 * p2 ** k2 * p3 ** k3
            terms.append(pmf * Fraction(k1, n + 1 - k1 - k2) if exact
                         else pmf * k1 / (n + 1 - k1 - k2))
    if exact:
        return sum(terms, Fraction(0))
    return math.fsum(terms)


def multinomial_closed_form(n: int, p1, p2, p3):
    p1, p2, p3 = _as_prob(p1), _as_prob(p2), _as_prob(p3)
    return p1 / p3 * (1 - (p1 + p2) ** n)


def multinomial_identity(n: int, p1, p2, p3, tol: float = 1e-12) -> VerificationReport:
    """Enumeration versus closed form ``(p1/p3)(1 - (p1 + p2)^n)``."""
    probs = [_as_prob(p) for p in (p1, p2, p3)]
    if n < 0:
        raise DomainError("n must be nonnegative")
    if any(p < 0 for p in probs) or abs(sum(probs) - 1) > 1e-12:
        raise DomainError("p1, p2, p3 must be nonnegative and sum to 1")
    if not probs[2] > 0:
        raise DomainError("p3 must be positive")
    lhs = multinomial_expectation(n, *probs)
    rhs = multinomial_closed_form(n, *probs)
    diff = abs(lhs - rhs)
    return VerificationReport(f"multinomial n={n} p=({float(probs[0]):.4g},{float(probs[1]):.4g},"
                              f"{float(probs[2]):.4g})",
                              lhs, rhs, 0.0, 0.0, bool(diff <= tol), tol)


# --------------------------------------------------------------------------
# Reproduction of the simulation study

TABLE1_N = 1000
TABLE1_N0 = 600
TABLE1_ALPHA = 0.05
TABLE1_LAMBDA = 0.5
TABLE1_GRID = (0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 1.0)
TABLE1_EPSILON = 0.05
TABLE1_COLUMNS = ("D1", "D2", "D3")
TABLE1_ROWS = ("storey", "weighted", "dynamic")
# Published values, rows as TABLE1_ROWS, columns as TABLE1_COLUMNS.
TABLE1_REFERENCE = np.array([
    [0.0501, 0.0392, 0.0354],
    [0.0499, 0.0432, 0.0393],
    [0.0491, 0.0437, 0.0434],
])
TABLE1_TOLERANCE = 0.004


def table1_estimators() -> dict:
    lams = (0.5, 0.6, 0.7)
    return {
        "storey": Storey(0.5),
        "weighted": Weighted(tuple(Storey(x) for x in lams), tuple(variance_balanced_weights(lams))),
        "dynamic": Dynamic(TABLE1_GRID, TABLE1_EPSILON, 2),
    }


def table1_alternatives() -> dict:
    return {"D1": DiracZero(), "D2": NormalShift(1.0), "D3": PiecewiseD3()}


@dataclass(frozen=True)
class Table1Result:
    rows: tuple
    columns: tuple
    fdr: np.ndarray
    se: np.ndarray
    replications: int
    seed: int
    direction: str = "su"
    tie_variant: str = "standard"

    def deviations(self) -> np.ndarray:
        return np.abs(self.fdr[: len(TABLE1_ROWS)] - TABLE1_REFERENCE)

    def to_csv(self) -> str:
        head = ["estimator"] + [f"{c}{suffix}" for c in self.columns for suffix in ("", "_se")]
        lines = [",".join(head)]
        for i, r in enumerate(self.rows):
            cells = [r]
            for j in range(len(self.columns)):
                cells += [f"{self.fdr[i, j]:.6f}", f"{self.se[i, j]:.6f}"]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def format(self) -> str:
        width = 18
        out = ["estimator".ljust(10) + "".join(c.rjust(width) for c in self.columns)]
        for i, r in enumerate(self.rows):
            out.append(r.ljust(10) + "".join(
                f"{self.fdr[i, j]:.4f} ± {self.se[i, j]:.4f}".rjust(width)
                for j in range(len(self.columns))))
        return "\n".join(out)


def table1(reps: int = 10_000, seed: int = 1, threads: int | None = None,
           direction: str = "su", tie_variant: str = "standard",
           include_bh: bool = False) -> Table1Result:
    """FDR of the storey / weighted / dynamic procedures under D1, D2, D3.

    n = 1000, 600 true nulls, alpha = 0.05, lambda = 0.5.  Each column uses
    its own replicate stream shared by all rows.
    """
    if reps < 1:
        raise ConfigError("reps must be at least 1")
    ests = table1_estimators()
    if include_bh:
        ests["bh"] = BH()
    procs = [ProcedureConfig(TABLE1_ALPHA, TABLE1_LAMBDA, spec, direction, tie_variant)
             for spec in ests.values()]
    alts = table1_alternatives()
    fdr = np.empty((len(procs), len(alts)))
    se = np.empty_like(fdr)
    for j, (label, alt) in enumerate(alts.items()):
        m = simulate_metrics(TABLE1_N, FixedTruth(TABLE1_N0), alt, procs, reps,
                             (seed, j), threads)
        for i in range(len(procs)):
            fdr[i, j], se[i, j] = mean_se(m[:, i, FDP])
    return Table1Result(tuple(ests), tuple(alts), fdr, se, reps, seed, direction, tie_variant)
