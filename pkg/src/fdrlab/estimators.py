"""Estimators of the number of true null hypotheses.

Every estimator here reads the empirical cdf only at inspection points
``t >= lambda`` (the rejection boundary of the procedure that consumes it),
so moving any p-value around inside ``[0, lambda]`` cannot change its value.
All of them carry the ``+1`` (i.e. ``+1/n`` on the ecdf scale) term and are
therefore strictly positive.

Variants
--------
``Storey(l1)``                 ``(n - R(l1) + 1) / (1 - l1)``
``GStorey(l1, g1, corrected)`` ``(R(g1) - R(l1) + 1) / (g1 - l1)``, optionally
                               times ``1 - (l1/g1)^max(R(g1), 1)``
``Weighted(components, w)``    fixed convex combination
``Dynamic(grid, eps, tail)``   data-dependent convex combination of per-cell
                               generalized Storey estimators
``Constant(c)``                ``c`` regardless of the data
``BH()``                       ``n`` (turns the adaptive test into Benjamini-Hochberg)
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .ecdf import Ecdf
from .errors import ConfigError, DomainError

WEIGHT_TOL = 1e-12


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass(frozen=True)
class Storey:
    lambda1: float

    def __post_init__(self):
        if not 0.0 < self.lambda1 < 1.0:
            raise DomainError(f"storey needs 0 < lambda1 < 1, got {self.lambda1}")

    def inspection_points(self) -> tuple:
        return (self.lambda1,)

    def evaluate(self, e: Ecdf) -> float:
        return (e.n - int(e.count(self.lambda1)) + 1) / (1.0 - self.lambda1)

    def __str__(self) -> str:
        return f"storey:{_fmt(self.lambda1)}"


@dataclass(frozen=True)
class GStorey:
    lambda1: float
    gamma1: float
    corrected: bool = False

    def __post_init__(self):
        if not 0.0 < self.lambda1 < self.gamma1 <= 1.0:
            raise DomainError(
                f"gstorey needs 0 < lambda1 < gamma1 <= 1, got ({self.lambda1}, {self.gamma1})")

    def inspection_points(self) -> tuple:
        return (self.lambda1, self.gamma1)

    def evaluate(self, e: Ecdf) -> float:
        r_l, r_g = e.count([self.lambda1, self.gamma1])
        value = (int(r_g) - int(r_l) + 1) / (self.gamma1 - self.lambda1)
        if self.corrected:
            value *= correction_factor(self.lambda1, self.gamma1, int(r_g))
        return value

    def __str__(self) -> str:
        tail = ",corrected" if self.corrected else ""
        return f"gstorey:{_fmt(self.lambda1)},{_fmt(self.gamma1)}{tail}"


@dataclass(frozen=True)
class Weighted:
    components: tuple
    weights: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        w = tuple(float(x) for x in self.weights)
        if not comps or len(comps) != len(w):
            raise ConfigError("weighted estimator needs one weight per component")
        if any(x <= 0.0 for x in w):
            raise ConfigError("weights must be positive")
        if abs(math.fsum(w) - 1.0) > WEIGHT_TOL:
            raise ConfigError(f"weights must sum to 1 (got {math.fsum(w)!r})")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", w)

    def inspection_points(self) -> tuple:
        pts = set()
        for c in self.components:
            pts.update(c.inspection_points())
        return tuple(sorted(pts))

    def evaluate(self, e: Ecdf) -> float:
        return math.fsum(w * c.evaluate(e) for c, w in zip(self.components, self.weights))

    def __str__(self) -> str:
        parts = ";".join(f"{_fmt(w)}*{c}" for c, w in zip(self.components, self.weights))
        return f"weighted:[{parts}]"


@dataclass(frozen=True)
class DynamicWeightTrace:
    """How the dynamic estimator weighted its cells on one sample.

    ``index`` is the 1-based cell index that received the concentrated weight
    in case 1 (cells ``1..index-1`` get zero); ``None`` in case 2.
    """

    interval_estimates: np.ndarray
    anchor: float
    case: str
    index: int | None
    weights: np.ndarray
    pre_weights: np.ndarray


@dataclass(frozen=True)
class Dynamic:
    """Backward data-driven weighting of cell estimators ``n0(l_{j-1}, l_j)``.

    ``grid`` runs ``lambda = l_0 < l_1 < ... < l_k = 1``.  The top
    ``fixed_tail`` cells always keep their pre-weights
    ``(l_j - l_{j-1}) / (1 - lambda)``; the top cell doubles as the anchor.
    """

    grid: tuple
    epsilon: float = 0.05
    fixed_tail: int = 2

    def __post_init__(self):
        g = tuple(float(x) for x in self.grid)
        object.__setattr__(self, "grid", g)
        if len(g) < 2 or g[0] <= 0.0 or g[-1] != 1.0 or any(b <= a for a, b in zip(g, g[1:])):
            raise ConfigError("dynamic grid must increase strictly from lambda > 0 to 1")
        if not self.epsilon > 0.0:
            raise ConfigError("dynamic epsilon must be positive")
        k = len(g) - 1
        if not 1 <= self.fixed_tail < k:
            raise ConfigError(f"dynamic fixed_tail must satisfy 1 <= tail < k={k}")

    def inspection_points(self) -> tuple:
        return self.grid

    def cell_estimates(self, e: Ecdf) -> np.ndarray:
        counts = e.count(self.grid)
        return (np.diff(counts) + 1) / np.diff(self.grid)

    def trace(self, e: Ecdf) -> DynamicWeightTrace:
        return dynamic_weights(self.cell_estimates(e), self.grid, self.epsilon, self.fixed_tail)

    def evaluate(self, e: Ecdf) -> float:
        est = self.cell_estimates(e)
        tr = dynamic_weights(est, self.grid, self.epsilon, self.fixed_tail)
        return math.fsum(tr.weights * est)

    def __str__(self) -> str:
        grid = ",".join(_fmt(x) for x in self.grid)
        return f"dynamic:grid={grid};eps={_fmt(self.epsilon)};tail={self.fixed_tail}"


@dataclass(frozen=True)
class Constant:
    value: float

    def __post_init__(self):
        if not self.value > 0.0:
            raise DomainError("constant estimator must be positive")

    def inspection_points(self) -> tuple:
        return ()

    def evaluate(self, e: Ecdf) -> float:
        return float(self.value)

    def __str__(self) -> str:
        return f"const:{_fmt(self.value)}"


@dataclass(frozen=True)
class BH:
    """Sentinel estimator ``n0_hat = n``."""

    def inspection_points(self) -> tuple:
        return ()

    def evaluate(self, e: Ecdf) -> float:
        return float(e.n)

    def __str__(self) -> str:
        return "bh"


EstimatorSpec = Union[Storey, GStorey, Weighted, Dynamic, Constant, BH]


# --------------------------------------------------------------------------
# Functional interface


def correction_factor(lambda1: float, gamma1: float, r_gamma: int) -> float:
    return 1.0 - (lambda1 / gamma1) ** max(r_gamma, 1)


def storey_estimate(e: Ecdf, lambda1: float) -> float:
    return Storey(lambda1).evaluate(e)


def gstorey_estimate(e: Ecdf, lambda1: float, gamma1: float, corrected: bool = False) -> float:
    return GStorey(lambda1, gamma1, corrected).evaluate(e)


def variance_balanced_weights(lambdas: Sequence[float]) -> np.ndarray:
    """Weights making ``Var(beta_i * storey(lambda_i))`` equal across components.

    Binomial variance gives ``beta_i`` proportional to ``sqrt(1/lambda_i - 1)``.
    """
    lam = np.asarray(lambdas, dtype=float)
    if lam.ndim != 1 or lam.size == 0 or np.any(~((lam > 0.0) & (lam < 1.0))):
        raise DomainError("variance-balanced weights need lambdas in (0, 1)")
    s = np.sqrt(1.0 / lam - 1.0)
    return s / s.sum()


def weighted_estimate(e: Ecdf, components, weights) -> float:
    return Weighted(tuple(components), tuple(weights)).evaluate(e)


def pre_weights(grid: Sequence[float]) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    return np.diff(g) / (1.0 - g[0])


def dynamic_weights(interval_estimates, grid, epsilon: float,
                    fixed_tail: int = 2) -> DynamicWeightTrace:
    """Backward scan selecting the dynamic weights.

    With ``k`` cells and ``m = fixed_tail``, comparison index ``i`` runs over
    ``1..k-m`` and compares the estimate on cell ``i+1`` (the interval
    ``(l_i, l_{i+1}]``) against ``(1 + epsilon) * anchor``, where the anchor is
    the top-cell estimate.  The largest violating ``i`` (strict ``>``) selects
    case 1: cell ``i`` takes ``1 - sum_{j>i} beta_j``, cells above keep their
    pre-weights and cells below get zero.  Without a violation the
    pre-weights are returned unchanged (case 2).
    """
    est = np.asarray(interval_estimates, dtype=float)
    g = np.asarray(grid, dtype=float)
    k = g.size - 1
    if est.shape != (k,):
        raise ConfigError(f"expected {k} interval estimates for a grid of {k + 1} points, got {est.size}")
    if not 1 <= fixed_tail < k:
        raise ConfigError(f"fixed_tail must satisfy 1 <= tail < k={k}")
    beta = pre_weights(g)
    anchor = float(est[-1])
    bound = (1.0 + epsilon) * anchor
    for i in range(k - fixed_tail, 0, -1):
        if est[i] > bound:                      # cell i+1, 0-based slot i
            w = beta.copy()
            w[: i - 1] = 0.0
            w[i - 1] = 1.0 - math.fsum(beta[i:])
            return DynamicWeightTrace(est, anchor, "case1", i, w, beta)
    return DynamicWeightTrace(est, anchor, "case2", None, beta.copy(), beta)


def validate(spec: EstimatorSpec, lam: float) -> None:
    """Check that ``spec`` only inspects the ecdf on ``[lam, 1]``.

    Raises :class:`ConfigError` naming the offending inspection point.
    """
    if isinstance(spec, Weighted):
        for c in spec.components:
            validate(c, lam)
        return
    if isinstance(spec, Dynamic) and spec.grid[0] != lam:
        raise ConfigError(f"dynamic grid must start at lambda={lam}, starts at {spec.grid[0]}")
    for t in spec.inspection_points():
        if t < lam:
            raise ConfigError(
                f"{spec} inspects the ecdf at {t} < lambda={lam}; "
                "estimators may only use the ecdf on [lambda, 1]")


def evaluate(spec: EstimatorSpec, e: Ecdf, lam: float | None = None) -> float:
    if lam is not None:
        validate(spec, lam)
    return spec.evaluate(e)


class _ZeroedEcdf:
    """View of an ecdf after one p-value has been replaced by 0."""

    __slots__ = ("base", "moved")

    def __init__(self, base: Ecdf, moved: float):
        self.base = base
        self.moved = moved

    @property
    def n(self) -> int:
        return self.base.n

    def count(self, t):
        return self.base.count(t) + (np.asarray(t) < self.moved)


def leave_zero_estimate(spec: EstimatorSpec, sample, i: int, lam: float | None = None,
                        e: Ecdf | None = None) -> float:
    """The estimator recomputed with the ``i``-th (0-based) p-value set to 0.

    ``e`` may pass a precomputed ecdf of ``sample.p`` to avoid re-sorting.
    """
    p = sample.p if hasattr(sample, "p") else np.asarray(sample, dtype=float)
    if not 0 <= i < p.size:
        raise DomainError(f"index {i} out of range for n={p.size}")
    if lam is not None:
        validate(spec, lam)
    if e is None:
        e = Ecdf.from_pvalues(p)
    return spec.evaluate(_ZeroedEcdf(e, float(p[i])))


# --------------------------------------------------------------------------
# Mini-grammar

_WEIGHT_SPLIT = re.compile(r";(?=\s*[-+0-9.eE]+\s*\*)")


def _floats(text: str, what: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad number list in {what}: {text!r}") from None


def parse_estimator(text: str) -> EstimatorSpec:
    """Parse the estimator mini-grammar.

    ``bh`` | ``storey:<l1>`` | ``gstorey:<l1>,<g1>[,corrected]`` |
    ``weighted:[<w>*<spec>;...]`` | ``weighted:vb(<l1>,<l2>,...)`` |
    ``dynamic:grid=<l0,...,1>;eps=<e>[;tail=<m>]`` | ``const:<c>``
    """
    text = text.strip()
    head, _, rest = text.partition(":")
    head = head.strip().lower()
    rest = rest.strip()
    if head == "bh" and not rest:
        return BH()
    if head == "storey":
        vals = _floats(rest, text)
        if len(vals) != 1:
            raise ConfigError(f"storey takes one parameter: {text!r}")
        return Storey(vals[0])
    if head == "gstorey":
        parts = [x.strip() for x in rest.split(",")]
        corrected = parts[-1].lower() == "corrected"
        if corrected:
            parts = parts[:-1]
        vals = _floats(",".join(parts), text)
        if len(vals) != 2:
            raise ConfigError(f"gstorey takes lambda1,gamma1[,corrected]: {text!r}")
        return GStorey(vals[0], vals[1], corrected)
    if head == "const":
        vals = _floats(rest, text)
        if len(vals) != 1:
            raise ConfigError(f"const takes one parameter: {text!r}")
        return Constant(vals[0])
    if head == "weighted":
        if rest.startswith("vb(") and rest.endswith(")"):
            lams = _floats(rest[3:-1], text)
            w = variance_balanced_weights(lams)
            return Weighted(tuple(Storey(x) for x in lams), tuple(w))
        if not (rest.startswith("[") and rest.endswith("]")):
            raise ConfigError(f"weighted expects [<w>*<spec>;...]: {text!r}")
        comps, weights = [], []
        for item in _WEIGHT_SPLIT.split(rest[1:-1]):
            w, star, sub = item.partition("*")
            if not star:
                raise ConfigError(f"weighted item lacks '<w>*': {item!r}")
            try:
                weights.append(float(w))
            except ValueError:
                raise ConfigError(f"bad weight {w!r} in {text!r}") from None
            comps.append(parse_estimator(sub))
        return Weighted(tuple(comps), tuple(weights))
    if head == "dynamic":
        fields = {}
        for item in rest.split(";"):
            key, eq, value = item.partition("=")
            if not eq:
                raise ConfigError(f"dynamic expects key=value items: {item!r}")
            fields[key.strip().lower()] = value.strip()
        unknown = set(fields) - {"grid", "eps", "tail"}
        if unknown or "grid" not in fields or "eps" not in fields:
            raise ConfigError(f"dynamic needs grid= and eps= (optional tail=): {text!r}")
        try:
            eps = float(fields["eps"])
            tail = int(fields.get("tail", 2))
        except ValueError:
            raise ConfigError(f"bad eps/tail in {text!r}") from None
        return Dynamic(tuple(_floats(fields["grid"], text)), eps, tail)
    raise ConfigError(f"unknown estimator {text!r}")
