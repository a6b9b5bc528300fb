"""Sampling from the Basic Independence (BI) model.

A BI sample consists of truth indicators ``h`` (0 = true null, 1 = false null)
and p-values ``p = (1 - h) * U + h * xi`` where ``U`` are iid uniform on (0, 1)
and ``xi`` are iid draws from an alternative distribution with cdf ``F1``.

The alternatives used throughout the package are

* ``DiracZero``     point mass at 0 (the strongest possible signal, "D1"),
* ``NormalShift``   ``xi = 1 - Phi(X + mu)`` with ``X ~ N(0, 1)`` ("D2" for mu=1),
* ``PiecewiseD3``   ``F1(t) = 1.5 t`` on [0, 1/2] and ``1 - 2 (1 - t)^3`` above ("D3"),
* ``Table``         piecewise-linear cdf through user breakpoints (covers "D4").
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy import special

from .errors import ConfigError, DomainError

SeedLike = Union[int, Sequence[int], np.random.SeedSequence]

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)

# Acklam's rational approximation, refined below by Halley steps.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549671010256935e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _scalar_or_array(x, out):
    return float(out) if np.ndim(x) == 0 else out


def std_normal_cdf(x):
    """Standard normal cdf, accurate to ~1e-16 absolute."""
    xa = np.asarray(x, dtype=float)
    out = 0.5 * special.erfc(-xa / _SQRT2)
    return _scalar_or_array(x, out)


def _poly(coef, x):
    acc = np.zeros_like(x) + coef[0]
    for c in coef[1:]:
        acc = acc * x + c
    return acc


def std_normal_quantile(u):
    """Inverse of :func:`std_normal_cdf` on the open interval (0, 1)."""
    ua = np.asarray(u, dtype=float)
    if np.any(~((ua > 0.0) & (ua < 1.0))):
        raise DomainError("normal quantile requires 0 < u < 1")
    x = np.empty_like(ua)
    lo = ua < _P_LOW
    hi = ua > 1.0 - _P_LOW
    mid = ~(lo | hi)

    q = np.sqrt(-2.0 * np.log(ua[lo]))
    x[lo] = _poly(_C, q) / (_poly(_D, q) * q + 1.0)
    q = np.sqrt(-2.0 * np.log1p(-ua[hi]))
    x[hi] = -_poly(_C, q) / (_poly(_D, q) * q + 1.0)
    q = ua[mid] - 0.5
    r = q * q
    x[mid] = _poly(_A, r) * q / (_poly(_B, r) * r + 1.0)

    # Halley refinement; the upper half is refined on the complementary
    # tail so that the residual keeps its relative precision.
    for _ in range(2):
        upper = x > 0
        err = np.where(
            upper,
            (1.0 - ua) - 0.5 * special.erfc(x / _SQRT2),
            0.5 * special.erfc(-x / _SQRT2) - ua,
        )
        with np.errstate(over="ignore", invalid="ignore"):
            step = err * _SQRT2PI * np.exp(0.5 * x * x)
            refined = x - step / (1.0 + 0.5 * x * step)
        # deep tails (|x| > ~37) overflow; keep the rational approximation there
        x = np.where(np.isfinite(refined), refined, x)
    return _scalar_or_array(u, x)


# --------------------------------------------------------------------------
# Alternative distributions


@dataclass(frozen=True)
class DiracZero:
    """Point mass at 0."""

    def cdf(self, t):
        return np.ones_like(np.asarray(t, dtype=float))

    def quantile(self, u):
        return np.zeros_like(np.asarray(u, dtype=float))

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.zeros(size)

    def __str__(self) -> str:
        return "d1"


@dataclass(frozen=True)
class NormalShift:
    """False p-values ``1 - Phi(X + mu)``; cdf ``Phi(Phi^-1(t) + mu)``."""

    mu: float = 1.0

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        out = np.where(t >= 1.0, 1.0, 0.0)
        inner = (t > 0.0) & (t < 1.0)
        if np.any(inner):
            out[inner] = std_normal_cdf(std_normal_quantile(t[inner]) + self.mu)
        return out

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        out = np.where(u >= 1.0, 1.0, 0.0)
        inner = (u > 0.0) & (u < 1.0)
        if np.any(inner):
            out[inner] = std_normal_cdf(std_normal_quantile(u[inner]) - self.mu)
        return out

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        x = rng.standard_normal(size)
        return 0.5 * special.erfc((x + self.mu) / _SQRT2)

    def __str__(self) -> str:
        return f"d2:mu={self.mu!r}"


@dataclass(frozen=True)
class PiecewiseD3:
    """``F1(t) = 1.5 t`` for ``t <= 1/2`` and ``1 - 2 (1 - t)^3`` otherwise."""

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t <= 0.5, 1.5 * t, 1.0 - 2.0 * (1.0 - t) ** 3)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        upper = 1.0 - np.cbrt(np.clip(1.0 - u, 0.0, None) / 2.0)
        return np.where(u <= 0.75, u / 1.5, upper)

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.quantile(rng.random(size))

    def __str__(self) -> str:
        return "d3"


@dataclass(frozen=True)
class Table:
    """Piecewise-linear cdf through ``(breakpoints[k], cdf_values[k])``.

    ``breakpoints`` must run strictly increasing from 0 to 1 and ``cdf_values``
    must be nondecreasing in [0, 1] and end at 1.  A positive value at t = 0 is
    an atom at zero.
    """

    breakpoints: tuple
    cdf_values: tuple
    source: str = field(default="", compare=False)

    def __post_init__(self):
        t = np.asarray(self.breakpoints, dtype=float)
        f = np.asarray(self.cdf_values, dtype=float)
        if t.ndim != 1 or t.shape != f.shape or t.size < 2:
            raise ConfigError("table needs matching breakpoints/cdf_values of length >= 2")
        if t[0] != 0.0 or t[-1] != 1.0 or np.any(np.diff(t) <= 0):
            raise ConfigError("table breakpoints must increase strictly from 0 to 1")
        if np.any(np.diff(f) < 0) or f[0] < 0.0 or f[-1] != 1.0:
            raise ConfigError("table cdf values must be nondecreasing in [0, 1] and end at 1")
        object.__setattr__(self, "breakpoints", tuple(float(v) for v in t))
        object.__setattr__(self, "cdf_values", tuple(float(v) for v in f))

    def cdf(self, t):
        return np.interp(np.asarray(t, dtype=float), self.breakpoints, self.cdf_values)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        t = np.asarray(self.breakpoints)
        f = np.asarray(self.cdf_values)
        k = np.clip(np.searchsorted(f, u, side="left"), 1, len(f) - 1)
        f0, f1 = f[k - 1], f[k]
        t0, t1 = t[k - 1], t[k]
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(f1 > f0, (u - f0) / (f1 - f0), 1.0)
        out = t0 + np.clip(frac, 0.0, 1.0) * (t1 - t0)
        return np.where(u <= f[0], 0.0, out)

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.quantile(rng.random(size))

    def __str__(self) -> str:
        if self.source == "uniform":
            return "uniform"
        return f"table:{self.source}" if self.source else "table"


AlternativeDistribution = Union[DiracZero, NormalShift, PiecewiseD3, Table]


def uniform_alternative() -> Table:
    """``F1(t) = t``: false p-values indistinguishable from true ones."""
    return Table((0.0, 1.0), (0.0, 1.0), source="uniform")


def _check_unit(x, name: str) -> np.ndarray:
    xa = np.asarray(x, dtype=float)
    if np.any(~((xa >= 0.0) & (xa <= 1.0))):
        raise DomainError(f"{name} must lie in [0, 1]")
    return xa


def alt_cdf(alt: AlternativeDistribution, t):
    """Evaluate the alternative cdf ``F1`` at ``t`` in [0, 1]."""
    _check_unit(t, "t")
    return _scalar_or_array(t, np.asarray(alt.cdf(t), dtype=float))


def alt_quantile(alt: AlternativeDistribution, u):
    """Generalized inverse ``inf{t : F1(t) >= u}``."""
    _check_unit(u, "u")
    return _scalar_or_array(u, np.asarray(alt.quantile(u), dtype=float))


def parse_alternative(text: str) -> AlternativeDistribution:
    """Parse ``d1``, ``d2[:mu=<x>]``, ``d3``, ``uniform`` or ``table:<path.csv>``."""
    text = text.strip()
    head, _, rest = text.partition(":")
    head = head.lower()
    if head == "d1" and not rest:
        return DiracZero()
    if head == "d3" and not rest:
        return PiecewiseD3()
    if head == "uniform" and not rest:
        return uniform_alternative()
    if head == "d2":
        if not rest:
            return NormalShift()
        key, _, value = rest.partition("=")
        if key.strip() != "mu":
            raise ConfigError(f"bad d2 parameter in {text!r}; expected d2:mu=<real>")
        try:
            return NormalShift(float(value))
        except ValueError:
            raise ConfigError(f"bad mu value in {text!r}") from None
    if head == "table" and rest:
        return load_table(rest)
    raise ConfigError(f"unknown alternative {text!r}")


def load_table(path: str) -> Table:
    """Read a ``t,F1`` CSV into a :class:`Table` alternative."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"t", "F1"} <= set(reader.fieldnames):
            raise ConfigError(f"{path}: table CSV needs columns t,F1")
        try:
            rows = [(float(r["t"]), float(r["F1"])) for r in reader]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: non-numeric table entry ({exc})") from None
    if not rows:
        raise ConfigError(f"{path}: empty table")
    t, f = zip(*rows)
    return Table(t, f, source=path)


# --------------------------------------------------------------------------
# Truth assignments and samples


@dataclass(frozen=True)
class FixedTruth:
    """Deterministic indicators: the first ``n0`` hypotheses are true nulls."""

    n0: int

    def validate(self, n: int) -> None:
        if not 0 <= self.n0 <= n:
            raise ConfigError(f"fixed truth needs 0 <= n0 <= n, got n0={self.n0}, n={n}")

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        h = np.ones(n, dtype=np.int8)
        h[: self.n0] = 0
        return h

    def expected_n0(self, n: int) -> float:
        return float(self.n0)


@dataclass(frozen=True)
class BernoulliTruth:
    """Efron's two-group model: each hypothesis is a true null with probability ``pi0``."""

    pi0: float

    def validate(self, n: int) -> None:
        if not 0.0 < self.pi0 <= 1.0:
            raise ConfigError(f"bernoulli truth needs 0 < pi0 <= 1, got {self.pi0}")

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return (rng.random(n) >= self.pi0).astype(np.int8)

    def expected_n0(self, n: int) -> float:
        return self.pi0 * n


TruthAssignment = Union[FixedTruth, BernoulliTruth]


@dataclass(frozen=True, eq=False)
class BiSample:
    """p-values with (optionally known) truth indicators; ``h[i] == 0`` marks a true null."""

    p: np.ndarray
    h: np.ndarray | None = None

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 1 or p.size < 1:
            raise DomainError("a sample needs at least one p-value")
        if self.h is not None:
            h = np.asarray(self.h, dtype=np.int8)
            if h.shape != p.shape or np.any((h != 0) & (h != 1)):
                raise DomainError("truth indicators must be 0/1 and match p in length")
            object.__setattr__(self, "h", h)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return int(self.p.size)

    @property
    def n0(self) -> int:
        if self.h is None:
            raise DomainError("sample carries no truth indicators")
        return int(np.count_nonzero(self.h == 0))


def sample_bi(n: int, truth: TruthAssignment, alt: AlternativeDistribution,
              seed: SeedLike) -> BiSample:
    """Draw one BI sample; a deterministic function of the arguments.

    Truth indicators, the uniforms ``U_1..U_n`` and the alternatives
    ``xi_1..xi_n`` are drawn in that fixed order from one generator, so the
    three families are mutually independent.
    """
    if n < 1:
        raise ConfigError("n must be at least 1")
    truth.validate(n)
    rng = np.random.default_rng(seed)
    h = truth.draw(rng, n)
    u = rng.random(n)
    xi = alt.draw(rng, n)
    return BiSample(np.where(h == 0, u, xi), h)
