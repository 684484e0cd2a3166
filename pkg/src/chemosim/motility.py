"""Parametric motility families gamma(v) and their functional suprema.

Every family must satisfy the structural hypothesis

    gamma in C^3([0, inf)),  gamma(v) > 0,  gamma'(v) < 0  for all v >= 0,

i.e. motility is positive and strictly suppressed by the signal. Two closed
form families are built in:

    Exponential(chi):        gamma(v) = exp(-chi * v),            chi > 0
    AlgebraicOffset(k, c):   gamma(v) = c * (1 + v)^(-k),         k > 0, c >= 1

(The pure power c0 / v^k is deliberately excluded: it is not C^3 at v = 0.)
A Tabulated family supports empirically specified motilities via monotone
cubic interpolation of sampled values and derivatives.

Two derived functionals feed the explicit constants downstream:

    sup_ratio(lo, hi)      = sup over [lo, hi] of |gamma'(v)|^2 / gamma(v)
    inf_convexity_ratio()  = inf over v >= 0 of gamma(v) gamma''(v) / |gamma'(v)|^2

For both built-in families the ratio |gamma'|^2/gamma is strictly decreasing,
so the supremum is attained at the left endpoint; the convexity ratio is
constant (1 for Exponential, (k+1)/k for AlgebraicOffset).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import minimize_scalar

DENSE_SAMPLES = 10_000


@dataclass
class HypothesisViolation:
    kind: str  # "gamma_nonpositive" | "dgamma_nonnegative" | "table_not_decreasing"
    v: float
    value: float
    index: int | None = None


@dataclass
class HypothesisReport:
    ok: bool
    violations: list[HypothesisViolation] = field(default_factory=list)


class Motility:
    """Common sampling-based machinery; families override the closed forms."""

    def gamma(self, v):
        raise NotImplementedError

    def dgamma(self, v):
        raise NotImplementedError

    def ddgamma(self, v):
        raise NotImplementedError

    def __call__(self, v):
        return self.gamma(v)

    # -- hypothesis verification -------------------------------------------

    def _sample_points(self, v_max: float) -> np.ndarray:
        return np.linspace(0.0, v_max, DENSE_SAMPLES)

    def check_hypothesis(self, v_max: float) -> HypothesisReport:
        """Dense sign check of gamma > 0 and gamma' < 0 on [0, v_max].

        Parametric families override this with their analytic sign argument,
        which is immune to floating-point underflow of gamma at large v.
        """
        if v_max <= 0:
            raise ValueError("v_max must be positive")
        vs = self._sample_points(v_max)
        g = np.asarray(self.gamma(vs))
        dg = np.asarray(self.dgamma(vs))
        violations = [
            HypothesisViolation("gamma_nonpositive", float(v), float(gv))
            for v, gv in zip(vs[g <= 0], g[g <= 0])
        ]
        violations += [
            HypothesisViolation("dgamma_nonnegative", float(v), float(dv))
            for v, dv in zip(vs[dg >= 0], dg[dg >= 0])
        ]
        return HypothesisReport(ok=not violations, violations=violations)

    # -- functional suprema --------------------------------------------------

    def _ratio(self, v):
        d = self.dgamma(v)
        return d * d / self.gamma(v)

    def _sup_domain(self, v_lo: float, v_hi: float) -> tuple[float, float]:
        if v_lo < 0 or not v_hi > v_lo:
            raise ValueError("need 0 <= v_lo < v_hi")
        return v_lo, v_hi

    def sup_ratio(self, v_lo: float = 0.0, v_hi: float = math.inf) -> float:
        """sup of |gamma'|^2/gamma over [v_lo, v_hi]; dense grid + golden polish."""
        lo, hi = self._sup_domain(v_lo, v_hi)
        vs = np.linspace(lo, hi, DENSE_SAMPLES)
        r = np.asarray(self._ratio(vs))
        i = int(np.argmax(r))
        best = float(r[i])
        a = vs[max(i - 1, 0)]
        b = vs[min(i + 1, len(vs) - 1)]
        if b > a:
            res = minimize_scalar(lambda v: -self._ratio(v), bounds=(a, b), method="bounded")
            best = max(best, float(-res.fun))
        return best

    def inf_convexity_ratio(self) -> float:
        """inf over v >= 0 of gamma * gamma'' / |gamma'|^2 by dense sampling."""
        lo, hi = self._convexity_domain()
        vs = np.linspace(lo, hi, DENSE_SAMPLES)
        dg = np.asarray(self.dgamma(vs))
        if np.any(dg == 0):
            raise ValueError("gamma' vanishes on the sample; hypothesis violated")
        r = np.asarray(self.gamma(vs)) * np.asarray(self.ddgamma(vs)) / (dg * dg)
        i = int(np.argmin(r))
        best = float(r[i])
        a = vs[max(i - 1, 0)]
        b = vs[min(i + 1, len(vs) - 1)]
        if b > a:
            obj = lambda v: self.gamma(v) * self.ddgamma(v) / self.dgamma(v) ** 2
            res = minimize_scalar(obj, bounds=(a, b), method="bounded")
            best = min(best, float(res.fun))
        return best

    def _convexity_domain(self) -> tuple[float, float]:
        return 0.0, 100.0


def _check_nonnegative(v) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if np.any(arr < 0):
        raise ValueError("motility is only defined for v >= 0")
    return arr


@dataclass
class ExponentialMotility(Motility):
    """gamma(v) = exp(-chi v)."""

    chi: float

    def __post_init__(self):
        if self.chi <= 0:
            raise ValueError("chi must be positive")

    def gamma(self, v):
        return np.exp(-self.chi * _check_nonnegative(v))

    def dgamma(self, v):
        return -self.chi * self.gamma(v)

    def ddgamma(self, v):
        return self.chi ** 2 * self.gamma(v)

    def check_hypothesis(self, v_max: float) -> HypothesisReport:
        if v_max <= 0:
            raise ValueError("v_max must be positive")
        # chi > 0 gives gamma > 0 and gamma' = -chi gamma < 0 for every v
        return HypothesisReport(ok=True)

    def sup_ratio(self, v_lo: float = 0.0, v_hi: float = math.inf) -> float:
        # |gamma'|^2/gamma = chi^2 exp(-chi v), decreasing: sup at v_lo.
        lo, _ = self._sup_domain(v_lo, v_hi)
        return self.chi ** 2 * math.exp(-self.chi * lo)

    def inf_convexity_ratio(self) -> float:
        # gamma * gamma'' / gamma'^2 == 1 identically.
        return 1.0


@dataclass
class AlgebraicOffsetMotility(Motility):
    """gamma(v) = c (1 + v)^(-k)."""

    k: float
    c: float = 1.0

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("k must be positive")
        if self.c < 1:
            raise ValueError("c must be >= 1")

    def gamma(self, v):
        return self.c * (1.0 + _check_nonnegative(v)) ** (-self.k)

    def dgamma(self, v):
        return -self.c * self.k * (1.0 + _check_nonnegative(v)) ** (-self.k - 1.0)

    def ddgamma(self, v):
        return self.c * self.k * (self.k + 1.0) * (1.0 + _check_nonnegative(v)) ** (-self.k - 2.0)

    def check_hypothesis(self, v_max: float) -> HypothesisReport:
        if v_max <= 0:
            raise ValueError("v_max must be positive")
        # k > 0, c >= 1 give gamma > 0 and gamma' < 0 for every v
        return HypothesisReport(ok=True)

    def sup_ratio(self, v_lo: float = 0.0, v_hi: float = math.inf) -> float:
        # |gamma'|^2/gamma = c k^2 (1+v)^(-k-2), decreasing: sup at v_lo.
        lo, _ = self._sup_domain(v_lo, v_hi)
        return self.c * self.k ** 2 * (1.0 + lo) ** (-self.k - 2.0)

    def inf_convexity_ratio(self) -> float:
        # ratio is (k+1)/k independent of v.
        return (self.k + 1.0) / self.k


class TabulatedMotility(Motility):
    """Motility from sampled (v, gamma, gamma', gamma'') triples.

    Evaluation uses monotone cubic (PCHIP) interpolation per column and is
    restricted to the tabulated range. The table itself is only required to
    be finite with strictly increasing v; sign or monotonicity defects are
    surfaced by check_hypothesis rather than at construction, so defective
    tables can be probed.
    """

    def __init__(self, v, gamma, dgamma, ddgamma):
        self.v = np.asarray(v, dtype=float)
        self.gamma_table = np.asarray(gamma, dtype=float)
        self.dgamma_table = np.asarray(dgamma, dtype=float)
        self.ddgamma_table = np.asarray(ddgamma, dtype=float)
        if not (self.v.ndim == 1 and self.v.size >= 4):
            raise ValueError("table needs at least 4 points")
        if any(a.shape != self.v.shape for a in (self.gamma_table, self.dgamma_table, self.ddgamma_table)):
            raise ValueError("table columns must have equal length")
        if np.any(np.diff(self.v) <= 0):
            raise ValueError("table v column must be strictly increasing")
        if self.v[0] != 0.0:
            raise ValueError("table must start at v = 0")
        for a in (self.v, self.gamma_table, self.dgamma_table, self.ddgamma_table):
            if not np.isfinite(a).all():
                raise ValueError("table entries must be finite")
        self._g = PchipInterpolator(self.v, self.gamma_table)
        self._dg = PchipInterpolator(self.v, self.dgamma_table)
        self._ddg = PchipInterpolator(self.v, self.ddgamma_table)

    @property
    def v_max_table(self) -> float:
        return float(self.v[-1])

    @classmethod
    def from_csv(cls, path) -> "TabulatedMotility":
        """Load from CSV with header row v,gamma,dgamma,ddgamma."""
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["v", "gamma", "dgamma", "ddgamma"]:
                raise ValueError(f"{path}: expected header 'v,gamma,dgamma,ddgamma'")
            rows = [[float(x) for x in row] for row in reader if row]
        data = np.asarray(rows, dtype=float)
        if data.ndim != 2 or data.shape[1] != 4:
            raise ValueError(f"{path}: expected 4 numeric columns")
        return cls(data[:, 0], data[:, 1], data[:, 2], data[:, 3])

    def _bounded(self, v) -> np.ndarray:
        arr = _check_nonnegative(v)
        if np.any(arr > self.v_max_table):
            raise ValueError(f"v beyond tabulated range [0, {self.v_max_table}]")
        return arr

    def gamma(self, v):
        return self._g(self._bounded(v))

    def dgamma(self, v):
        return self._dg(self._bounded(v))

    def ddgamma(self, v):
        return self._ddg(self._bounded(v))

    def consistency_check(self, tol: float = 0.05) -> bool:
        """Cross-check table derivatives against centered differences of the
        previous column; tol is the allowed relative sup error at interior nodes."""
        ok = True
        for vals, deriv in ((self.gamma_table, self.dgamma_table), (self.dgamma_table, self.ddgamma_table)):
            fd = (vals[2:] - vals[:-2]) / (self.v[2:] - self.v[:-2])
            scale = np.abs(deriv[1:-1]).max() + 1e-30
            ok = ok and bool(np.abs(fd - deriv[1:-1]).max() <= tol * scale)
        return ok

    def check_hypothesis(self, v_max: float) -> HypothesisReport:
        if v_max <= 0:
            raise ValueError("v_max must be positive")
        report = super().check_hypothesis(min(v_max, self.v_max_table))
        # table-level checks pinpoint the offending sample
        for i in range(len(self.v) - 1):
            if self.gamma_table[i + 1] >= self.gamma_table[i]:
                report.violations.append(
                    HypothesisViolation("table_not_decreasing", float(self.v[i + 1]),
                                        float(self.gamma_table[i + 1]), index=i + 1))
        report.ok = not report.violations
        return report

    def _sup_domain(self, v_lo: float, v_hi: float) -> tuple[float, float]:
        lo, hi = super()._sup_domain(v_lo, v_hi)
        if math.isinf(hi):
            # an unbounded sup is truncated at the table's right endpoint
            hi = self.v_max_table
        elif hi > self.v_max_table:
            raise ValueError(f"v_hi {hi} beyond tabulated range [0, {self.v_max_table}]")
        if lo >= hi:
            raise ValueError("empty interval after truncation to table range")
        return lo, hi

    def _convexity_domain(self) -> tuple[float, float]:
        return 0.0, self.v_max_table
