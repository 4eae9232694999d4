"""Domain model of the clock interrogation problem.

Priors over the oscillator frequency, cost functions with their Bayes
statistics, the oracle phase structure of the query, and scenario
configuration.  Frequencies are stored as accumulated phase over one probe
(omega * T with T = 1 and resonance at 0), which makes the scaling symmetry
explicit and keeps everything dimensionless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

GAUSSIAN = "gaussian"
UNIFORM = "uniform"
DISCRETE = "discrete"

QUADRATIC = "quadratic"
PERIODIC = "periodic"
ABSOLUTE = "absolute"

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


def _ndtr(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / _SQRT2))


def _ndtri(q: float) -> float:
    """Standard normal quantile: rational-approximation seed polished by
    Newton iterations on the erf-based cdf to 1e-12 residual."""
    if not 0.0 < q < 1.0:
        raise DomainError(f"quantile {q} outside (0, 1)")
    # Acklam's rational approximation as the seed
    a = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
         1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
    b = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
         6.680131188771972e+01, -1.328068155288572e+01)
    c = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
         -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
    dco = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
           3.754408661907416e+00)
    plow, phigh = 0.02425, 1 - 0.02425
    if q < plow:
        t = math.sqrt(-2.0 * math.log(q))
        x = (((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5]) / \
            ((((dco[0] * t + dco[1]) * t + dco[2]) * t + dco[3]) * t + 1.0)
    elif q > phigh:
        t = math.sqrt(-2.0 * math.log(1.0 - q))
        x = -(((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5]) / \
            ((((dco[0] * t + dco[1]) * t + dco[2]) * t + dco[3]) * t + 1.0)
    else:
        t = q - 0.5
        u = t * t
        x = (((((a[0] * u + a[1]) * u + a[2]) * u + a[3]) * u + a[4]) * u + a[5]) * t / \
            (((((b[0] * u + b[1]) * u + b[2]) * u + b[3]) * u + b[4]) * u + 1.0)
    for _ in range(8):
        err = _ndtr(x) - q
        if abs(err) <= 1e-12:
            break
        pdf = math.exp(-0.5 * x * x) / _SQRT2PI
        if pdf <= 0.0:
            break
        x -= err / pdf
    return x


@dataclass(frozen=True)
class PriorSpec:
    """Prior over the oscillator frequency (phase per probe).

    kind is one of gaussian / uniform / discrete; use the named constructors.
    """

    kind: str
    mean: float = 0.0
    sigma: float = 0.0
    lo: float = 0.0
    hi: float = 0.0
    points: tuple = ()
    weights: tuple = ()

    @classmethod
    def gaussian(cls, mean: float, sigma: float) -> "PriorSpec":
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        return cls(kind=GAUSSIAN, mean=float(mean), sigma=float(sigma))

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "PriorSpec":
        if not lo < hi:
            raise ValueError("need lo < hi")
        return cls(kind=UNIFORM, lo=float(lo), hi=float(hi))

    @classmethod
    def discrete(cls, points, weights) -> "PriorSpec":
        pts = tuple(float(p) for p in points)
        w = np.asarray(weights, dtype=float)
        if len(pts) != len(w):
            raise ValueError("points and weights must have equal length")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")
        return cls(kind=DISCRETE, points=pts, weights=tuple(float(x) for x in w))

    @property
    def is_continuous(self) -> bool:
        return self.kind in (GAUSSIAN, UNIFORM)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == GAUSSIAN:
            z = (x - self.mean) / self.sigma
            return np.exp(-0.5 * z * z) / (self.sigma * _SQRT2PI)
        if self.kind == UNIFORM:
            inside = (x >= self.lo) & (x <= self.hi)
            return np.where(inside, 1.0 / (self.hi - self.lo), 0.0)
        raise DomainError("discrete prior has no density")

    def cdf(self, x):
        scalar = np.isscalar(x)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.kind == GAUSSIAN:
            out = np.array([_ndtr((v - self.mean) / self.sigma) for v in x])
        elif self.kind == UNIFORM:
            out = np.clip((x - self.lo) / (self.hi - self.lo), 0.0, 1.0)
        else:
            pts = np.asarray(self.points)
            w = np.asarray(self.weights)
            out = np.array([float(w[pts <= v].sum()) for v in x])
        return float(out[0]) if scalar else out

    def invcdf(self, q):
        """Inverse cdf on (0, 1); continuous priors only."""
        if not self.is_continuous:
            raise DomainError("inverse cdf is undefined for a discrete prior")
        scalar = np.isscalar(q)
        q = np.atleast_1d(np.asarray(q, dtype=float))
        if np.any((q <= 0.0) | (q >= 1.0)):
            raise DomainError("quantile outside the open interval (0, 1)")
        if self.kind == GAUSSIAN:
            out = np.array([self.mean + self.sigma * _ndtri(v) for v in q])
        else:
            out = self.lo + q * (self.hi - self.lo)
        return float(out[0]) if scalar else out

    def stats(self):
        """(mean, standard deviation) of the prior."""
        if self.kind == GAUSSIAN:
            return self.mean, self.sigma
        if self.kind == UNIFORM:
            return 0.5 * (self.lo + self.hi), (self.hi - self.lo) / math.sqrt(12.0)
        pts = np.asarray(self.points)
        w = np.asarray(self.weights)
        mu = float(w @ pts)
        var = float(w @ (pts - mu) ** 2)
        return mu, math.sqrt(var)

    def support(self, n_sigmas: float = 8.0):
        """Effective support interval used for quadrature and tails."""
        if self.kind == UNIFORM:
            return self.lo, self.hi
        mu, sd = self.stats()
        return mu - n_sigmas * sd, mu + n_sigmas * sd


MEAN = "mean"
MEDIAN = "median"
NUMERIC_ARGMIN = "numeric_argmin"


@dataclass(frozen=True)
class CostModel:
    """Cost of announcing estimate f when the true frequency is omega.

    quadratic: (x)^2, curvature bound 2, Bayes statistic = posterior mean.
    periodic:  4 sin^2(x/2), no curvature bound, statistic = numeric argmin.
    absolute:  |x|, no curvature bound, statistic = posterior median.
    """

    kind: str

    @classmethod
    def quadratic(cls):
        return cls(QUADRATIC)

    @classmethod
    def periodic(cls):
        return cls(PERIODIC)

    @classmethod
    def absolute(cls):
        return cls(ABSOLUTE)

    def __post_init__(self):
        if self.kind not in (QUADRATIC, PERIODIC, ABSOLUTE):
            raise ValueError(f"unknown cost kind {self.kind!r}")

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == QUADRATIC:
            return x * x
        if self.kind == PERIODIC:
            s = np.sin(0.5 * x)
            return 4.0 * s * s
        return np.abs(x)

    @property
    def curvature_bound(self):
        return 2.0 if self.kind == QUADRATIC else None

    @property
    def bayes_statistic(self) -> str:
        return {QUADRATIC: MEAN, ABSOLUTE: MEDIAN, PERIODIC: NUMERIC_ARGMIN}[self.kind]

    def bayes_estimate(self, omegas, weights) -> float:
        """Point estimate minimizing the posterior expected cost.

        mean for quadratic, weighted median for absolute, and a golden-section
        argmin over [min omega, max omega] for the periodic cost (no closed
        form there).  The returned point is never worse than the best grid
        point.
        """
        omegas = np.asarray(omegas, dtype=float)
        w = np.asarray(weights, dtype=float)
        w = w / w.sum()
        if self.kind == QUADRATIC:
            return float(w @ omegas)
        if self.kind == ABSOLUTE:
            order = np.argsort(omegas)
            cum = np.cumsum(w[order])
            j = int(np.searchsorted(cum, 0.5))
            return float(omegas[order][min(j, len(omegas) - 1)])
        post_cost = lambda g: float(w @ self.value(omegas - g))
        g = _golden_min(post_cost, float(omegas.min()), float(omegas.max()), tol=1e-9)
        best_grid = omegas[int(np.argmin([post_cost(o) for o in omegas]))]
        return float(g if post_cost(g) <= post_cost(best_grid) else best_grid)


def _golden_min(f, a: float, b: float, tol: float = 1e-9) -> float:
    """Golden-section minimizer of a unimodal function on [a, b]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
    return 0.5 * (a + b)


@dataclass(frozen=True)
class DiscretizedPrior:
    """Finite support approximation of a continuous prior."""

    omegas: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        om = np.asarray(self.omegas, dtype=float).reshape(-1)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        object.__setattr__(self, "omegas", om)
        object.__setattr__(self, "weights", w)
        if om.size != w.size or om.size == 0:
            raise ValueError("omegas and weights must be nonempty, equal length")
        if om.size > 1 and np.any(np.diff(om) <= 0):
            raise ValueError("omegas must be strictly increasing")
        if abs(w.sum() - 1.0) > 1e-12 or np.any(w < 0):
            raise ValueError("weights must be nonnegative and sum to 1")

    @property
    def d(self) -> int:
        return int(self.omegas.size)


@dataclass(frozen=True)
class ClockScenario:
    """Full configuration of one interrogation optimization.

    atoms N (query space = N+1 symmetric levels), number of queries,
    the prior and cost model, the oracle discretization size d, and the
    sorted frequency-estimate set F.
    """

    atoms: int
    queries: int
    prior: PriorSpec
    cost: CostModel
    d: int
    estimates: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "estimates",
                           np.asarray(self.estimates, dtype=float).reshape(-1))
        if self.atoms < 1:
            raise ValueError("need at least one atom")
        if self.queries < 1:
            raise ValueError("need at least one query")
        if self.d < 2:
            raise ValueError("oracle discretization needs d >= 2")
        F = self.estimates
        if F.size < 1:
            raise ValueError("need at least one frequency estimate")
        if F.size > 1 and np.any(np.diff(F) <= 0):
            raise ValueError("estimates must be strictly increasing")

    @property
    def m(self) -> int:
        return int(self.estimates.size)

    def with_estimates(self, F) -> "ClockScenario":
        return ClockScenario(self.atoms, self.queries, self.prior, self.cost,
                             self.d, np.asarray(F, dtype=float))


def oracle_phase_matrix(omegas, k: int) -> np.ndarray:
    """Phase structure of one query on symmetric level k.

    Phi_k[x, y] = exp(i k (omega_x - omega_y)); the sign convention matches
    the propagation used by the SDP builder and the simulator (see
    reconstruct module notes).
    """
    if k < 0:
        raise ValueError("level index must be nonnegative")
    om = np.asarray(omegas, dtype=float)
    diff = om[:, None] - om[None, :]
    return np.exp(1j * k * diff)


def cost_operator(omegas, f_a: float, cost: CostModel) -> np.ndarray:
    """Diagonal cost operator diag(C(omega_x - f_a))."""
    om = np.asarray(omegas, dtype=float)
    return np.diag(cost.value(om - f_a)).astype(complex)


def initial_oracle_state(weights) -> np.ndarray:
    """Rank-one prior superposition rho0[x, y] = sqrt(p_x p_y)."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    s = np.sqrt(w)
    return np.outer(s, s).astype(complex)
