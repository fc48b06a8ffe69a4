"""Nuisance estimation at the split and the limiting-distribution constants.

The cube root asymptotics of the split estimator involve four local
quantities: the design density p_X(d), the design distribution F_X(d),
the regression derivative f'(d), and the error variance sigma^2(d).
This module estimates each one and assembles the constants (a, b, b0,
c1, c2) that calibrate every confidence procedure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateLevels,
    NonpositiveEstimate,
    SingularDesign,
    TooFewPoints,
)
from .stump import Sample, StumpFit

# Variance estimates are floored here so downstream square roots and
# ratios stay finite on noiseless data.
VARIANCE_FLOOR = 1e-12

_SQRT_2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class BandwidthPolicy:
    """How a smoother picks its bandwidth.

    mode "fixed" uses ``h`` as given; mode "cv" selects from ``grid`` by
    leave-one-out cross-validation (a data-driven log-spaced grid is
    built when ``grid`` is None).
    """

    mode: str
    h: float | None = None
    grid: tuple | None = None

    def __post_init__(self):
        if self.mode not in ("fixed", "cv"):
            raise ValueError("mode must be 'fixed' or 'cv'")
        if self.mode == "fixed":
            if self.h is None or not np.isfinite(self.h) or self.h <= 0:
                raise ValueError("fixed policy needs a positive bandwidth")

    @classmethod
    def fixed(cls, h: float) -> "BandwidthPolicy":
        return cls(mode="fixed", h=float(h))

    @classmethod
    def cv(cls, grid=None) -> "BandwidthPolicy":
        if grid is not None:
            grid = tuple(float(g) for g in grid)
            if not grid or any(g <= 0 for g in grid):
                raise ValueError("cv grid must be positive")
        return cls(mode="cv", grid=grid)


@dataclass(frozen=True)
class NuisanceEstimates:
    """Local nuisance values at the split: density, cdf, slope, variance."""

    density: float
    cdf: float
    fprime: float
    sigma2: float

    def __post_init__(self):
        if not (self.density > 0 and np.isfinite(self.density)):
            raise NonpositiveEstimate("density at the split must be positive")
        if not (0.0 < self.cdf < 1.0):
            raise ValueError("cdf at the split must lie strictly in (0, 1)")
        if not (self.sigma2 >= 0 and np.isfinite(self.sigma2)):
            raise ValueError("sigma2 must be finite and nonnegative")


@dataclass(frozen=True)
class LimitParams:
    """Constants of the limiting drifted-Brownian problem.

    a scales the Brownian term, b (and the curvature-only b0) scale the
    quadratic drift, c1/c2 propagate split error into the levels, and
    jump is beta_l - beta_u.  When b <= 0 the quadratic drift fails to
    dominate and the Wald/RSS1 calibrations are unusable.
    """

    a: float
    b: float
    b0: float
    c1: float
    c2: float
    jump: float

    @property
    def is_unstable(self) -> bool:
        return not (self.b > 0)


def _spread_scale(x: np.ndarray) -> float:
    """Robust scale for bandwidth rules: min of sd and IQR/1.34, skipping
    whichever is zero."""
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75.0, 25.0])
    iqr = float(q75 - q25) / 1.34
    positive = [s for s in (sd, iqr) if s > 0]
    return min(positive) if positive else 0.0


def silverman_bandwidth(x: np.ndarray) -> float:
    """Reference rule 1.06 * min(sd, IQR/1.34) * n**(-1/5)."""
    x = np.asarray(x, dtype=np.float64)
    return 1.06 * _spread_scale(x) * x.size ** (-0.2)


def _default_grid(x: np.ndarray, span=(-1.0, 1.0), size=9) -> np.ndarray:
    base = silverman_bandwidth(x)
    if base <= 0:
        raise NonpositiveEstimate("sample has zero spread, no usable bandwidth")
    return base * np.logspace(span[0], span[1], size)


def _kde_value(x: np.ndarray, d: float, h: float) -> float:
    z = (d - x) / h
    return float(np.mean(np.exp(-0.5 * z * z))) / (h * _SQRT_2PI)


def _kde_cv_bandwidth(x: np.ndarray, grid: np.ndarray) -> float:
    """Leave-one-out log likelihood selection.

    For selection only, large samples are thinned to at most 2000 points
    (evenly over the sorted sample) to bound the pairwise cost.
    """
    xs = np.sort(x)
    if xs.size > 2000:
        xs = xs[:: int(np.ceil(xs.size / 2000))]
    n = xs.size
    diff = xs[:, None] - xs[None, :]
    best_h, best_score = None, -np.inf
    for h in grid:
        k = np.exp(-0.5 * (diff / h) ** 2)
        np.fill_diagonal(k, 0.0)
        loo = k.sum(axis=1) / ((n - 1) * h * _SQRT_2PI)
        score = float(np.sum(np.log(np.maximum(loo, 1e-300))))
        if score > best_score:
            best_h, best_score = float(h), score
    return best_h


def density_at(x, d: float, policy: BandwidthPolicy | None = None) -> float:
    """Gaussian kernel density estimate of the design density at d.

    The default bandwidth is the reference rule of
    :func:`silverman_bandwidth`; a cv policy selects by leave-one-out
    likelihood instead.

    Raises
    ------
    TooFewPoints
        Fewer than 10 observations.
    NonpositiveEstimate
        Degenerate bandwidth (zero spread) or an estimate that
        underflows to zero, e.g. d far outside the observed range.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size < 10:
        raise TooFewPoints("density estimation needs at least 10 points")
    if policy is None:
        h = silverman_bandwidth(x)
    elif policy.mode == "fixed":
        h = policy.h
    else:
        grid = np.asarray(policy.grid) if policy.grid else _default_grid(x)
        h = _kde_cv_bandwidth(x, grid)
    if not (h and np.isfinite(h) and h > 0):
        raise NonpositiveEstimate("degenerate kernel bandwidth %r" % h)
    val = _kde_value(x, d, h)
    if not (val > 0 and np.isfinite(val)):
        raise NonpositiveEstimate("density estimate vanished at %r" % d)
    return val


def ecdf_at(x, d: float) -> float:
    """Empirical distribution function: fraction of observations <= d."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    return float(np.count_nonzero(x <= d)) / x.size


def _weighted_poly(xs, ys, center, h, degree, skip=None):
    """Gaussian-weighted polynomial fit in scaled coordinates u=(x-c)/h.

    Returns coefficients in powers of u, solved by SVD least squares.
    """
    u = (xs - center) / h
    w = np.exp(-0.5 * u * u)
    if skip is not None:
        w = w.copy()
        w[skip] = 0.0
    if np.count_nonzero(w > 1e-12) < degree + 1:
        raise SingularDesign("fewer effective points than coefficients")
    sw = np.sqrt(w)
    design = np.vander(u, degree + 1, increasing=True) * sw[:, None]
    coef, _, rank, _ = np.linalg.lstsq(design, ys * sw, rcond=None)
    if rank < degree + 1:
        raise SingularDesign("weighted design is rank deficient")
    return coef


def _cv_eval_indices(n: int, cap: int = 400) -> np.ndarray:
    if n <= cap:
        return np.arange(n)
    return np.linspace(0, n - 1, cap).round().astype(int)


def _local_cv_bandwidth(xs, ys, degree, grid):
    """Leave-one-out prediction error over a bandwidth grid.

    Scores on an evenly strided subset of at most 400 points so the cost
    stays bounded; ties and equal scores resolve to the smaller h.
    """
    idx = _cv_eval_indices(xs.size)
    best_h, best_score = None, np.inf
    for h in grid:
        sse = 0.0
        ok = True
        for i in idx:
            try:
                coef = _weighted_poly(xs, ys, xs[i], h, degree, skip=i)
            except SingularDesign:
                ok = False
                break
            sse += (ys[i] - coef[0]) ** 2
        if ok and sse < best_score:
            best_h, best_score = float(h), sse
    if best_h is None:
        raise SingularDesign("every candidate bandwidth gave a singular fit")
    return best_h


def _resolve_local_bandwidth(xs, ys, degree, policy):
    if policy is not None and policy.mode == "fixed":
        return policy.h
    if policy is not None and policy.grid:
        grid = np.asarray(policy.grid)
    else:
        grid = _default_grid(xs, span=(-0.5, 1.3), size=8)
    return _local_cv_bandwidth(xs, ys, degree, grid)


def local_poly_fit(sample: Sample, d: float, degree: int = 2,
                   policy: BandwidthPolicy | None = None):
    """Local polynomial estimate of the regression function at d.

    Fits a Gaussian-weighted polynomial of the given degree centered at
    d and returns ``(value, slope)``, the fitted regression value and
    its first derivative there.  The bandwidth defaults to leave-one-out
    cross-validation over a log-spaced grid.

    Raises
    ------
    TooFewPoints
        Fewer than 5 * (degree + 1) observations.
    SingularDesign
        Rank-deficient design at every candidate bandwidth.
    """
    if degree < 1:
        raise ValueError("degree must be at least 1 to report a slope")
    if sample.n < 5 * (degree + 1):
        raise TooFewPoints("need at least %d points" % (5 * (degree + 1)))
    order = np.argsort(sample.x, kind="stable")
    xs, ys = sample.x[order], sample.y[order]
    h = _resolve_local_bandwidth(xs, ys, degree, policy)
    coef = _weighted_poly(xs, ys, d, h, degree)
    return float(coef[0]), float(coef[1] / h)


def sigma2_at(sample: Sample, d: float, policy: BandwidthPolicy | None = None,
              degree: int = 2) -> float:
    """Local error variance at d via smoothed squared residuals.

    The regression curve is fit pointwise by a local polynomial (degree
    as given, bandwidth per policy), residuals are squared, and a local
    linear smooth of those squares is read off at d.  The result is
    floored at VARIANCE_FLOOR.
    """
    if sample.n < 5 * (degree + 1):
        raise TooFewPoints("need at least %d points" % (5 * (degree + 1)))
    order = np.argsort(sample.x, kind="stable")
    xs, ys = sample.x[order], sample.y[order]
    h = _resolve_local_bandwidth(xs, ys, degree, policy)
    fitted = np.empty_like(ys)
    for i in range(xs.size):
        fitted[i] = _weighted_poly(xs, ys, xs[i], h, degree)[0]
    sq = (ys - fitted) ** 2
    est = float(_weighted_poly(xs, sq, d, h, 1)[0])
    return max(est, VARIANCE_FLOOR)


def limit_params(nuis: NuisanceEstimates, beta_l: float, beta_u: float) -> LimitParams:
    """Assemble the limit constants from nuisance values and side levels.

    a**2 = sigma2 * p, b0 = |f'| * p / 2, and b subtracts the level-jump
    correction b0 - |jump| * p**2 * (1/F + 1/(1-F)) / 8; c1 and c2 scale
    the split error into the two level estimates.  ``is_unstable`` on
    the result flags b <= 0.
    """
    if beta_l == beta_u:
        raise DegenerateLevels("limit constants need distinct side levels")
    p, cdf = nuis.density, nuis.cdf
    jump = beta_l - beta_u
    a = float(np.sqrt(nuis.sigma2 * p))
    b0 = abs(nuis.fprime) * p / 2.0
    b = b0 - abs(jump) * p * p * (1.0 / cdf + 1.0 / (1.0 - cdf)) / 8.0
    c1 = p * (beta_u - beta_l) / (2.0 * cdf)
    c2 = p * (beta_u - beta_l) / (2.0 * (1.0 - cdf))
    return LimitParams(a=a, b=float(b), b0=float(b0), c1=float(c1),
                       c2=float(c2), jump=float(jump))


def estimate_limit_params(sample: Sample, fit: StumpFit,
                          policy: BandwidthPolicy | None = None,
                          degree: int = 2):
    """Estimate every nuisance quantity at the fitted split.

    Returns ``(NuisanceEstimates, LimitParams)`` with the density by
    Gaussian KDE, the cdf by the ECDF, the slope by a local polynomial,
    and the variance by residual smoothing, all evaluated at
    ``fit.d_hat`` and combined with the fitted levels.
    """
    d = fit.d_hat
    nuis = NuisanceEstimates(
        density=density_at(sample.x, d, policy),
        cdf=ecdf_at(sample.x, d),
        fprime=local_poly_fit(sample, d, degree, policy)[1],
        sigma2=sigma2_at(sample, d, policy, degree),
    )
    return nuis, limit_params(nuis, fit.beta_l, fit.beta_u)
