"""Two-phase polynomial working models and their split-point set.

Generalizes the stump: each side of the split carries its own
polynomial, fit by ordinary least squares over the candidate grid.  The
frozen-branch RSS statistic extends the stump's rss2 construction, with
the curvature constant taken as |f'(d) - psi'(d)| * p(d), where psi is
the average of the two fitted branches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .confidence import ConfidenceSet, _components, _longest
from .errors import DegenerateSample, EmptySide, SingularDesign, Unstable
from .limit_process import QuantileTable, maxq1_quantile
from .nuisance import NuisanceEstimates
from .stump import Sample

MAX_DEGREE = 5


@dataclass(frozen=True)
class WorkingModel:
    """Polynomial degrees for the two branches; (0, 0) is the stump."""

    degree_left: int = 0
    degree_right: int = 0

    def __post_init__(self):
        for deg in (self.degree_left, self.degree_right):
            if not (0 <= deg <= MAX_DEGREE):
                raise ValueError("degrees must lie in [0, %d]" % MAX_DEGREE)


@dataclass(frozen=True)
class ParametricFit:
    """Per-side polynomial coefficients (increasing powers) and the split."""

    d_hat: float
    coef_l: tuple
    coef_u: tuple
    rss: float
    n_left: int


class _BranchScan:
    """Sorted sample with the candidate grids used by the branch fits.

    ``fit_values`` are the candidates where both side designs have at
    least degree + 1 points (and min_side); ``grid_values`` is the wider
    min_side-only grid the frozen criterion is re-minimized over.
    """

    def __init__(self, sample: Sample, model: WorkingModel, min_side: int = 1):
        if min_side < 1:
            raise ValueError("min_side must be >= 1")
        order = np.argsort(sample.x, kind="stable")
        self.xs = sample.x[order]
        self.ys = sample.y[order]
        self.n = sample.n
        uniq, first = np.unique(self.xs, return_index=True)
        cum = np.append(first[1:], self.n)
        need_l = max(min_side, model.degree_left + 1)
        need_r = max(min_side, model.degree_right + 1)
        fit_keep = (cum >= need_l) & (self.n - cum >= need_r)
        grid_keep = (cum >= min_side) & (self.n - cum >= min_side)
        if not np.any(fit_keep):
            raise DegenerateSample(
                "no candidate split leaves enough points for both branches"
            )
        self.fit_values = uniq[fit_keep]
        self.fit_counts = cum[fit_keep]
        self.grid_values = uniq[grid_keep]
        self.grid_counts = cum[grid_keep]
        self.model = model

    def side_fit(self, count: int):
        """OLS polynomial per side for a split after ``count`` points."""
        coef_l, rss_l = _ols_poly(self.xs[:count], self.ys[:count],
                                  self.model.degree_left)
        coef_u, rss_u = _ols_poly(self.xs[count:], self.ys[count:],
                                  self.model.degree_right)
        return coef_l, coef_u, rss_l + rss_u

    def frozen_criterion(self, coef_l, coef_u) -> np.ndarray:
        """Criterion with both branches frozen, over the min_side grid."""
        rl = np.concatenate(([0.0], np.cumsum((self.ys - npoly.polyval(self.xs, coef_l)) ** 2)))
        ru = np.concatenate(([0.0], np.cumsum((self.ys - npoly.polyval(self.xs, coef_u)) ** 2)))
        m = self.grid_counts
        return rl[m] + (ru[self.n] - ru[m])

    def frozen_criterion_at(self, coef_l, coef_u, d: float) -> float:
        m = int(np.searchsorted(self.xs, d, side="right"))
        rl = float(np.sum((self.ys[:m] - npoly.polyval(self.xs[:m], coef_l)) ** 2))
        ru = float(np.sum((self.ys[m:] - npoly.polyval(self.xs[m:], coef_u)) ** 2))
        return rl + ru


def _ols_poly(x: np.ndarray, y: np.ndarray, degree: int):
    design = np.vander(x, degree + 1, increasing=True)
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < degree + 1:
        raise SingularDesign("side design of degree %d is rank deficient" % degree)
    resid = y - design @ coef
    return coef, float(resid @ resid)


def fit_parametric(sample: Sample, model: WorkingModel, min_side: int = 1) -> ParametricFit:
    """Least squares two-phase polynomial fit.

    Scans every candidate split with enough points per side, fits both
    branches by OLS, and keeps the total-RSS minimizer (ties toward the
    smallest split).  Candidates with a rank-deficient side are skipped;
    if every candidate is skipped SingularDesign is raised.
    """
    scan = _BranchScan(sample, model, min_side)
    best = None
    for value, count in zip(scan.fit_values, scan.fit_counts):
        try:
            coef_l, coef_u, rss = scan.side_fit(int(count))
        except SingularDesign:
            continue
        if best is None or rss < best[0]:
            best = (rss, value, count, coef_l, coef_u)
    if best is None:
        raise SingularDesign("every candidate split had a rank-deficient side")
    rss, value, count, coef_l, coef_u = best
    return ParametricFit(
        d_hat=float(value),
        coef_l=tuple(float(c) for c in coef_l),
        coef_u=tuple(float(c) for c in coef_u),
        rss=max(float(rss), 0.0),
        n_left=int(count),
    )


def branch_values(fit: ParametricFit, x: float):
    """Both branch polynomials evaluated at x: (psi_l, psi_u)."""
    return (
        float(npoly.polyval(x, np.asarray(fit.coef_l))),
        float(npoly.polyval(x, np.asarray(fit.coef_u))),
    )


def rss2_parametric(sample: Sample, model: WorkingModel, d: float,
                    min_side: int = 1) -> float:
    """Frozen-branch RSS excess at d.

    Both branches are fit on the sides of d, frozen, and the criterion
    is re-minimized over the candidate grid; the statistic is the
    criterion at d minus that minimum.  Reduces to the stump rss2
    statistic when both degrees are zero.
    """
    scan = _BranchScan(sample, model, min_side)
    count = int(np.searchsorted(scan.xs, d, side="right"))
    if count == 0 or count == scan.n:
        raise EmptySide("split at %r leaves an empty side" % d)
    if count < model.degree_left + 1 or scan.n - count < model.degree_right + 1:
        raise SingularDesign("side of %r too small for its branch degree" % d)
    coef_l, coef_u, _ = scan.side_fit(count)
    crit = scan.frozen_criterion(coef_l, coef_u)
    own = scan.frozen_criterion_at(coef_l, coef_u, d)
    return max(own - float(crit.min()), 0.0)


def rss2_ci_parametric(sample: Sample, model: WorkingModel, fit: ParametricFit,
                       nuis: NuisanceEstimates, alpha: float,
                       q_table: QuantileTable | None = None,
                       min_side: int = 1) -> ConfidenceSet:
    """Split-point set from the frozen-branch statistic.

    Calibrated like the stump rss2 inversion with jump
    J = |psi_l(d) - psi_u(d)| at the fitted split and curvature
    b0 = |f'(d) - psi'(d)| * p(d), where psi averages the two branches.

    Raises Unstable when the branch jump or the curvature vanishes.
    """
    scan = _BranchScan(sample, model, min_side)
    psi_l, psi_u = branch_values(fit, fit.d_hat)
    jump = abs(psi_l - psi_u)
    der_l = npoly.polyval(fit.d_hat, npoly.polyder(np.asarray(fit.coef_l)))
    der_u = npoly.polyval(fit.d_hat, npoly.polyder(np.asarray(fit.coef_u)))
    psi_prime = 0.5 * (der_l + der_u)
    b0 = abs(nuis.fprime - psi_prime) * nuis.density
    if not (jump > 0):
        raise Unstable("branch values coincide at the split; jump is zero")
    if not (b0 > 0):
        raise Unstable("curvature constant b0 is zero")
    a = float(np.sqrt(nuis.sigma2 * nuis.density))
    q = maxq1_quantile(alpha, q_table)
    tau = 2.0 * sample.n ** (1.0 / 3.0) * jump * a * (a / b0) ** (1.0 / 3.0) * q

    values = np.empty(scan.fit_values.size)
    for j, count in enumerate(scan.fit_counts):
        coef_l, coef_u, _ = scan.side_fit(int(count))
        crit = scan.frozen_criterion(coef_l, coef_u)
        own = scan.frozen_criterion_at(coef_l, coef_u, float(scan.fit_values[j]))
        values[j] = max(own - float(crit.min()), 0.0)
    accept = values <= tau
    comp = _components(scan.fit_values, accept)
    return ConfidenceSet(
        method="rss2",
        level=1.0 - alpha,
        point_estimate=fit.d_hat,
        accepted=comp,
        longest_component=_longest(comp),
        diagnostics={
            "threshold": float(tau),
            "working_model": (model.degree_left, model.degree_right),
            "jump": float(jump),
            "b0": float(b0),
            "n_candidates": int(scan.fit_values.size),
            "n_accepted": int(np.count_nonzero(accept)),
        },
    )
