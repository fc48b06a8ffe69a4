"""Confidence procedures for the split point and the side levels.

Four set constructions calibrated by the simulated limit laws (Wald,
two RSS inversions, and a frozen-level pivot), plus an m-out-of-n
subsampling interval that needs no nuisance estimation.  The inversion
methods scan the candidate grid, so their output is a union of closed
intervals; consumers usually summarize it by the longest component.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BlockTooLarge, BlockTooSmall, DegenerateSample, Unstable
from .limit_process import QuantileTable, chernoff_quantile, maxq1_quantile
from .nuisance import LimitParams
from .stump import Sample, SplitScan, StumpFit


@dataclass(frozen=True)
class ConfidenceSet:
    """Union of accepted intervals for the split point.

    ``accepted`` lists disjoint closed intervals in increasing order;
    ``longest_component`` is the widest one (leftmost on ties) or None
    when nothing was accepted.  ``level`` is the confidence level.
    """

    method: str
    level: float
    point_estimate: float
    accepted: tuple
    longest_component: tuple | None
    diagnostics: dict

    @property
    def is_empty(self) -> bool:
        return len(self.accepted) == 0

    def covers(self, d: float) -> bool:
        return any(lo <= d <= hi for lo, hi in self.accepted)


@dataclass(frozen=True)
class WaldIntervals:
    """Symmetric intervals for beta_l, beta_u and d around the fit."""

    beta_l: tuple
    beta_u: tuple
    d: tuple
    delta: float


@dataclass(frozen=True)
class SubsampleSpec:
    """Plan for m-out-of-n subsampling: m = round(n**gamma)."""

    gamma: float = 0.6
    n_subsamples: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.gamma < 1.0):
            raise ValueError("gamma must lie in (0, 1)")
        if self.n_subsamples < 1:
            raise ValueError("need at least one subsample")


def _components(values: np.ndarray, accept: np.ndarray) -> tuple:
    """Runs of consecutively accepted candidates as closed intervals."""
    if not np.any(accept):
        return ()
    idx = np.flatnonzero(accept)
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate(([0], breaks + 1))
    ends = np.concatenate((breaks, [idx.size - 1]))
    return tuple(
        (float(values[idx[s]]), float(values[idx[e]])) for s, e in zip(starts, ends)
    )


def _longest(components: tuple):
    best = None
    best_len = -1.0
    for lo, hi in components:
        if hi - lo > best_len:
            best, best_len = (lo, hi), hi - lo
    return best


def _inversion_set(method, scan, fit, level, accept, diagnostics) -> ConfidenceSet:
    comp = _components(scan.values, accept)
    diagnostics = dict(diagnostics)
    diagnostics["n_candidates"] = int(scan.values.size)
    diagnostics["n_accepted"] = int(np.count_nonzero(accept))
    return ConfidenceSet(
        method=method,
        level=level,
        point_estimate=fit.d_hat,
        accepted=comp,
        longest_component=_longest(comp),
        diagnostics=diagnostics,
    )


def _check_stable(lp: LimitParams, need_b0: bool = False) -> None:
    if need_b0:
        if not (lp.b0 > 0):
            raise Unstable("curvature constant b0 must be positive")
    elif lp.is_unstable:
        raise Unstable("drift constant b is not positive; calibration undefined")
    if not (abs(lp.jump) > 0):
        raise Unstable("level jump is zero; split is not identified")


def wald_cis(fit: StumpFit, lp: LimitParams, n: int, alpha: float,
             p_table: QuantileTable | None = None) -> WaldIntervals:
    """Wald-type intervals centered at the fit.

    The half width for d is delta = n**(-1/3) * (a/b)**(2/3) * p, with p
    the upper alpha/2 quantile of the argmax law; the level intervals
    scale delta by |c1| and |c2|.  Raises Unstable when b <= 0.
    """
    _check_stable(lp)
    p = chernoff_quantile(alpha / 2.0, p_table)
    delta = n ** (-1.0 / 3.0) * (lp.a / lp.b) ** (2.0 / 3.0) * p
    return WaldIntervals(
        beta_l=(fit.beta_l - abs(lp.c1) * delta, fit.beta_l + abs(lp.c1) * delta),
        beta_u=(fit.beta_u - abs(lp.c2) * delta, fit.beta_u + abs(lp.c2) * delta),
        d=(fit.d_hat - delta, fit.d_hat + delta),
        delta=float(delta),
    )


def rss1_set(sample: Sample, fit: StumpFit, lp: LimitParams, alpha: float,
             q_table: QuantileTable | None = None, min_side: int = 1,
             scan: SplitScan | None = None) -> ConfidenceSet:
    """Split-point set by inverting the profiled RSS excess.

    Accepts candidates whose profiled RSS exceeds the global minimum by
    at most 2 * n**(1/3) * |jump| * a * (a/b)**(1/3) * q_alpha.  The fit
    itself is always accepted, so the set is never empty.
    """
    _check_stable(lp)
    scan = scan if scan is not None else SplitScan(sample, min_side)
    q = maxq1_quantile(alpha, q_table)
    tau = 2.0 * sample.n ** (1.0 / 3.0) * abs(lp.jump) * lp.a \
        * (lp.a / lp.b) ** (1.0 / 3.0) * q
    accept = scan.rss1_profile() <= tau
    return _inversion_set("rss1", scan, fit, 1.0 - alpha, accept,
                          {"threshold": float(tau)})


def rss2_set(sample: Sample, fit: StumpFit, lp: LimitParams, alpha: float,
             q_table: QuantileTable | None = None, min_side: int = 1,
             scan: SplitScan | None = None) -> ConfidenceSet:
    """Split-point set by inverting the frozen-level RSS excess.

    Same construction as :func:`rss1_set` but the statistic freezes the
    levels profiled at each candidate and re-minimizes over the grid, so
    the calibration uses the curvature-only constant b0.
    """
    _check_stable(lp, need_b0=True)
    scan = scan if scan is not None else SplitScan(sample, min_side)
    q = maxq1_quantile(alpha, q_table)
    tau = 2.0 * sample.n ** (1.0 / 3.0) * abs(lp.jump) * lp.a \
        * (lp.a / lp.b0) ** (1.0 / 3.0) * q
    values, degenerate = scan.rss2_profile()
    accept = values <= tau
    return _inversion_set("rss2", scan, fit, 1.0 - alpha, accept,
                          {"threshold": float(tau),
                           "degenerate_candidates": degenerate})


def pivot_set(sample: Sample, fit: StumpFit, lp: LimitParams, alpha: float,
              p_table: QuantileTable | None = None, min_side: int = 1,
              scan: SplitScan | None = None) -> ConfidenceSet:
    """Split-point set from the frozen-level re-estimate.

    For each candidate d the levels are profiled and frozen and the
    criterion is re-minimized; d is accepted when that minimizer lies
    within n**(-1/3) * (a/b0)**(2/3) * p of d.  Candidates whose
    profiled levels coincide are rejected and counted in diagnostics.
    """
    _check_stable(lp, need_b0=True)
    scan = scan if scan is not None else SplitScan(sample, min_side)
    p = chernoff_quantile(alpha / 2.0, p_table)
    rho = sample.n ** (-1.0 / 3.0) * (lp.a / lp.b0) ** (2.0 / 3.0) * p
    dhats, degenerate = scan.pivot_profile()
    accept = ~degenerate & (np.abs(dhats - scan.values) <= rho)
    return _inversion_set("pivot", scan, fit, 1.0 - alpha, accept,
                          {"radius": float(rho),
                           "degenerate_candidates": int(np.count_nonzero(degenerate))})


def _subsample_indices(rng: np.random.Generator, n: int, m: int, count: int) -> np.ndarray:
    """count index sets of size m drawn without replacement from range(n)."""
    keys = rng.random((count, n))
    return np.argsort(keys, axis=1, kind="stable")[:, :m]


def _batch_stump_dhat(x: np.ndarray, y: np.ndarray, idx: np.ndarray, min_side: int):
    """Vectorized stump split for every row of an index matrix.

    Returns the per-row split estimate and a validity mask; a row is
    invalid when every within-row split falls inside a tie group.
    """
    xb = x[idx]
    yb = y[idx]
    order = np.argsort(xb, axis=1, kind="stable")
    xs = np.take_along_axis(xb, order, axis=1)
    ys = np.take_along_axis(yb, order, axis=1)
    rows, m = xs.shape
    prefix = np.cumsum(ys, axis=1)
    total = prefix[:, -1][:, None]
    k = np.arange(1, m)[None, :]
    sl = prefix[:, :-1]
    score = sl * sl / k + (total - sl) ** 2 / (m - k)
    valid = xs[:, :-1] < xs[:, 1:]
    if min_side > 1:
        valid = valid.copy()
        valid[:, : min_side - 1] = False
        valid[:, m - min_side:] = False
    score = np.where(valid, score, -np.inf)
    ok = np.any(valid, axis=1)
    best = np.argmax(score, axis=1)
    return xs[np.arange(rows), best], ok


def subsample_ci(sample: Sample, spec: SubsampleSpec, alpha: float,
                 fit_fn=None, min_side: int = 1) -> ConfidenceSet:
    """Subsampling interval for the split point.

    Draws ``spec.n_subsamples`` blocks of size m = round(n**gamma)
    without replacement, recomputes the split on each, and inverts the
    empirical quantiles of m**(1/3) * (d*_m - d_hat).  The index sets
    are a pure function of (seed, n, m, B).  ``fit_fn`` may replace the
    stump split estimator; it receives a Sample and returns a float.
    """
    n = sample.n
    m = int(round(n ** spec.gamma))
    if m < 2 * min_side:
        raise BlockTooSmall("block size %d cannot hold a split" % m)
    if m >= n:
        raise BlockTooLarge("block size %d must be below n=%d" % (m, n))
    scan = SplitScan(sample, min_side)
    fit = scan.fit()
    rng = np.random.default_rng(spec.seed)
    idx = _subsample_indices(rng, n, m, spec.n_subsamples)
    if fit_fn is None:
        dstars, ok = _batch_stump_dhat(sample.x, sample.y, idx, min_side)
        dstars = dstars[ok]
        dropped = int(np.count_nonzero(~ok))
    else:
        collected = []
        dropped = 0
        for row in idx:
            try:
                collected.append(float(fit_fn(Sample(sample.x[row], sample.y[row]))))
            except DegenerateSample:
                dropped += 1
        dstars = np.asarray(collected)
    if dstars.size == 0:
        raise DegenerateSample("every subsample was degenerate")
    roots = m ** (1.0 / 3.0) * (dstars - fit.d_hat)
    t_lo, t_hi = np.quantile(roots, [alpha / 2.0, 1.0 - alpha / 2.0])
    scale = n ** (-1.0 / 3.0)
    interval = (fit.d_hat - scale * t_hi, fit.d_hat - scale * t_lo)
    return ConfidenceSet(
        method="subsample",
        level=1.0 - alpha,
        point_estimate=fit.d_hat,
        accepted=(interval,),
        longest_component=interval,
        diagnostics={
            "m": m,
            "gamma": spec.gamma,
            "n_subsamples": spec.n_subsamples,
            "seed": spec.seed,
            "degenerate_subsamples": dropped,
        },
    )
