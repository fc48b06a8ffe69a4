"""Least squares stump fitting and the split-point RSS statistics.

A stump predicts ``beta_l`` for ``x <= d`` and ``beta_u`` for ``x > d``.
The split candidates are the observed x values (a split placed at an
observation keeps that observation, and any ties, on the left).  All
scans share one stable sort of the sample and prefix sums of y, so a
full fit costs O(n log n).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLevels, DegenerateSample, EmptySide

# Rows per block when a scan needs the full candidate-by-candidate
# criterion matrix; keeps peak memory near 32 MB.
_BLOCK_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class Sample:
    """Bivariate sample with finite float entries and n >= 2.

    Arrays are coerced to float64 and frozen so that every operation on
    a sample is a pure function of its inputs.
    """

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64).reshape(-1)
        y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        if x.shape != y.shape:
            raise ValueError("x and y must have the same length")
        if x.size < 2:
            raise ValueError("need at least two observations")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("x and y must be finite")
        x = x.copy()
        y = y.copy()
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class StumpFit:
    """Global least squares stump: split, side levels, attained RSS."""

    d_hat: float
    beta_l: float
    beta_u: float
    rss: float
    n_left: int


class SplitScan:
    """Shared engine for every scan over the candidate split grid.

    Sorts the sample once (stable, so ties keep input order), builds
    prefix sums of y and y**2, and enumerates the candidate splits:
    distinct x values leaving at least ``min_side`` observations on each
    side.  Ties in x are grouped on the left side.
    """

    def __init__(self, sample: Sample, min_side: int = 1):
        if min_side < 1:
            raise ValueError("min_side must be >= 1")
        order = np.argsort(sample.x, kind="stable")
        xs = sample.x[order]
        ys = sample.y[order]
        n = xs.size
        uniq, first = np.unique(xs, return_index=True)
        # cumulative count of observations <= each distinct value
        cum = np.append(first[1:], n)
        keep = (cum >= min_side) & (n - cum >= min_side)
        if not np.any(keep):
            raise DegenerateSample(
                "no candidate split leaves %d observation(s) on each side" % min_side
            )
        self.n = n
        self.min_side = min_side
        self.xs = xs
        self.ys = ys
        self.prefix_y = np.concatenate(([0.0], np.cumsum(ys)))
        self.prefix_yy = np.concatenate(([0.0], np.cumsum(ys * ys)))
        self.values = uniq[keep]
        self.left_counts = cum[keep]
        self._profiled_rss = None
        self._fit = None

    def left_count(self, d: float) -> int:
        """Number of observations with x <= d."""
        return int(np.searchsorted(self.xs, d, side="right"))

    def level_pairs(self):
        """Side means (beta_l, beta_u) profiled at every candidate."""
        m = self.left_counts
        n = self.n
        sl = self.prefix_y[m]
        sr = self.prefix_y[n] - sl
        return sl / m, sr / (n - m)

    def profiled_rss(self) -> np.ndarray:
        """Residual sum of squares of the profiled stump at every candidate."""
        if self._profiled_rss is None:
            m = self.left_counts
            n = self.n
            sl = self.prefix_y[m]
            sr = self.prefix_y[n] - sl
            rss = self.prefix_yy[n] - sl * sl / m - sr * sr / (n - m)
            self._profiled_rss = np.maximum(rss, 0.0)
        return self._profiled_rss

    def fit(self) -> StumpFit:
        """Global minimizer; RSS ties resolved toward the smallest split."""
        if self._fit is None:
            rss = self.profiled_rss()
            j = int(np.argmin(rss))
            m = int(self.left_counts[j])
            sl = self.prefix_y[m]
            sr = self.prefix_y[self.n] - sl
            self._fit = StumpFit(
                d_hat=float(self.values[j]),
                beta_l=float(sl / m),
                beta_u=float(sr / (self.n - m)),
                rss=float(rss[j]),
                n_left=m,
            )
        return self._fit

    def frozen_criterion(self, beta_l: float, beta_u: float) -> np.ndarray:
        """Sum of squared errors at every candidate with both levels frozen.

        Uses prefix sums of the actual squared residuals, so the value at
        a candidate equals the two-pass sum bit for bit.
        """
        rl = np.concatenate(([0.0], np.cumsum((self.ys - beta_l) ** 2)))
        ru = np.concatenate(([0.0], np.cumsum((self.ys - beta_u) ** 2)))
        m = self.left_counts
        return rl[m] + (ru[self.n] - ru[m])

    def frozen_criterion_at(self, beta_l: float, beta_u: float, d: float) -> float:
        """Frozen-level criterion at an arbitrary split point d."""
        m = self.left_count(d)
        rl = float(np.sum((self.ys[:m] - beta_l) ** 2))
        ru = float(np.sum((self.ys[m:] - beta_u) ** 2))
        return rl + ru

    def _frozen_gap_matrix(self, bl, bu):
        """Criterion over candidates, one row per (bl, bu) pair, up to a
        per-row constant: gap[i, k] = (bl-bu) * ((bl+bu) * m_k - 2 * S_k)."""
        m = self.left_counts.astype(np.float64)
        s = self.prefix_y[self.left_counts]
        diff = (bl - bu)[:, None]
        tot = (bl + bu)[:, None]
        return diff * (tot * m[None, :] - 2.0 * s[None, :])

    def rss1_profile(self) -> np.ndarray:
        """RSS1 statistic at every candidate: profiled RSS minus the minimum."""
        rss = self.profiled_rss()
        return rss - self.fit().rss

    def rss2_profile(self):
        """RSS2 statistic at every candidate.

        For each candidate d the side levels are profiled at d, frozen,
        and the criterion is re-minimized over the grid; the statistic is
        the criterion at d minus that minimum.  Candidates whose profiled
        levels coincide give a constant criterion and a zero statistic;
        their count is returned for diagnostics.

        Returns
        -------
        values : ndarray
            Statistic per candidate, nonnegative.
        degenerate : int
            Number of candidates with coinciding profiled levels.
        """
        bl, bu = self.level_pairs()
        ncand = self.values.size
        out = np.empty(ncand)
        block = max(1, _BLOCK_ELEMENTS // ncand)
        for lo in range(0, ncand, block):
            hi = min(lo + block, ncand)
            gap = self._frozen_gap_matrix(bl[lo:hi], bu[lo:hi])
            diag = gap[np.arange(hi - lo), np.arange(lo, hi)]
            out[lo:hi] = diag - gap.min(axis=1)
        degenerate = int(np.count_nonzero(bl == bu))
        return np.maximum(out, 0.0), degenerate

    def pivot_profile(self):
        """Frozen-level split estimate for every candidate.

        Profiles the levels at each candidate d, freezes them, and
        reports the grid minimizer of the frozen criterion (ties toward
        the smallest split).  Candidates with coinciding profiled levels
        are flagged; their estimate is meaningless.

        Returns
        -------
        dhat : ndarray
            Frozen-level minimizer per candidate.
        degenerate : ndarray of bool
            True where the profiled levels coincide.
        """
        bl, bu = self.level_pairs()
        ncand = self.values.size
        pos = np.empty(ncand, dtype=np.int64)
        block = max(1, _BLOCK_ELEMENTS // ncand)
        for lo in range(0, ncand, block):
            hi = min(lo + block, ncand)
            gap = self._frozen_gap_matrix(bl[lo:hi], bu[lo:hi])
            pos[lo:hi] = np.argmin(gap, axis=1)
        return self.values[pos], bl == bu


def fit_stump(sample: Sample, min_side: int = 1) -> StumpFit:
    """Least squares stump fit.

    Scans every candidate split (observed x values leaving at least
    ``min_side`` points per side), profiles the side means, and returns
    the global RSS minimizer.  Ties are broken toward the smallest split
    so the result is a deterministic function of the sample.

    Raises
    ------
    DegenerateSample
        If no candidate split exists (all x equal, or n < 2 * min_side).
    """
    return SplitScan(sample, min_side).fit()


def profile_levels(sample: Sample, d: float):
    """Side means of y for the split at d: (mean of y on x <= d, on x > d)."""
    left = sample.x <= d
    nl = int(np.count_nonzero(left))
    if nl == 0 or nl == sample.n:
        raise EmptySide("split at %r leaves an empty side" % d)
    return float(sample.y[left].mean()), float(sample.y[~left].mean())


def rss0_stat(sample: Sample, beta_l: float, beta_u: float, d: float, fit: StumpFit) -> float:
    """Excess sum of squares of a fully specified stump over the fitted one."""
    pred = np.where(sample.x <= d, beta_l, beta_u)
    return float(np.sum((sample.y - pred) ** 2)) - fit.rss


def rss1_stat(sample: Sample, d: float, fit: StumpFit) -> float:
    """Excess sum of squares of the stump profiled at d over the fitted one.

    Nonnegative whenever d lies on the candidate grid the fit scanned.
    """
    beta_l, beta_u = profile_levels(sample, d)
    pred = np.where(sample.x <= d, beta_l, beta_u)
    return float(np.sum((sample.y - pred) ** 2)) - fit.rss


def profiled_dhat(sample: Sample, beta_l: float, beta_u: float, min_side: int = 1) -> float:
    """Grid minimizer of the criterion with both levels frozen.

    Ties are broken toward the smallest split.  Raises DegenerateLevels
    when ``beta_l == beta_u`` (the criterion is then constant in d).
    """
    if beta_l == beta_u:
        raise DegenerateLevels("frozen criterion is constant when levels coincide")
    scan = SplitScan(sample, min_side)
    crit = scan.frozen_criterion(beta_l, beta_u)
    return float(scan.values[int(np.argmin(crit))])


def rss2_stat(sample: Sample, d: float, min_side: int = 1) -> float:
    """Excess of the frozen-level criterion at d over its re-minimized value.

    The side levels are profiled at d and frozen; the criterion is then
    minimized over the candidate grid.  The statistic is zero at the
    global fit and grows as d moves away from it.
    """
    beta_l, beta_u = profile_levels(sample, d)
    if beta_l == beta_u:
        raise DegenerateLevels("profiled levels at d coincide")
    scan = SplitScan(sample, min_side)
    crit = scan.frozen_criterion(beta_l, beta_u)
    own = scan.frozen_criterion_at(beta_l, beta_u, d)
    return max(own - float(crit.min()), 0.0)
