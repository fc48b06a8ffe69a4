"""Link transforms of the fitted levels and a relative risk interval.

The split estimate itself is invariant under monotone transforms of the
levels, so a generalized linear reading (binary or count responses)
only re-expresses beta_l and beta_u through the canonical inverse link.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRatio, DomainError, Unstable
from .limit_process import QuantileTable, chernoff_quantile
from .nuisance import LimitParams
from .stump import StumpFit

_LINKS = ("identity", "logit", "log")


@dataclass(frozen=True)
class LinkSpec:
    kind: str = "identity"

    def __post_init__(self):
        if self.kind not in _LINKS:
            raise ValueError("link must be one of %s" % (_LINKS,))


def _apply(kind: str, value: float) -> float:
    if kind == "identity":
        return value
    if kind == "logit":
        if not (0.0 < value < 1.0):
            raise DomainError("logit needs a level strictly inside (0, 1), got %r" % value)
        return float(np.log(value / (1.0 - value)))
    if not (value > 0.0):
        raise DomainError("log needs a positive level, got %r" % value)
    return float(np.log(value))


def transform_fit(fit: StumpFit, link: LinkSpec):
    """Fitted levels on the link scale: (theta_l, theta_u, d_hat)."""
    return _apply(link.kind, fit.beta_l), _apply(link.kind, fit.beta_u), fit.d_hat


def relative_risk_ci(fit: StumpFit, lp: LimitParams, n: int, alpha: float,
                     p_table: QuantileTable | None = None):
    """Interval for the level ratio beta_u / beta_l.

    Works on the log scale: the half width is
    |c2/beta_u - c1/beta_l| * delta with delta the Wald half width for
    d, then exponentiates.  Both levels must be positive.

    Raises
    ------
    DomainError
        A fitted level is not positive.
    Unstable
        b <= 0, so delta is not defined.
    DegenerateRatio
        The log-scale half width vanishes.
    """
    if not (fit.beta_l > 0 and fit.beta_u > 0):
        raise DomainError("relative risk needs positive fitted levels")
    if lp.is_unstable:
        raise Unstable("drift constant b is not positive; calibration undefined")
    p = chernoff_quantile(alpha / 2.0, p_table)
    delta = n ** (-1.0 / 3.0) * (lp.a / lp.b) ** (2.0 / 3.0) * p
    spread = abs(lp.c2 / fit.beta_u - lp.c1 / fit.beta_l)
    tol = 1e-12 * max(abs(lp.c2 / fit.beta_u), abs(lp.c1 / fit.beta_l), 1.0)
    if spread <= tol:
        raise DegenerateRatio("log-scale half width is numerically zero")
    ratio = fit.beta_u / fit.beta_l
    half = spread * delta
    return float(ratio * np.exp(-half)), float(ratio * np.exp(half))
