"""Split-point estimation and confidence sets for threshold regression."""

from .confidence import (
    ConfidenceSet,
    SubsampleSpec,
    WaldIntervals,
    pivot_set,
    rss1_set,
    rss2_set,
    subsample_ci,
    wald_cis,
)
from .limit_process import (
    ProcessSpec,
    QuantileTable,
    chernoff_quantile,
    generate_tables,
    load_embedded_table,
    maxq1_quantile,
    simulate_argmax_max,
)
from .links import LinkSpec, relative_risk_ci, transform_fit
from .nuisance import (
    BandwidthPolicy,
    LimitParams,
    NuisanceEstimates,
    density_at,
    ecdf_at,
    estimate_limit_params,
    limit_params,
    local_poly_fit,
    sigma2_at,
)
from .parametric import (
    ParametricFit,
    WorkingModel,
    fit_parametric,
    rss2_ci_parametric,
    rss2_parametric,
)
from .stump import (
    Sample,
    SplitScan,
    StumpFit,
    fit_stump,
    profile_levels,
    profiled_dhat,
    rss0_stat,
    rss1_stat,
    rss2_stat,
)

__version__ = "0.1.0"

__all__ = [
    "BandwidthPolicy",
    "ConfidenceSet",
    "LimitParams",
    "LinkSpec",
    "NuisanceEstimates",
    "ParametricFit",
    "ProcessSpec",
    "QuantileTable",
    "Sample",
    "SplitScan",
    "StumpFit",
    "SubsampleSpec",
    "WaldIntervals",
    "WorkingModel",
    "chernoff_quantile",
    "density_at",
    "ecdf_at",
    "estimate_limit_params",
    "fit_parametric",
    "fit_stump",
    "generate_tables",
    "limit_params",
    "load_embedded_table",
    "local_poly_fit",
    "maxq1_quantile",
    "pivot_set",
    "profile_levels",
    "profiled_dhat",
    "relative_risk_ci",
    "rss0_stat",
    "rss1_stat",
    "rss1_set",
    "rss2_ci_parametric",
    "rss2_parametric",
    "rss2_set",
    "rss2_stat",
    "sigma2_at",
    "simulate_argmax_max",
    "subsample_ci",
    "transform_fit",
    "wald_cis",
]
