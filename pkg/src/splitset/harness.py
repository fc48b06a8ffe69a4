"""Monte Carlo harness: benchmark model, coverage studies, block pilot.

The benchmark regression is a steep sigmoid on [0, 1] with uniform
design, split at 0.5, observed under homoscedastic or heteroscedastic
Gaussian noise.  Coverage experiments replay the confidence procedures
over replicated samples, calibrated either at the true nuisance values
(isolating the procedures) or at estimated ones (end-to-end behavior).
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .confidence import (
    ConfidenceSet,
    SubsampleSpec,
    pivot_set,
    rss1_set,
    rss2_set,
    subsample_ci,
    wald_cis,
)
from .errors import ConfigError, SplitsetError
from .nuisance import LimitParams, NuisanceEstimates, estimate_limit_params, limit_params
from .stump import Sample, SplitScan

SIGMOID_RATE = 15.0
SPLIT_TRUE = 0.5
HOM_VARIANCE = 0.25
HET_RATE = 2.77

ERROR_MODELS = ("homoscedastic", "heteroscedastic", "noiseless")
METHODS = ("wald", "rss1", "rss2", "pivot", "subsample")

# Pilot grid of block-size exponents for subsampling.
PILOT_GAMMA_GRID = (0.33, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)

_SCENARIO_KEYS = {
    "n", "reps", "error_model", "methods", "alpha", "nuisance_mode",
    "seed", "min_side", "subsample",
}
_SUBSAMPLE_KEYS = {"gamma", "n_subsamples", "seed"}


def regression_curve(x):
    """Benchmark regression function: sigmoid of slope 15 centered at 0.5."""
    u = SIGMOID_RATE * (np.asarray(x, dtype=np.float64) - SPLIT_TRUE)
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    eu = np.exp(u[~pos])
    out[~pos] = eu / (1.0 + eu)
    return out


def noise_variance(error_model: str, x):
    x = np.asarray(x, dtype=np.float64)
    if error_model == "homoscedastic":
        return np.full_like(x, HOM_VARIANCE)
    if error_model == "heteroscedastic":
        return np.exp(-HET_RATE * x)
    if error_model == "noiseless":
        return np.zeros_like(x)
    raise ConfigError("unknown error model %r" % error_model)


def generate_sample(n: int, error_model: str, seed) -> Sample:
    """One benchmark sample: x uniform on [0, 1], y the sigmoid plus noise."""
    if error_model not in ERROR_MODELS:
        raise ConfigError("unknown error model %r" % error_model)
    rng = np.random.default_rng(seed)
    x = rng.random(n)
    y = regression_curve(x)
    if error_model != "noiseless":
        y = y + rng.standard_normal(n) * np.sqrt(noise_variance(error_model, x))
    return Sample(x, y)


def true_split_levels():
    """Side means of the benchmark sigmoid over [0, 0.5] and (0.5, 1].

    The sigmoid has the exact antiderivative log(1 + exp(u)) / rate, so
    both levels are closed form.
    """
    r = SIGMOID_RATE
    half = r * SPLIT_TRUE
    beta_l = (2.0 / r) * (np.log(2.0) - np.log1p(np.exp(-half)))
    beta_u = (2.0 / r) * (np.log1p(np.exp(half)) - np.log(2.0))
    return float(beta_l), float(beta_u)


@dataclass(frozen=True)
class TrueConstants:
    """Limit constants of the benchmark model, plus the true parameters."""

    lp: LimitParams
    beta_l: float
    beta_u: float
    d: float


def true_limit_constants(error_model: str) -> TrueConstants:
    """Exact nuisance values of the benchmark at the split.

    Density 1, cdf 1/2, slope rate/4, and the model's variance at 0.5;
    defined only for the two noisy error models.
    """
    if error_model not in ("homoscedastic", "heteroscedastic"):
        raise ConfigError("true constants need a noisy error model, got %r" % error_model)
    sigma2 = float(noise_variance(error_model, np.array([SPLIT_TRUE]))[0])
    beta_l, beta_u = true_split_levels()
    nuis = NuisanceEstimates(density=1.0, cdf=0.5, fprime=SIGMOID_RATE / 4.0,
                             sigma2=sigma2)
    return TrueConstants(lp=limit_params(nuis, beta_l, beta_u),
                         beta_l=beta_l, beta_u=beta_u, d=SPLIT_TRUE)


@dataclass(frozen=True)
class Scenario:
    """One coverage experiment: model, size, methods, calibration mode."""

    n: int
    reps: int
    error_model: str
    methods: tuple
    alpha: float = 0.05
    nuisance_mode: str = "true_values"
    seed: int = 0
    min_side: int = 1
    subsample: SubsampleSpec | None = None

    def __post_init__(self):
        if self.error_model not in ERROR_MODELS:
            raise ConfigError("unknown error model %r" % self.error_model)
        methods = tuple(self.methods)
        for m in methods:
            if m not in METHODS:
                raise ConfigError("unknown method %r" % m)
        if not methods:
            raise ConfigError("scenario requests no methods")
        object.__setattr__(self, "methods", methods)
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError("alpha must lie in (0, 1)")
        if self.n < 2 or self.reps < 1:
            raise ConfigError("need n >= 2 and reps >= 1")
        if self.nuisance_mode not in ("true_values", "estimated"):
            raise ConfigError("nuisance_mode must be 'true_values' or 'estimated'")
        if "subsample" in methods and self.subsample is None:
            raise ConfigError("subsample method needs a subsample spec")


@dataclass
class MethodStats:
    """Aggregated Monte Carlo results for one method."""

    coverage: float
    mean_length: float
    mc_se: float
    failures: int
    successes: int
    full_coverage: float


@dataclass
class CoverageReport:
    scenario: Scenario
    stats: dict = field(default_factory=dict)


def _worker_count() -> int:
    raw = os.environ.get("SPLITSET_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _derived_seed(*parts) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _default_estimator(sample: Sample, fit) -> LimitParams:
    return estimate_limit_params(sample, fit)[1]


def _interval_record(lo: float, hi: float, d0: float):
    covered = lo <= d0 <= hi
    return covered, covered, hi - lo


def _set_record(cs: ConfidenceSet, d0: float):
    if cs.is_empty:
        return None
    lo, hi = cs.longest_component
    return lo <= d0 <= hi, cs.covers(d0), hi - lo


def _run_one_rep(scenario: Scenario, rep: int, truth: TrueConstants | None,
                 estimator, tables) -> dict:
    p_table, q_table = tables
    sample = generate_sample(scenario.n, scenario.error_model,
                             [scenario.seed, rep])
    out = {}
    try:
        scan = SplitScan(sample, scenario.min_side)
        fit = scan.fit()
        if scenario.nuisance_mode == "true_values":
            lp = truth.lp
        else:
            lp = estimator(sample, fit)
    except SplitsetError:
        return {m: None for m in scenario.methods}
    d0 = SPLIT_TRUE
    for method in scenario.methods:
        try:
            if method == "wald":
                lo, hi = wald_cis(fit, lp, scenario.n, scenario.alpha, p_table).d
                out[method] = _interval_record(lo, hi, d0)
            elif method == "rss1":
                cs = rss1_set(sample, fit, lp, scenario.alpha, q_table,
                              scenario.min_side, scan=scan)
                out[method] = _set_record(cs, d0)
            elif method == "rss2":
                cs = rss2_set(sample, fit, lp, scenario.alpha, q_table,
                              scenario.min_side, scan=scan)
                out[method] = _set_record(cs, d0)
            elif method == "pivot":
                cs = pivot_set(sample, fit, lp, scenario.alpha, p_table,
                               scenario.min_side, scan=scan)
                out[method] = _set_record(cs, d0)
            else:
                spec = SubsampleSpec(
                    gamma=scenario.subsample.gamma,
                    n_subsamples=scenario.subsample.n_subsamples,
                    seed=_derived_seed(scenario.subsample.seed, scenario.seed, rep),
                )
                cs = subsample_ci(sample, spec, scenario.alpha,
                                  min_side=scenario.min_side)
                out[method] = _set_record(cs, d0)
        except SplitsetError:
            out[method] = None
    return out


def run_coverage_experiment(scenario: Scenario, nuisance_estimator=None,
                            tables=(None, None)) -> CoverageReport:
    """Monte Carlo coverage and length study over replicated samples.

    Replication r draws its sample from the stream (seed, r), so runs
    are reproducible and independent of worker scheduling; the worker
    count is capped by the SPLITSET_THREADS environment variable.  With
    nuisance_mode "true_values" the estimator is never invoked.
    Failures (instability, degeneracy, empty sets) are counted per
    method and excluded from the averages.
    """
    truth = None
    if scenario.nuisance_mode == "true_values":
        truth = true_limit_constants(scenario.error_model)
    estimator = nuisance_estimator or _default_estimator

    workers = _worker_count()
    args = [(scenario, rep, truth, estimator, tables)
            for rep in range(scenario.reps)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda a: _run_one_rep(*a), args))
    else:
        results = [_run_one_rep(*a) for a in args]

    report = CoverageReport(scenario=scenario)
    for method in scenario.methods:
        records = [r[method] for r in results]
        good = [r for r in records if r is not None]
        failures = len(records) - len(good)
        if good:
            cov = float(np.mean([g[0] for g in good]))
            full = float(np.mean([g[1] for g in good]))
            length = float(np.mean([g[2] for g in good]))
            se = float(np.sqrt(cov * (1.0 - cov) / len(good)))
        else:
            cov = full = length = se = float("nan")
        report.stats[method] = MethodStats(
            coverage=cov, mean_length=length, mc_se=se,
            failures=failures, successes=len(good), full_coverage=full,
        )
    return report


def select_block_exponent(scenario: Scenario, grid=PILOT_GAMMA_GRID,
                          pilot_reps: int = 200, alpha: float | None = None) -> float:
    """Pilot choice of the subsampling exponent gamma.

    Replays ``pilot_reps`` fresh samples from the scenario's true model
    for every gamma on the grid (the same pilot samples across gammas)
    and returns the gamma whose empirical coverage of the true split is
    closest to nominal, preferring the smaller gamma on ties.
    """
    if scenario.subsample is None:
        raise ConfigError("scenario carries no subsample spec")
    alpha = scenario.alpha if alpha is None else alpha
    samples = [
        generate_sample(scenario.n, scenario.error_model,
                        [scenario.seed, 7919, r])
        for r in range(pilot_reps)
    ]
    best_gamma, best_gap = None, np.inf
    for gamma in grid:
        covered = 0
        used = 0
        for r, sample in enumerate(samples):
            spec = SubsampleSpec(
                gamma=gamma,
                n_subsamples=scenario.subsample.n_subsamples,
                seed=_derived_seed(scenario.subsample.seed, 7919, r),
            )
            try:
                cs = subsample_ci(sample, spec, alpha, min_side=scenario.min_side)
            except SplitsetError:
                continue
            lo, hi = cs.longest_component
            covered += lo <= SPLIT_TRUE <= hi
            used += 1
        if used == 0:
            continue
        gap = abs(covered / used - (1.0 - alpha))
        if gap < best_gap:
            best_gamma, best_gap = float(gamma), gap
    if best_gamma is None:
        raise ConfigError("no gamma on the grid produced a usable block size")
    return best_gamma


def reproduce_table(scenarios, nuisance_estimator=None, tables=(None, None)):
    """Run a list of scenarios and flatten the reports into rows.

    One row per scenario and method, ready for TSV serialization.
    """
    rows = []
    for i, scenario in enumerate(scenarios):
        report = run_coverage_experiment(scenario, nuisance_estimator, tables)
        for method in scenario.methods:
            st = report.stats[method]
            rows.append({
                "scenario": i,
                "n": scenario.n,
                "error_model": scenario.error_model,
                "reps": scenario.reps,
                "nuisance_mode": scenario.nuisance_mode,
                "alpha": scenario.alpha,
                "method": method,
                "coverage": st.coverage,
                "mean_length": st.mean_length,
                "mc_se": st.mc_se,
                "failures": st.failures,
                "successes": st.successes,
                "full_coverage": st.full_coverage,
            })
    return rows


_TABLE_COLUMNS = (
    "scenario", "n", "error_model", "reps", "nuisance_mode", "alpha",
    "method", "coverage", "mean_length", "mc_se", "failures", "successes",
    "full_coverage",
)


def coverage_table_tsv(rows) -> str:
    """Serialize reproduce_table rows as TSV with a fixed header."""
    lines = ["\t".join(_TABLE_COLUMNS)]
    for row in rows:
        lines.append("\t".join(repr(row[c]) if isinstance(row[c], float)
                               else str(row[c]) for c in _TABLE_COLUMNS))
    return "\n".join(lines) + "\n"


def scenario_from_dict(obj: dict) -> Scenario:
    """Build a Scenario from parsed configuration, rejecting unknown keys."""
    if not isinstance(obj, dict):
        raise ConfigError("scenario must be an object")
    unknown = set(obj) - _SCENARIO_KEYS
    if unknown:
        raise ConfigError("unknown scenario key(s): %s" % ", ".join(sorted(unknown)))
    for key in ("n", "reps", "error_model", "methods"):
        if key not in obj:
            raise ConfigError("scenario is missing required key %r" % key)
    sub = None
    if obj.get("subsample") is not None:
        sdict = obj["subsample"]
        if not isinstance(sdict, dict):
            raise ConfigError("subsample must be an object")
        unknown = set(sdict) - _SUBSAMPLE_KEYS
        if unknown:
            raise ConfigError("unknown subsample key(s): %s" % ", ".join(sorted(unknown)))
        try:
            sub = SubsampleSpec(**{k: sdict[k] for k in sdict})
        except (TypeError, ValueError) as exc:
            raise ConfigError("bad subsample spec: %s" % exc) from None
    try:
        return Scenario(
            n=int(obj["n"]),
            reps=int(obj["reps"]),
            error_model=obj["error_model"],
            methods=tuple(obj["methods"]),
            alpha=float(obj.get("alpha", 0.05)),
            nuisance_mode=obj.get("nuisance_mode", "true_values"),
            seed=int(obj.get("seed", 0)),
            min_side=int(obj.get("min_side", 1)),
            subsample=sub,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError("bad scenario value: %s" % exc) from None


def load_scenarios(path) -> list:
    """Read one scenario object or an array of them from a JSON file."""
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise ConfigError("cannot open %s: %s" % (path, exc)) from None
    with fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("invalid scenario file: %s" % exc) from None
    if isinstance(payload, dict):
        payload = [payload]
    if not isinstance(payload, list) or not payload:
        raise ConfigError("scenario file must hold an object or a nonempty array")
    return [scenario_from_dict(item) for item in payload]
