"""Grid simulation of the drifted Brownian limit and its quantile tables.

The split estimator converges, after cube root scaling, to the argmax
of Q(t) = a W(t) - b t**2 with W a two-sided standard Brownian motion.
Rescaling reduces everything to the standardized process
Q1(t) = W(t) - t**2, so only two distributions are ever tabulated: the
argmax of Q1 (Chernoff's distribution) and the maximum of Q1.  Both are
simulated on a symmetric grid and shipped as embedded tables.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass

import numpy as np

from .errors import LevelOutOfRange, ParseError

CHERNOFF_ARGMAX = "chernoff_argmax"
MAXQ1 = "maxq1"
_KNOWN_DISTS = (CHERNOFF_ARGMAX, MAXQ1)

# Replications per RNG stream; streams derive from (seed, batch index),
# so results are reproducible and independent of scheduling.
_BATCH_ROWS = 512

DEFAULT_SEED = 1031
DEFAULT_LEVELS = np.arange(1, 1000) / 1000.0


@dataclass(frozen=True)
class ProcessSpec:
    """Grid simulation plan for Q(t) = a W(t) - b t**2 on [-T, T].

    The window must satisfy T >= 3 * (a/b)**(2/3) so the argmax is
    inside with overwhelming probability, the step h <= T / 1000, and
    at least 10**4 replications are required.
    """

    a: float = 1.0
    b: float = 1.0
    half_width: float = 3.0
    step: float = 5e-4
    replications: int = 200_000
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError("a and b must be positive")
        scale = (self.a / self.b) ** (2.0 / 3.0)
        if self.half_width < 3.0 * scale:
            raise ValueError(
                "half_width %g too small, need >= %g" % (self.half_width, 3.0 * scale)
            )
        if self.step > self.half_width / 1000.0:
            raise ValueError("step must be <= half_width / 1000")
        if self.replications < 10_000:
            raise ValueError("need at least 10**4 replications")


def simulate_argmax_max(spec: ProcessSpec):
    """Simulate the argmax location and the maximum of Q per replication.

    Brownian increments of variance h are drawn per side and cumulated,
    with W(0) = 0 pinned.  Grid ties (measure zero in theory, possible
    in floats) resolve to the smallest |t| and then to the negative
    side.

    Returns
    -------
    argmax : ndarray
        Location of the maximum, one entry per replication.
    maxima : ndarray
        Maximum value of Q, one entry per replication.
    """
    steps = int(round(spec.half_width / spec.step))
    h = spec.step
    tpos = np.arange(1, steps + 1) * h
    drift = spec.b * tpos * tpos
    grid = np.concatenate((-tpos[::-1], [0.0], tpos))
    # tie key: prefer small |t|, negative side before positive
    offset = np.abs(np.arange(grid.size) - steps)
    tie_key = (2 * offset + (np.arange(grid.size) > steps)).astype(np.float64)

    R = spec.replications
    argmax = np.empty(R)
    maxima = np.empty(R)
    sqrt_h = np.sqrt(h)
    for batch, lo in enumerate(range(0, R, _BATCH_ROWS)):
        rows = min(_BATCH_ROWS, R - lo)
        rng = np.random.default_rng([spec.seed, batch])
        wpos = np.cumsum(rng.standard_normal((rows, steps)), axis=1) * sqrt_h
        wneg = np.cumsum(rng.standard_normal((rows, steps)), axis=1) * sqrt_h
        q = np.empty((rows, grid.size))
        q[:, steps + 1:] = spec.a * wpos - drift
        q[:, steps] = 0.0
        q[:, :steps] = (spec.a * wneg - drift)[:, ::-1]
        mx = q.max(axis=1)
        tied = np.where(q == mx[:, None], tie_key[None, :], np.inf)
        argmax[lo:lo + rows] = grid[np.argmin(tied, axis=1)]
        maxima[lo:lo + rows] = mx
    return argmax, maxima


@dataclass(frozen=True)
class QuantileTable:
    """Monotone level -> quantile map for one of the two limit laws."""

    dist: str
    levels: np.ndarray
    quantiles: np.ndarray
    provenance: dict

    def __post_init__(self):
        if self.dist not in _KNOWN_DISTS:
            raise ValueError("unknown dist %r" % self.dist)
        levels = np.asarray(self.levels, dtype=np.float64)
        quants = np.asarray(self.quantiles, dtype=np.float64)
        if levels.ndim != 1 or levels.shape != quants.shape or levels.size < 2:
            raise ValueError("levels and quantiles must be matching 1-d arrays")
        if np.any(levels <= 0) or np.any(levels >= 1) or np.any(np.diff(levels) <= 0):
            raise ValueError("levels must be strictly increasing inside (0, 1)")
        if np.any(np.diff(quants) < 0):
            raise ValueError("quantiles must be nondecreasing")
        levels.setflags(write=False)
        quants.setflags(write=False)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "quantiles", quants)


def build_table(samples, levels, dist: str, provenance: dict) -> QuantileTable:
    """Tabulate empirical quantiles of simulated draws at the given levels."""
    levels = np.asarray(levels, dtype=np.float64)
    quants = np.quantile(np.asarray(samples, dtype=np.float64), levels)
    return QuantileTable(dist=dist, levels=levels, quantiles=quants,
                         provenance=dict(provenance))


def generate_tables(spec: ProcessSpec | None = None, levels=DEFAULT_LEVELS):
    """Simulate once and tabulate both limit laws.

    Returns the (argmax table, max table) pair; the provenance records
    the simulation parameters.
    """
    spec = spec or ProcessSpec()
    if not (spec.a == 1.0 and spec.b == 1.0):
        raise ValueError("tables are standardized; simulate with a = b = 1")
    argmax, maxima = simulate_argmax_max(spec)
    prov = {
        "kind": "simulated",
        "seed": spec.seed,
        "reps": spec.replications,
        "T": spec.half_width,
        "h": spec.step,
    }
    return (
        build_table(argmax, levels, CHERNOFF_ARGMAX, prov),
        build_table(maxima, levels, MAXQ1, prov),
    )


def quantile_at(table: QuantileTable, level: float) -> float:
    """Interpolated quantile at a probability level inside the table range."""
    lo, hi = table.levels[0], table.levels[-1]
    if not (lo <= level <= hi):
        raise LevelOutOfRange(
            "level %g outside tabulated range [%g, %g]" % (level, lo, hi)
        )
    return float(np.interp(level, table.levels, table.quantiles))


def chernoff_quantile(alpha_half: float, table: QuantileTable | None = None) -> float:
    """Upper alpha_half quantile of the argmax of W(t) - t**2."""
    table = table if table is not None else load_embedded_table(CHERNOFF_ARGMAX)
    if table.dist != CHERNOFF_ARGMAX:
        raise ValueError("table holds %r, not the argmax law" % table.dist)
    return quantile_at(table, 1.0 - alpha_half)


def maxq1_quantile(alpha: float, table: QuantileTable | None = None) -> float:
    """Upper alpha quantile of the maximum of W(t) - t**2."""
    table = table if table is not None else load_embedded_table(MAXQ1)
    if table.dist != MAXQ1:
        raise ValueError("table holds %r, not the max law" % table.dist)
    return quantile_at(table, 1.0 - alpha)


def format_table(table: QuantileTable) -> str:
    """Serialize as a provenance comment, a header line, and TSV rows."""
    prov = " ".join("%s=%s" % (k, table.provenance[k]) for k in sorted(table.provenance))
    lines = ["# dist=%s %s" % (table.dist, prov), "level\tquantile"]
    for lev, q in zip(table.levels, table.quantiles):
        lines.append("%s\t%s" % (repr(float(lev)), repr(float(q))))
    return "\n".join(lines) + "\n"


def parse_table(text: str) -> QuantileTable:
    """Inverse of :func:`format_table`; raises ParseError on bad rows."""
    dist = None
    provenance = {}
    levels, quants = [], []
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            for token in line[1:].split():
                if "=" not in token:
                    continue
                key, val = token.split("=", 1)
                if key == "dist":
                    dist = val
                else:
                    provenance[key] = val
            continue
        if not header_seen:
            if line.split("\t") != ["level", "quantile"]:
                raise ParseError("line %d: expected header 'level\\tquantile'" % lineno)
            header_seen = True
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError("line %d: expected two tab-separated fields" % lineno)
        try:
            levels.append(float(parts[0]))
            quants.append(float(parts[1]))
        except ValueError:
            raise ParseError("line %d: non-numeric entry %r" % (lineno, line)) from None
    if dist is None or not header_seen or not levels:
        raise ParseError("table is missing its dist comment, header, or rows")
    return QuantileTable(dist=dist, levels=np.array(levels),
                         quantiles=np.array(quants), provenance=provenance)


def write_table(table: QuantileTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_table(table))


def read_table(path) -> QuantileTable:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_table(fh.read())


_EMBEDDED_CACHE: dict = {}


def load_embedded_table(dist: str) -> QuantileTable:
    """Load a packaged quantile table; provenance kind becomes 'embedded'."""
    if dist not in _KNOWN_DISTS:
        raise ValueError("unknown dist %r" % dist)
    if dist not in _EMBEDDED_CACHE:
        resource = importlib.resources.files("splitset") / "_tables" / (dist + ".tsv")
        table = parse_table(resource.read_text(encoding="utf-8"))
        prov = dict(table.provenance)
        prov["kind"] = "embedded"
        _EMBEDDED_CACHE[dist] = QuantileTable(
            dist=table.dist, levels=table.levels, quantiles=table.quantiles,
            provenance=prov,
        )
    return _EMBEDDED_CACHE[dist]
