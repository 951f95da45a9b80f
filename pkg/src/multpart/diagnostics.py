"""Diagram functionals and Monte Carlo probes of ensemble behavior.

The rescaled upper boundary of a random partition's Young diagram either
settles onto a deterministic curve (ergodic regimes) or refuses to: a
macroscopic part condenses and moment ratios betray it. This module
measures both sides: concentration experiments against the computed
limit shape, a variance-ratio probe for the condensation regime, and a
statistic tracking how much weight escapes part size one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .asymptotics import limit_shape, solve_tilt
from .ensemble import Ensemble, Regime
from .errors import ParamError, RegimeError
from .partition_function import CoefficientTable, coefficients
from .sampler import Partition, sample_small_many

__all__ = [
    "ConcentrationReport",
    "DegenerateShapeReport",
    "VarianceRatioResult",
    "concentration_experiment",
    "degenerate_shape_probe",
    "large_part_mass",
    "scaled_diagram",
    "variance_ratio_probe",
    "young_function",
    "young_integral",
]

DEFAULT_EPSILON = 0.05
DEFAULT_GRID = tuple(0.25 * i for i in range(1, 13))


# ---------------------------------------------------------------------------
# diagram functionals


def young_function(p: Partition, t: float) -> int:
    """Number of parts strictly exceeding t.

    This is the height of the Young diagram's boundary over position t:
    nonincreasing, integer-valued, constant on [j, j+1) for integer j.
    """
    return sum(r for k, r in p.counts.items() if k > t)


def young_integral(p: Partition) -> int:
    """Integral of the diagram function over [0, inf), exactly.

    Computed from the step structure (suffix part-counts times gap
    lengths), deliberately not as the cached weight, so the sum-of-parts
    identity integral == n is a genuine cross-check on sampled output.
    """
    sizes = sorted(p.counts)
    above = sum(p.counts.values())
    total = 0
    prev = 0
    for k in sizes:
        total += (k - prev) * above
        above -= p.counts[k]
        prev = k
    return total


def scaled_diagram(p: Partition, alpha: float, normalizer: float,
                   grid) -> list[float]:
    """Rescaled diagram heights (alpha/normalizer) * #parts > alpha*t."""
    if not (alpha > 0) or not (normalizer > 0):
        raise ParamError("scaled_diagram needs alpha > 0 and normalizer > 0")
    factor = alpha / normalizer
    return [factor * young_function(p, alpha * float(t)) for t in grid]


# ---------------------------------------------------------------------------
# concentration against the limit shape


@dataclass(frozen=True)
class ConcentrationReport:
    """Outcome of a fixed-weight concentration experiment.

    hit_fractions[i] is the share of replicas whose rescaled diagram sits
    within epsilon of the limit shape at grid[i]; sup_distances lists the
    per-replica worst deviation over the grid, in replica-stream order.
    steep_points are grid entries where the shape moves more than
    epsilon/4 per grid step, so a miss there says more about
    discretization than about concentration.
    """

    n: int
    replicas: int
    grid: tuple[float, ...]
    epsilon: float
    hit_fractions: tuple[float, ...]
    sup_distances: tuple[float, ...]
    seed: int
    alpha: float
    shape_values: tuple[float, ...]
    steep_points: tuple[float, ...]
    mode: str

    def sup_quantile(self, q: float) -> float:
        return float(np.quantile(np.array(self.sup_distances), q))

    @property
    def sup_quantiles(self) -> dict[str, float]:
        return {f"q{int(100 * q):02d}": self.sup_quantile(q)
                for q in (0.10, 0.25, 0.50, 0.75, 0.90)}

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "replicas": self.replicas,
            "grid": list(self.grid),
            "epsilon": self.epsilon,
            "hit_fractions": list(self.hit_fractions),
            "sup_distances": list(self.sup_distances),
            "sup_quantiles": self.sup_quantiles,
            "seed": self.seed,
            "alpha": self.alpha,
            "shape_values": list(self.shape_values),
            "steep_points": list(self.steep_points),
            "mode": self.mode,
        }

    def write_sup_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("replica,sup_distance\n")
            for i, d in enumerate(self.sup_distances):
                fh.write(f"{i},{d:.17g}\n")


def _local_spacing(grid: tuple[float, ...]) -> list[float]:
    if len(grid) < 2:
        return [0.0] * len(grid)
    out = []
    for i, t in enumerate(grid):
        gaps = []
        if i > 0:
            gaps.append(t - grid[i - 1])
        if i + 1 < len(grid):
            gaps.append(grid[i + 1] - t)
        out.append(max(gaps))
    return out


def _shape_slope(e: Ensemble, t: float) -> float:
    h = max(1e-4, 1e-3 * t)
    h = min(h, 0.5 * t) if t > 0 else h
    lo = max(t - h, 1e-9)
    return (limit_shape(e, t + h) - limit_shape(e, lo)) / (t + h - lo)


def concentration_experiment(e: Ensemble, n: int, replicas: int,
                             grid=None, epsilon: float = DEFAULT_EPSILON,
                             seed: int = 0, mode: str = "rejection",
                             budget: int | None = None,
                             table: CoefficientTable | None = None,
                             ) -> ConcentrationReport:
    """Sample `replicas` fixed-weight partitions and compare each rescaled
    diagram with the limit shape on the grid.

    Replica i draws on stream i, so the report is reproducible from
    (ensemble, n, replicas, seed) and unchanged under any parallel
    execution order. Raises RegimeError outside the ergodic regimes,
    where no limit shape exists to compare against.
    """
    if not e.regime.ergodic:
        raise RegimeError(
            f"concentration experiment needs an ergodic ensemble; "
            f"{e.label or 'ensemble'} is {e.regime}")
    if replicas < 1:
        raise ParamError("need at least one replica")
    if not (epsilon > 0):
        raise ParamError("epsilon must be positive")
    grid = tuple(float(t) for t in (DEFAULT_GRID if grid is None else grid))
    if not grid or any(t <= 0 for t in grid):
        raise ParamError("grid must be nonempty with positive t values")

    alpha = solve_tilt(e, n).alpha
    shape = tuple(limit_shape(e, t) for t in grid)
    steep = tuple(
        t for t, spacing in zip(grid, _local_spacing(grid))
        if spacing > 0 and abs(_shape_slope(e, t)) * spacing >= epsilon / 4.0)

    parts = sample_small_many(e, n, replicas, seed, mode=mode,
                              budget=budget, table=table)
    hits = np.zeros(len(grid))
    sups = []
    for p in parts:
        assert young_integral(p) == n
        dev = np.abs(np.array(scaled_diagram(p, alpha, float(n), grid))
                     - np.array(shape))
        hits += dev < epsilon
        sups.append(float(dev.max()))

    return ConcentrationReport(
        n=n, replicas=replicas, grid=grid, epsilon=epsilon,
        hit_fractions=tuple(float(h) / replicas for h in hits),
        sup_distances=tuple(sups), seed=seed, alpha=alpha,
        shape_values=shape, steep_points=steep, mode=mode)


# ---------------------------------------------------------------------------
# nonergodicity probes


@dataclass(frozen=True)
class VarianceRatioResult:
    """Second-moment ratio E N^2 / (E N)^2 along a tilt grid.

    In the condensation regime the ratio tends to (m+1)/m with m the
    effective pole order, instead of to 1; `flagged` records whether
    ratio - 1 stayed above 0.5 on the whole grid.
    """

    points: tuple[tuple[float, float], ...]
    limit: float
    flagged: bool

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)


def variance_ratio_probe(e: Ensemble, x_grid) -> VarianceRatioResult:
    """Ratio of second moment to squared mean of N at each grid tilt.

    Only meaningful where a pole sits inside the unit disc; elsewhere the
    ratio tends to 1 and RegimeError is raised to prevent misreading.
    """
    if e.regime is not Regime.NONERGODIC_GRAND_CANONICAL:
        raise RegimeError(
            f"variance ratio probe expects NonergodicGrandCanonical; "
            f"{e.label or 'ensemble'} is {e.regime}")
    pts = []
    for x in x_grid:
        x = float(x)
        mean = e.mean_N(x)
        if mean <= 0.0:
            raise ParamError(f"mean weight vanishes at x={x}")
        ratio = (e.var_N(x) + mean * mean) / (mean * mean)
        pts.append((x, ratio))
    order = e.series.singularity.order or 1.0
    m = float(order) * float(e.weights.b_1)
    flagged = bool(pts) and min(r for _, r in pts) - 1.0 > 0.5
    return VarianceRatioResult(points=tuple(pts), limit=(m + 1.0) / m,
                               flagged=flagged)


def large_part_mass(p: Partition) -> float:
    """Fraction of total weight carried by parts of size at least 2."""
    if p.weight <= 0:
        raise ParamError("statistic undefined for the empty partition")
    return sum(k * r for k, r in p.counts.items() if k >= 2) / p.weight


@dataclass(frozen=True)
class DegenerateShapeReport:
    """Distribution summary of the large-part mass fraction.

    Under fixed-weight conditioning with a pole inside the unit disc the
    fraction should vanish as n grows (the diagram degenerates to a unit
    square of 1-parts). conjectural is True when some part sizes carry
    zero or vanishing weight: the degeneration is then expected but not
    guaranteed, and the numbers are exploratory.
    """

    n: int
    replicas: int
    seed: int
    mean: float
    quantiles: dict[str, float]
    values: tuple[float, ...]
    conjectural: bool

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "replicas": self.replicas,
            "seed": self.seed,
            "mean": self.mean,
            "quantiles": self.quantiles,
            "values": list(self.values),
            "conjectural": self.conjectural,
        }


def _weights_bounded_below(e: Ensemble) -> bool:
    """True when inf_k b_k > 0 can be read off the weight rule."""
    w = e.weights
    if w.rule == "constant":
        return True
    if w.rule == "power_law":
        return float(w.beta_param) >= 1.0
    if w.rule == "monomial":
        return float(w.power) >= 0.0
    return False  # indicator and explicit rules have zeros or an end


def degenerate_shape_probe(e: Ensemble, n: int, replicas: int, seed: int = 0,
                           table: CoefficientTable | None = None,
                           ) -> DegenerateShapeReport:
    """Exact-sampler survey of the large-part mass fraction at weight n."""
    if e.regime is not Regime.NONERGODIC_GRAND_CANONICAL:
        raise RegimeError(
            f"degenerate shape probe expects NonergodicGrandCanonical; "
            f"{e.label or 'ensemble'} is {e.regime}")
    if replicas < 1:
        raise ParamError("need at least one replica")
    if table is None:
        table = coefficients(e, n, keep_prefix=True)
    parts = sample_small_many(e, n, replicas, seed, mode="exact", table=table)
    vals = np.array([large_part_mass(p) for p in parts])
    qs = {f"q{int(100 * q):02d}": float(np.quantile(vals, q))
          for q in (0.25, 0.50, 0.75, 0.90)}
    return DegenerateShapeReport(
        n=n, replicas=replicas, seed=seed, mean=float(vals.mean()),
        quantiles=qs, values=tuple(float(v) for v in vals),
        conjectural=not _weights_bounded_below(e))
