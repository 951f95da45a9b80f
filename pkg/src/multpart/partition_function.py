"""Taylor coefficients of the weighted-count product and their point masses.

The normalizing function F(x) = prod_k f(x^k)^{b_k} = sum_n a_n x^n is
handled two ways that check each other:

* coefficient route: a_0..a_N built factor by factor, exactly (big
  integers / rationals) whenever the ensemble data are rational, in
  extended-precision floats otherwise;
* product route: log F(x) summed directly from the factors with a
  certified truncation bound.

Point masses a_m x^m / F(x) combine the two and feed the local-limit
probe, which compares sqrt(Var) * mass against the Gaussian density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .ensemble import Ensemble
from .errors import ConvergenceError, ParamError, RegimeError, TableError, TruncationError
from .series import GeometricSeries, power_coefficients

__all__ = [
    "CoefficientTable",
    "coefficients",
    "log_partition_value",
    "local_limit_probe",
    "partition_numbers",
    "point_mass",
    "product_tail_cutoff",
]

PREFIX_CAP = 5000
PRODUCT_TAIL_TOL = 1e-12
TABLE_TAIL_TOL = 1e-6
# factor coefficients below this relative size are dropped from the
# tilted prefix convolutions (and, consistently, from the exact sampler)
FACTOR_WEIGHT_CUT = 1e-20


def partition_numbers(n_max: int) -> list[int]:
    """p(0..n_max) by the pentagonal-number recurrence, exact.

    Independent of the factor-convolution engine; used as its oracle.
    """
    if n_max < 0:
        raise ParamError("n_max must be >= 0")
    p = [0] * (n_max + 1)
    p[0] = 1
    for n in range(1, n_max + 1):
        total = 0
        j = 1
        while True:
            g1 = j * (3 * j - 1) // 2
            if g1 > n:
                break
            sign = 1 if j % 2 else -1
            total += sign * p[n - g1]
            g2 = j * (3 * j + 1) // 2
            if g2 <= n:
                total += sign * p[n - g2]
            j += 1
        p[n] = total
    return p


# ---------------------------------------------------------------------------
# product route: log F with certified truncation


def _weighted_geometric_tail(e: Ensemble, x: float, k_from: int) -> float:
    """Upper bound for sum_{k > k_from} b_k x^k, by doubling blocks.

    Each block takes the smaller of (block total)*x^(lo+1) and
    (block max)*sum of x^k over the block; the second wins when x is
    close to 1 and the in-block geometric decay matters.
    """
    w = e.weights
    total = 0.0
    lo = k_from
    while True:
        head = x ** (lo + 1)
        if head == 0.0 or lo > 1 << 50:
            return total
        hi = 2 * lo
        geo_sum = (head - x ** (hi + 1)) / (1.0 - x)
        total += min(w.block_sum_upper(lo, hi) * head,
                     w.block_max_upper(lo, hi) * geo_sum)
        if w.support_end is not None and hi >= w.support_end:
            return total
        lo = hi


def product_tail_cutoff(e: Ensemble, x: float, tol: float = PRODUCT_TAIL_TOL) -> int:
    """Smallest tested K with sum_{k>K} b_k log f(x^k) provably below tol.

    Uses f(u) - 1 <= u * (f(x^K) - 1) / x^K for u <= x^K (the coefficient
    series has nonnegative terms), so the neglected factors change log F
    by less than tol.
    """
    if not (0.0 <= x < e.rho):
        raise ParamError(f"x={x} outside [0, {e.rho})")
    if x == 0.0:
        return 1
    end = e.weights.support_end
    if end is not None:
        return end
    k = 16
    while True:
        u = x ** k
        if u == 0.0:
            return k
        f_u = e.series.eval_with_derivatives(u)[0]
        if (f_u - 1.0) / u * _weighted_geometric_tail(e, x, k) < tol:
            return k
        k *= 2
        if k > 1 << 40:
            raise ConvergenceError(
                f"product truncation bound would not close at x={x}")


def log_partition_value(e: Ensemble, x: float,
                        tol: float = PRODUCT_TAIL_TOL) -> float:
    """log F(x) from the product form, truncated with tail below tol.

    tol is absolute on the log, i.e. relative on F itself.
    """
    if x == 0.0:
        return 0.0
    cutoff = product_tail_cutoff(e, x, tol)
    ks = np.arange(1, cutoff + 1)
    bs = e.weights.values(ks)
    series = e.series
    total = 0.0
    for k, b in zip(ks.tolist(), bs.tolist()):
        if b != 0.0:
            total += b * series.log_value(x ** k)
    return total


# ---------------------------------------------------------------------------
# coefficient route


@dataclass(eq=False)
class CoefficientTable:
    """a_0..a_{n_max} plus, optionally, tilted per-prefix rows.

    values holds the coefficients themselves: Python ints/Fractions in an
    object array when exact, extended-precision floats otherwise.

    prefix[k][m] = T_k(m) * x0**m where T_k collects the factors for part
    sizes <= k; rows for inert sizes (b_k = 0) share the previous row's
    array. The tilt x0 keeps every entry in floating range even when the
    raw T_k(m) grow geometrically.
    """

    n_max: int
    values: np.ndarray
    exact: bool
    x0: float = 1.0
    prefix: list[np.ndarray] | None = None
    _factor_w: dict = field(default_factory=dict, repr=False)
    _tail_bounds: dict = field(default_factory=dict, repr=False)

    def coefficient(self, n: int):
        if not 0 <= n <= self.n_max:
            raise ParamError(f"n={n} outside table range 0..{self.n_max}")
        return self.values[n]

    def log_coefficient(self, n: int) -> float:
        """log a_n as a float; -inf when a_n = 0."""
        a = self.coefficient(n)
        if self.exact:
            if a == 0:
                return -math.inf
            if isinstance(a, Fraction):
                return math.log(a.numerator) - math.log(a.denominator)
            return math.log(a)
        if a <= 0.0:
            return -math.inf
        return float(np.log(a))

    def factor_weights(self, k: int) -> np.ndarray:
        """Tilted coefficient row of the part-size-k factor (active sizes only).

        Available when the table was built with keep_prefix; the sampler
        conditionals must use these same arrays the rows were built from.
        """
        try:
            return self._factor_w[k]
        except KeyError:
            raise TableError(
                f"no factor row for k={k}: build the table with keep_prefix "
                "and query only sizes with b_k != 0") from None


def _scan_unit(a: np.ndarray, k: int) -> None:
    """In place a[m] += a[m-k] for ascending m: one 1/(1-x^k) factor.

    The reshape view turns the per-residue running sums into a single
    accumulate call; the ragged tail is one vector add whose sources are
    already final.
    """
    n1 = a.shape[0]
    rows = n1 // k
    if rows > 1:
        body = a[:rows * k].reshape(rows, k)
        np.add.accumulate(body, axis=0, out=body)
    lo = rows * k
    if lo < n1 and k < n1:
        a[lo:] += a[lo - k:n1 - k]


def _scan_weighted(a: np.ndarray, k: int, mult) -> None:
    """In place a[m] += mult * a[m-k], ascending: one 1/(1-mult x^k) factor.

    Doubling passes: after pass t the array holds sums over j < 2^t of
    mult^j shifts, so log2(n/k)+1 vectorized passes finish the scan.
    """
    n1 = a.shape[0]
    step = k
    m = mult
    while step < n1:
        a[step:] = a[step:] + m * a[:-step]
        m = m * m
        step *= 2


def _convolve_stride(a: np.ndarray, k: int, w) -> None:
    """In place a <- a * (sum_j w_j x^{k j}) truncated to the table, w_0 = 1."""
    n1 = a.shape[0]
    prev = a.copy()
    for j in range(1, len(w)):
        off = k * j
        if off >= n1:
            break
        if w[j] != 0:
            a[off:] += w[j] * prev[:n1 - off]


def _exact_factor_exponents(e: Ensemble, n_max: int):
    for k in range(1, n_max + 1):
        b = e.weights.exact_value(k)
        if b is None:
            raise TableError(
                f"weight b_{k} is not exactly representable; use float mode")
        if b != 0:
            yield k, b


def _build_exact(e: Ensemble, n_max: int, generic: bool) -> np.ndarray:
    a = np.empty(n_max + 1, dtype=object)
    a[:] = 0
    a[0] = 1
    series = e.series
    geometric = isinstance(series, GeometricSeries)
    y = series.exact_coefficient(1) if geometric else None
    for k, b in _exact_factor_exponents(e, n_max):
        reps = int(b) if b.denominator == 1 and 1 <= b <= 64 else None
        if not generic and geometric and reps is not None:
            yv = y if y.denominator > 1 else y.numerator
            for _ in range(reps):
                if yv == 1:
                    _scan_unit(a, k)
                else:
                    _scan_weighted(a, k, yv)
        else:
            w = power_coefficients(series, b, n_max // k)
            _convolve_stride(a, k, w)
    return a


def _build_float(e: Ensemble, n_max: int, generic: bool) -> np.ndarray:
    a = np.zeros(n_max + 1, dtype=np.longdouble)
    a[0] = 1.0
    series = e.series
    geometric = isinstance(series, GeometricSeries)
    ks = np.arange(1, n_max + 1)
    bs = e.weights.values(ks)
    for k, b in zip(ks.tolist(), bs.tolist()):
        if b == 0.0:
            continue
        reps = int(round(b)) if abs(b - round(b)) < 1e-12 and 1 <= b <= 64 else None
        if not generic and geometric and reps is not None:
            yv = np.longdouble(series.coefficient(1))
            for _ in range(reps):
                if yv == 1.0:
                    _scan_unit(a, k)
                else:
                    _scan_weighted(a, k, yv)
        else:
            w = np.asarray(power_coefficients(series, b, n_max // k),
                           dtype=np.longdouble)
            _convolve_stride(a, k, w)
    if not np.isfinite(a).all():
        raise TableError(
            "float coefficients overflowed extended precision; "
            "reduce n_max or use a rational ensemble for exact mode")
    return a


def _factor_weights_float(e: Ensemble, k: int, n_max: int, x0: float) -> np.ndarray:
    """Tilted factor coefficients wtilde_j = [z^j] f(z)^{b_k} * x0^{k j}.

    Trailing entries below FACTOR_WEIGHT_CUT of the running maximum are
    dropped; the exact sampler uses these same arrays, so the prefix rows
    and the sampled conditionals stay consistent.
    """
    j_max = n_max // k
    b = e.weights.value(k)
    tilt = x0 ** k
    if tilt == 0.0:
        # underflowed tilt: only the empty occupancy survives
        return np.array([1.0])
    series = e.series if tilt == 1.0 else e.series.tilted(tilt)
    w = np.asarray(power_coefficients(series, b, j_max), dtype=np.float64)
    keep = np.nonzero(w >= FACTOR_WEIGHT_CUT * max(np.max(w), 1.0))[0]
    if keep.size and keep[-1] + 1 < w.size:
        w = w[:keep[-1] + 1]
    return w


def _default_tilt(e: Ensemble, n_max: int) -> float:
    from .asymptotics import solve_tilt

    try:
        return solve_tilt(e, max(n_max, 1)).x_n
    except (ConvergenceError, RegimeError) as exc:
        raise TableError(
            f"no tilt found for prefix rows at n={n_max}; pass x0 "
            f"explicitly ({exc})") from exc


def _build_prefix(e: Ensemble, n_max: int, x0: float):
    rows: list[np.ndarray] = [np.zeros(n_max + 1)]
    rows[0][0] = 1.0
    factor_w: dict[int, np.ndarray] = {}
    cur = rows[0]
    for k in range(1, n_max + 1):
        if e.weights.value(k) == 0.0:
            rows.append(cur)
            continue
        w = _factor_weights_float(e, k, n_max, x0)
        factor_w[k] = w
        nxt = cur.copy()
        for j in range(1, len(w)):
            off = k * j
            if off > n_max:
                break
            nxt[off:] += w[j] * cur[:n_max + 1 - off]
        rows.append(nxt)
        cur = nxt
    if not np.isfinite(cur).all() or cur[n_max] == 0.0 and e.weights.b_1 > 0:
        raise TableError(
            f"prefix rows degenerate at tilt x0={x0}; pass a better x0")
    return rows, factor_w


def coefficients(e: Ensemble, n_max: int, *, mode: str = "auto",
                 keep_prefix: bool = False, x0: float | None = None,
                 generic: bool = False) -> CoefficientTable:
    """Build a_0..a_{n_max} factor by factor.

    mode: "auto" picks exact arithmetic when the ensemble is rational,
    extended floats otherwise; "exact"/"float" force a route. generic=True
    runs every factor through the one-pass power recurrence plus stride
    convolution (the reference path the fast scans must match).

    keep_prefix retains the tilted per-prefix rows for the exact sampler
    (memory grows quadratically: capped at n_max = 5000). x0 overrides the
    tilt, which otherwise solves mean = n_max.
    """
    if n_max < 0:
        raise ParamError("n_max must be >= 0")
    if mode not in ("auto", "exact", "float"):
        raise ParamError(f"unknown mode {mode!r}")
    exact = e.is_rational if mode == "auto" else mode == "exact"
    if exact and not e.is_rational:
        raise ParamError("exact mode needs rational series and weights")

    values = _build_exact(e, n_max, generic) if exact else _build_float(e, n_max, generic)
    if values[0] != 1:
        raise TableError("a_0 != 1: factor normalization broken")
    if exact and e.weights.b_1 > 0 and any(v <= 0 for v in values[1:].tolist()):
        raise TableError("nonpositive coefficient in an ensemble with b_1 > 0")

    prefix = None
    factor_w: dict = {}
    tilt = 1.0
    if keep_prefix:
        if n_max > PREFIX_CAP:
            raise ParamError(
                f"prefix rows capped at n_max={PREFIX_CAP} (quadratic memory)")
        tilt = float(x0) if x0 is not None else _default_tilt(e, n_max)
        if not (0.0 < tilt < e.rho):
            raise ParamError(f"tilt x0={tilt} outside (0, {e.rho})")
        prefix, factor_w = _build_prefix(e, n_max, tilt)

    return CoefficientTable(n_max=n_max, values=values, exact=exact,
                            x0=tilt, prefix=prefix, _factor_w=factor_w)


# ---------------------------------------------------------------------------
# point masses


def _chernoff_tail(e: Ensemble, x: float, n_max: int) -> float:
    """Chernoff bound for mu_x(N > n_max).

    sum_{m>n} a_m x^m <= (x/x')^{n+1} F(x') for any x' in (x, rho); the
    tilt solving mean = n_max + 1 sits at the optimum of that family.
    """
    from .asymptotics import solve_tilt

    try:
        x_prime = solve_tilt(e, n_max + 1).x_n
    except (ConvergenceError, RegimeError):
        x_prime = 0.5 * (x + e.rho)
    if x_prime <= x * (1.0 + 1e-12):
        return math.inf
    log_bound = (log_partition_value(e, x_prime) - log_partition_value(e, x)
                 + (n_max + 1) * (math.log(x) - math.log(x_prime)))
    return math.exp(min(log_bound, 700.0))


def _table_tail_bound(e: Ensemble, table: CoefficientTable, x: float) -> float:
    cached = table._tail_bounds.get(x)
    if cached is None:
        cached = _chernoff_tail(e, x, table.n_max)
        table._tail_bounds[x] = cached
    return cached


def _tail_safe_size(e: Ensemble, x: float, floor_n: int) -> int:
    """Smallest tested n_max whose Chernoff tail clears the gate with margin.

    The bound is computable without the table, so sizing costs only a few
    tilt solves. The bound is loose relative to the true (near-Gaussian)
    tail because the variance grows along the tilt path, hence the
    growth loop rather than a fixed mean + c*sd rule.
    """
    sd = math.sqrt(max(e.var_N(x), 1.0))
    n = max(floor_n, math.ceil(e.mean_N(x) + 6.5 * sd))
    for _ in range(200):
        if _chernoff_tail(e, x, n) < 0.1 * TABLE_TAIL_TOL:
            return n
        n = math.ceil(1.3 * n + sd)
    raise ConvergenceError(
        f"no table size with certified tail below {TABLE_TAIL_TOL} at x={x}")


def point_mass(e: Ensemble, x: float, m: int, table: CoefficientTable | None = None,
               check_tail: bool = True) -> float:
    """mu_x(total size = m) = a_m x^m / F(x).

    With check_tail on (the default), the call certifies that the table
    covers the distribution at this x: the bound on mu_x(N > n_max) must
    stay below 1e-6 or TruncationError is raised. Pass a prebuilt table
    when calling repeatedly; table=None builds one sized for the check.
    """
    if not (0.0 < x < e.rho):
        raise ParamError(f"x={x} outside (0, {e.rho})")
    if m < 0:
        raise ParamError("m must be >= 0")
    if table is None:
        n_auto = _tail_safe_size(e, x, m) if check_tail else m
        table = coefficients(e, n_auto)
    if m > table.n_max:
        raise ParamError(f"m={m} beyond table range 0..{table.n_max}")
    if check_tail and _table_tail_bound(e, table, x) > TABLE_TAIL_TOL:
        raise TruncationError(
            f"table to n_max={table.n_max} misses more than {TABLE_TAIL_TOL} "
            f"of the mass at x={x}; enlarge the table")
    log_a = table.log_coefficient(m)
    if log_a == -math.inf:
        return 0.0
    return math.exp(log_a + m * math.log(x) - log_partition_value(e, x))


def local_limit_probe(e: Ensemble, x: float, u_grid,
                      table: CoefficientTable | None = None) -> list[tuple[float, float]]:
    """(u, sqrt(Var) * mu_x(m(u))) at m(u) = round(mean + u * sd).

    The values approach the Gaussian density exp(-u^2/2)/sqrt(2 pi) as
    x -> rho in the ergodic regimes; exact coefficients make the probe an
    arithmetic-level check of that limit.
    """
    regime = e.regime
    if not regime.ergodic:
        raise RegimeError(
            f"local limit probe needs an ergodic ensemble, got {regime}")
    us = [float(u) for u in u_grid]
    if not us:
        return []
    mean = e.mean_N(x)
    sd = math.sqrt(e.var_N(x))
    if table is None:
        floor_n = math.ceil(mean + max(abs(u) for u in us) * sd) + 1
        table = coefficients(e, _tail_safe_size(e, x, floor_n))
    out = []
    for u in us:
        m = max(int(round(mean + u * sd)), 0)
        out.append((u, sd * point_mass(e, x, m, table)))
    return out
