"""Weight sequences, ensembles, and their first two weight moments.

An ensemble couples a single-part series f with a weight b_k >= 0 per part
size k; the induced measure on partitions is proportional to the product of
per-size factors, and at inverse-temperature-like tilt x in (0, rho) the
size-k count R_k has probability generating function f(x^k e^s)^{b_k} /
f(x^k)^{b_k}, independently over k. The total weight N = sum k R_k then has

    E_x N   = sum_k k   b_k (x^k h(x^k))
    Var_x N = sum_k k^2 b_k (x^k h(x^k) + x^{2k} h'(x^k)),   h = f'/f.

Regularity of the cumulative weights B_k = sum_{j<=k} b_j (growth like
theta * k^beta) is what the asymptotic layer relies on; the two condition
checks at the bottom of this module probe it: a resonance/density check used
by the local-limit machinery, and a power-law-remainder fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError, FitUnstable, ParamError, RegimeError
from .series import Number, SeriesFunction, _as_exact

_BLOCK = 4096
_STOP_REL = 1e-14


# ---------------------------------------------------------------------------
# part-size index sets


class PartSet:
    """A set of part sizes, used by indicator weight rules.

    Built from "evens"/"odds", a modulus with residues, an explicit finite
    collection, or a predicate callable. Supplies scalar membership, a
    vectorized mask, and a natural-density estimate.
    """

    def __init__(self, label: str, contains: Callable[[int], bool],
                 mask: Callable[[np.ndarray], np.ndarray],
                 density: float | None, finite: bool):
        self.label = label
        self._contains = contains
        self._mask = mask
        self.density = density
        self.finite = finite

    @classmethod
    def from_spec(cls, spec) -> "PartSet":
        if isinstance(spec, PartSet):
            return spec
        if isinstance(spec, str):
            name = spec.lower()
            if name == "evens":
                return cls.modular(2, (0,), label="evens")
            if name == "odds":
                return cls.modular(2, (1,), label="odds")
            raise ParamError(f"unknown part set name {spec!r}")
        if isinstance(spec, dict):
            if "modulus" not in spec or "residues" not in spec:
                raise ParamError("part set dict needs 'modulus' and 'residues'")
            return cls.modular(int(spec["modulus"]),
                               tuple(int(r) for r in spec["residues"]))
        if callable(spec):
            return cls.predicate(spec)
        return cls.explicit(spec)

    @classmethod
    def modular(cls, modulus: int, residues: Sequence[int],
                label: str | None = None) -> "PartSet":
        if modulus < 1 or not residues:
            raise ParamError("modular part set needs modulus >= 1 and residues")
        rs = sorted({r % modulus for r in residues})
        rset = frozenset(rs)
        lbl = label or f"mod {modulus} residues {rs}"
        rarr = np.array(rs)
        return cls(lbl,
                   lambda k: (k % modulus) in rset,
                   lambda ks: np.isin(ks % modulus, rarr),
                   len(rs) / modulus, finite=False)

    @classmethod
    def explicit(cls, members: Iterable[int]) -> "PartSet":
        mset = frozenset(int(k) for k in members)
        if not mset or min(mset) < 1:
            raise ParamError("explicit part set needs members >= 1")
        marr = np.array(sorted(mset))
        return cls(f"set of {len(mset)}",
                   lambda k: k in mset,
                   lambda ks: np.isin(ks, marr),
                   0.0, finite=True)

    @classmethod
    def predicate(cls, fn: Callable[[int], bool]) -> "PartSet":
        def mask(ks: np.ndarray) -> np.ndarray:
            return np.fromiter((bool(fn(int(k))) for k in ks), bool, len(ks))
        return cls("predicate", lambda k: bool(fn(k)), mask, None, finite=False)

    def estimated_density(self, k_max: int = 1 << 14) -> float:
        if self.density is not None:
            return self.density
        ks = np.arange(1, k_max + 1)
        return float(self._mask(ks).mean())

    def __contains__(self, k: int) -> bool:
        return self._contains(int(k))

    def mask(self, ks: np.ndarray) -> np.ndarray:
        return self._mask(ks)

    def __repr__(self):
        return f"PartSet({self.label})"


# ---------------------------------------------------------------------------
# weight sequences


class WeightSequence:
    """b_k >= 0 per part size, one of a few closed rules.

    Rules:
      constant            b_k = 1
      indicator(S)        b_k = 1 when k in S else 0
      power_law(theta, beta)   b_k = theta*(k^beta - (k-1)^beta); B_k = theta*k^beta
      monomial(c, p)      b_k = c * k^p
      explicit(values)    finite list, zero beyond the end

    A scale factor multiplies every b_k (the f**b_1 normalization trade uses
    it). beta/theta describe B_k ~ theta * k^beta and may be declared
    explicitly; otherwise they follow from the rule (or a log-log fit for
    explicit lists, which may fail).
    """

    def __init__(self, rule: str, *, part_set: PartSet | None = None,
                 theta: Number = 1, beta: Number = 1,
                 coeff: Number = 1, power: Number = 0,
                 values: Sequence[Number] | None = None,
                 scale: Number = 1,
                 declared_beta: float | None = None,
                 declared_theta: float | None = None,
                 declared_zeta: float | None = None,
                 declared_chi: float | None = None):
        if rule not in ("constant", "indicator", "power_law", "monomial",
                        "explicit"):
            raise ParamError(f"unknown weight rule {rule!r}")
        if declared_chi is not None and not (0 < declared_chi < 1):
            raise ParamError("declared_chi must lie in (0, 1)")
        self.rule = rule
        self.part_set = part_set
        self.theta_param = theta
        self.beta_param = beta
        self.coeff = coeff
        self.power = power
        self.scale = scale
        self.declared_beta = declared_beta
        self.declared_theta = declared_theta
        self.declared_zeta = declared_zeta
        self.declared_chi = declared_chi
        if rule == "indicator" and part_set is None:
            raise ParamError("indicator rule needs a part set")
        if rule == "power_law" and not (theta > 0 and beta > 0):
            raise ParamError("power_law needs theta > 0 and beta > 0")
        if rule == "monomial" and not (coeff > 0):
            raise ParamError("monomial needs a positive coefficient")
        if rule == "explicit":
            if not values:
                raise ParamError("explicit rule needs a nonempty value list")
            if any(v < 0 for v in values):
                raise ParamError("weights must be nonnegative")
        self._values = list(values) if values is not None else None
        self._prefix_cache: np.ndarray | None = None

    # -- construction helpers ---------------------------------------------

    def __repr__(self):
        extra = {
            "constant": "",
            "indicator": f"({self.part_set!r})",
            "power_law": f"(theta={self.theta_param}, beta={self.beta_param})",
            "monomial": f"({self.coeff}*k^{self.power})",
            "explicit": f"({len(self._values or [])} values)",
        }[self.rule]
        s = "" if self.scale == 1 else f", scale={self.scale}"
        return f"WeightSequence({self.rule}{extra}{s})"

    def scaled(self, factor: Number) -> "WeightSequence":
        w = WeightSequence.__new__(WeightSequence)
        w.__dict__.update(self.__dict__)
        w.scale = self.scale * factor
        w._prefix_cache = None
        return w

    # -- values ------------------------------------------------------------

    @property
    def finite_support(self) -> bool:
        if self.rule == "explicit":
            return True
        if self.rule == "indicator":
            return self.part_set.finite
        return False

    @property
    def support_end(self) -> int | None:
        """Largest k with b_k possibly nonzero, None when unbounded."""
        if self.rule == "explicit":
            return len(self._values)
        return None

    def value(self, k: int) -> float:
        return float(self.values(np.array([k]))[0])

    def values(self, ks: np.ndarray) -> np.ndarray:
        ks = np.asarray(ks, dtype=np.int64)
        s = float(self.scale)
        if self.rule == "constant":
            out = np.ones(len(ks))
        elif self.rule == "indicator":
            out = self.part_set.mask(ks).astype(float)
        elif self.rule == "power_law":
            th, be = float(self.theta_param), float(self.beta_param)
            kf = ks.astype(float)
            out = th * (kf ** be - (kf - 1.0) ** be)
        elif self.rule == "monomial":
            out = float(self.coeff) * ks.astype(float) ** float(self.power)
        else:
            vals = np.zeros(len(ks))
            inside = ks <= len(self._values)
            vals[inside] = np.array(
                [float(self._values[k - 1]) for k in ks[inside]])
            out = vals
        return out * s if s != 1.0 else out

    def exact_value(self, k: int) -> Fraction | None:
        """b_k as an exact rational, None when not exactly representable."""
        se = _as_exact(self.scale)
        if se is None:
            return None
        if self.rule == "constant":
            v: Fraction | None = Fraction(1)
        elif self.rule == "indicator":
            v = Fraction(1 if k in self.part_set else 0)
        elif self.rule == "power_law":
            th, be = _as_exact(self.theta_param), _as_exact(self.beta_param)
            if th is None or be is None or be.denominator != 1:
                return None
            b = be.numerator
            v = th * (Fraction(k) ** b - Fraction(k - 1) ** b)
        elif self.rule == "monomial":
            c, p = _as_exact(self.coeff), _as_exact(self.power)
            if c is None or p is None or p.denominator != 1 or p < 0:
                return None
            v = c * Fraction(k) ** p.numerator
        else:
            raw = self._values[k - 1] if k <= len(self._values) else 0
            v = _as_exact(raw)
            if v is None:
                return None
        return v * se

    @property
    def is_rational(self) -> bool:
        return self.exact_value(1) is not None and self.exact_value(2) is not None

    @property
    def b_1(self) -> float:
        return self.value(1)

    # -- cumulative sums ---------------------------------------------------

    def prefix_sum(self, k: int) -> float:
        """B_k = sum_{j<=k} b_j."""
        if k <= 0:
            return 0.0
        s = float(self.scale)
        if self.rule == "constant":
            return s * k
        if self.rule == "power_law":
            return s * float(self.theta_param) * float(k) ** float(self.beta_param)
        return float(self._prefix_array(k)[k]) * 1.0

    def _prefix_array(self, k_max: int) -> np.ndarray:
        """Cached [B_0, B_1, ..., B_k] for rules without a closed form."""
        if self._prefix_cache is not None and len(self._prefix_cache) > k_max:
            return self._prefix_cache
        have = 0 if self._prefix_cache is None else len(self._prefix_cache)
        n = max(k_max + 1, 2 * have, 1024)
        ks = np.arange(1, n)
        vals = self.values(ks)
        self._prefix_cache = np.concatenate(([0.0], np.cumsum(vals)))
        return self._prefix_cache

    def prefix_sums(self, ks: np.ndarray) -> np.ndarray:
        ks = np.asarray(ks, dtype=np.int64)
        s = float(self.scale)
        if self.rule == "constant":
            return s * ks.astype(float)
        if self.rule == "power_law":
            return s * float(self.theta_param) * ks.astype(float) ** float(self.beta_param)
        arr = self._prefix_array(int(ks.max()))
        return arr[ks]

    def block_sum_upper(self, lo: int, hi: int) -> float:
        """Upper bound for sum_{lo < k <= hi} b_k, safe for huge indices.

        Tail-certification loops need block totals at geometrically
        growing indices; this never allocates an index-length array.
        """
        if hi <= lo:
            return 0.0
        s = float(self.scale)
        if self.rule in ("constant", "indicator"):
            return s * (hi - lo)
        if self.rule == "power_law":
            th, be = float(self.theta_param), float(self.beta_param)
            return s * th * (float(hi) ** be - float(lo) ** be)
        if self.rule == "monomial":
            p = float(self.power)
            edge = float(hi) if p >= 0 else float(max(lo, 1))
            return s * float(self.coeff) * (hi - lo) * edge ** p
        end = self.support_end
        lo2, hi2 = min(lo, end), min(hi, end)
        if hi2 <= lo2:
            return 0.0
        return float(self.prefix_sum(hi2) - self.prefix_sum(lo2))

    def block_max_upper(self, lo: int, hi: int) -> float:
        """Upper bound for max_{lo < k <= hi} b_k, safe for huge indices.

        Pairing a block maximum with the closed geometric sum of x^k over
        the block gives a far tighter tail certificate than count times
        head when x is close to 1.
        """
        if hi <= lo:
            return 0.0
        s = float(self.scale)
        if self.rule in ("constant", "indicator"):
            return s
        if self.rule == "power_law":
            # increments theta*(k^beta - (k-1)^beta) = theta*beta*xi^(beta-1)
            # for some xi in (k-1, k), monotone in the block
            th, be = float(self.theta_param), float(self.beta_param)
            if be < 1.0:
                if lo < 1:
                    return s * th  # b_1 = theta dominates every later one
                return s * th * be * float(lo) ** (be - 1.0)
            return s * th * be * float(hi) ** (be - 1.0)
        if self.rule == "monomial":
            p = float(self.power)
            edge = float(hi) if p >= 0 else float(max(lo, 1))
            return s * float(self.coeff) * edge ** p
        # explicit lists terminate; the block total also bounds the maximum
        return self.block_sum_upper(lo, hi)

    # -- growth description ------------------------------------------------

    @property
    def beta(self) -> float | None:
        """Growth exponent of B_k, declared or implied by the rule."""
        if self.declared_beta is not None:
            return self.declared_beta
        if self.rule in ("constant", "indicator"):
            return None if self.finite_support else 1.0
        if self.rule == "power_law":
            return float(self.beta_param)
        if self.rule == "monomial":
            p = float(self.power)
            return p + 1.0 if p > -1.0 else None
        return None  # explicit: no rule-implied growth

    @property
    def theta(self) -> float | None:
        """Constant in B_k ~ theta * k^beta, declared or implied."""
        s = float(self.scale)
        if self.declared_theta is not None:
            return self.declared_theta
        if self.rule == "constant":
            return s
        if self.rule == "indicator":
            if self.finite_support:
                return None
            return s * self.part_set.estimated_density()
        if self.rule == "power_law":
            return s * float(self.theta_param)
        if self.rule == "monomial":
            p = float(self.power)
            return s * float(self.coeff) / (p + 1.0) if p > -1.0 else None
        return None


def constant_weights() -> WeightSequence:
    return WeightSequence("constant")


def indicator_weights(part_set) -> WeightSequence:
    return WeightSequence("indicator", part_set=PartSet.from_spec(part_set))


def power_law_weights(theta: Number, beta: Number) -> WeightSequence:
    return WeightSequence("power_law", theta=theta, beta=beta)


def monomial_weights(coeff: Number, power: Number) -> WeightSequence:
    return WeightSequence("monomial", coeff=coeff, power=power)


def explicit_weights(values: Sequence[Number],
                     declared_beta: float | None = None,
                     declared_theta: float | None = None,
                     declared_zeta: float | None = None,
                     declared_chi: float | None = None) -> WeightSequence:
    return WeightSequence("explicit", values=list(values),
                          declared_beta=declared_beta,
                          declared_theta=declared_theta,
                          declared_zeta=declared_zeta,
                          declared_chi=declared_chi)


# ---------------------------------------------------------------------------
# regimes


class Regime(Enum):
    """Grand-canonical phase of an ensemble.

    ERGODIC_SUPERCRITICAL: rho_1 > 1 — f finite past the unit disc; the
    tilt can approach 1 and a limit shape exists.
    ERGODIC_POLE_AT_ONE: rho_1 = 1 with a pole there; shape integrals pick
    up the singular factor but stay convergent.
    NONERGODIC_GRAND_CANONICAL: rho_1 < 1 with a pole — the scaled diagram
    does not concentrate under the tilted measure (a single macroscopic
    part condenses); fixed-weight conditioning is still well defined.
    ESSENTIAL_SUBCRITICAL: rho_1 < 1, essential singularity; concentration
    may or may not hold, the asymptotic layer declines to certify it.
    OUT_OF_SCOPE: the cumulative-weight growth hypotheses fail (bounded
    support, exponent <= 0, no weight on part size 1, or an unclassifiable
    singularity).
    """

    ERGODIC_SUPERCRITICAL = "ErgodicSupercritical"
    ERGODIC_POLE_AT_ONE = "ErgodicPoleAtOne"
    NONERGODIC_GRAND_CANONICAL = "NonergodicGrandCanonical"
    ESSENTIAL_SUBCRITICAL = "EssentialSubcritical"
    OUT_OF_SCOPE = "OutOfScope"

    def __str__(self):
        return self.value

    @property
    def ergodic(self) -> bool:
        return self in (Regime.ERGODIC_SUPERCRITICAL,
                        Regime.ERGODIC_POLE_AT_ONE)


class Ensemble:
    """A single-part series plus a weight sequence.

    All numeric operations work on the representation as given; b_1 = 1
    normalization (replace f by f**b_1 and divide the weights by b_1, which
    leaves the measure unchanged) is available through normalized() and is
    applied by the catalog where a family is conventionally presented
    unnormalized.
    """

    def __init__(self, series: SeriesFunction, weights: WeightSequence,
                 label: str = ""):
        self.series = series
        self.weights = weights
        self.label = label or f"{series.kind}+{weights.rule}"
        self._memo: dict = {}

    def __repr__(self):
        return f"Ensemble({self.label})"

    # -- structural properties --------------------------------------------

    @property
    def rho1(self) -> float:
        return self.series.radius

    @property
    def rho(self) -> float:
        """Right end of the tilt domain: min(1, rho_1)."""
        return min(1.0, self.series.radius)

    @property
    def beta(self) -> float | None:
        return self.weights.beta

    @property
    def theta(self) -> float | None:
        return self.weights.theta

    @property
    def regime(self) -> Regime:
        if "regime" not in self._memo:
            self._memo["regime"] = classify_regime(self)
        return self._memo["regime"]

    @property
    def is_rational(self) -> bool:
        """True when coefficients and weights admit exact arithmetic."""
        return self.series.is_rational and self.weights.is_rational

    def normalized(self) -> "Ensemble":
        """Equivalent ensemble with b_1 = 1 (the f**b_1 trade)."""
        b1 = self.weights.b_1
        if b1 == 1.0:
            return self
        if b1 <= 0:
            raise RegimeError(
                "b_1 = 0: no normalization trade exists (part size 1 carries "
                "no weight)")
        exact = self.weights.exact_value(1)
        factor = exact if exact is not None else b1
        return Ensemble(self.series ** factor,
                        self.weights.scaled(1 / factor if exact is None
                                            else Fraction(1, 1) / factor),
                        label=self.label + " (normalized)")

    # -- moments -----------------------------------------------------------

    def _check_x(self, x: float) -> None:
        if not (0.0 <= x < self.rho):
            raise DomainError(
                f"tilt x={x} outside [0, {self.rho}) for this ensemble")

    def _moment_sum(self, x: float, power: int, k_min: int = 1,
                    variance: bool = False) -> float:
        """sum_{k>=k_min} k^power b_k x^k h(x^k) (+ variance correction)."""
        if x == 0.0:
            return 0.0
        total = 0.0
        start = k_min
        log_x = math.log(x)
        end_support = self.weights.support_end
        while True:
            ks = np.arange(start, start + _BLOCK, dtype=np.int64)
            bk = self.weights.values(ks)
            xk = np.exp(ks * log_x)
            h, hp = self.series.h_vector(xk)
            if variance:
                terms = ks.astype(float) ** power * bk * (xk * h + xk * xk * hp)
            else:
                terms = ks.astype(float) ** power * bk * xk * h
            total += float(terms.sum())
            start += _BLOCK
            if end_support is not None and start > end_support:
                break
            last = float(terms[-1])
            if xk[-1] < 0.5 and (last < _STOP_REL * max(total, 1e-300)):
                break
            if start > 10 ** 9:
                raise DomainError("moment sum failed to terminate")
        return total

    def mean_N(self, x: float) -> float:
        """Expected total weight at tilt x."""
        self._check_x(x)
        return self._moment_sum(x, power=1)

    def var_N(self, x: float) -> float:
        """Variance of the total weight at tilt x."""
        self._check_x(x)
        return self._moment_sum(x, power=2, variance=True)

    def mean_counts_tail(self, x: float, k_min: int) -> float:
        """sum_{k>=k_min} E_x R_k, the expected number of parts above k_min."""
        self._check_x(x)
        return self._moment_sum(x, power=0, k_min=max(1, k_min))


def classify_regime(e: Ensemble) -> Regime:
    """Place an ensemble in the grand-canonical phase diagram.

    Driven by rho_1 and the singularity descriptor of f together with the
    growth exponent of B_k. Unbounded B_k with positive exponent is required;
    otherwise the asymptotic layer's hypotheses all fail and the tag is
    OUT_OF_SCOPE.
    """
    w = e.weights
    if w.finite_support:
        return Regime.OUT_OF_SCOPE
    if w.b_1 <= 0:
        # No weight on part size 1: the b_1 = 1 renormalization does not
        # exist and the support misses some weights entirely.
        return Regime.OUT_OF_SCOPE
    beta = w.beta
    if beta is None and w.rule == "explicit":
        # closed rules report their growth (or its absence) exactly; only
        # opaque lists warrant a fit
        beta = _fitted_beta(w)
    if beta is None or beta <= 0.05:
        return Regime.OUT_OF_SCOPE
    rho1 = e.series.radius
    sing = e.series.singularity
    if rho1 > 1.0:
        return Regime.ERGODIC_SUPERCRITICAL
    if rho1 == 1.0:
        return (Regime.ERGODIC_POLE_AT_ONE if sing.is_pole
                else Regime.OUT_OF_SCOPE)
    if sing.is_pole:
        return Regime.NONERGODIC_GRAND_CANONICAL
    if sing.kind == "essential":
        return Regime.ESSENTIAL_SUBCRITICAL
    return Regime.OUT_OF_SCOPE


def _fitted_beta(w: WeightSequence, k_max: int = 1 << 14) -> float | None:
    ks = np.unique(np.geomspace(8, k_max, 24).astype(np.int64))
    if w.support_end is not None:
        ks = ks[ks <= w.support_end]
    if len(ks) < 3:
        return None
    B = w.prefix_sums(ks)
    good = B > 0
    if good.sum() < 3:
        return None
    slope, _ = np.polyfit(np.log(ks[good]), np.log(B[good]), 1)
    return float(slope)


# ---------------------------------------------------------------------------
# regularity conditions


@dataclass
class Condition10Report:
    """Resonant-mass check.

    For each stride s, K_s is the set of sizes within 1/2 of a multiple of
    s; the statistic is the worst over k <= k_max of the fraction of B_k
    carried by K_s. Small uniformly over s is what the local-limit argument
    needs; a value of 1.0 at some s means the weights live entirely on a
    lattice and the check fails for every chi < 1.
    """

    k_max: int
    per_s: dict
    worst_ratio: float
    worst_s: float

    def satisfied(self, chi: float) -> bool:
        if not (0 < chi < 1):
            raise ParamError("chi must lie in (0, 1)")
        return self.worst_ratio <= chi


def resonant_mask(s: float, ks: np.ndarray) -> np.ndarray:
    """True where some multiple of s lies within 1/2 of k."""
    j = np.maximum(np.rint(ks / s), 1.0)
    return np.abs(ks - s * j) < 0.5


def check_condition_10(w: WeightSequence, s_values: Iterable[float] = range(2, 11),
                       k_max: int = 10_000) -> Condition10Report:
    ks = np.arange(1, k_max + 1, dtype=np.int64)
    b = w.values(ks)
    B = np.cumsum(b)
    ok = B > 0
    per_s: dict = {}
    worst, worst_s = 0.0, None
    for s in s_values:
        mask = resonant_mask(float(s), ks)
        resonant = np.cumsum(np.where(mask, b, 0.0))
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(ok, resonant / np.maximum(B, 1e-300), 0.0)
        i = int(np.argmax(ratio))
        per_s[float(s)] = {"worst_ratio": float(ratio[i]), "at_k": int(ks[i])}
        if ratio[i] > worst:
            worst, worst_s = float(ratio[i]), float(s)
    return Condition10Report(k_max=k_max, per_s=per_s,
                             worst_ratio=worst, worst_s=worst_s)


@dataclass
class Condition11Report:
    """Power-law remainder fit for B_k = theta * k^beta + O(k^(beta-zeta))."""

    theta_fit: float
    beta_fit: float
    remainder_exponent: float | None
    exact_compliance: bool
    out_of_scope: bool
    points: int

    def compatible(self, zeta: float, slack: float = 0.1) -> bool:
        if self.exact_compliance:
            return True
        if self.remainder_exponent is None:
            return False
        return self.remainder_exponent <= self.beta_fit - zeta + slack


def check_condition_11(w: WeightSequence, k_max: int = 1 << 16,
                       theta: float | None = None,
                       beta: float | None = None) -> Condition11Report:
    """Fit B_k growth and its remainder on a dyadic grid.

    theta/beta default to the declared/rule-implied values; when absent they
    are fitted from the top decades. An identically-zero remainder reports
    exact compliance. Raises FitUnstable when there is not enough usable
    signal to fit anything.
    """
    ks = np.unique(np.geomspace(8, k_max, 40).astype(np.int64))
    if w.support_end is not None:
        ks = ks[ks <= w.support_end]
    if len(ks) < 4:
        raise FitUnstable("too few usable k values to fit B_k growth")
    B = w.prefix_sums(ks)
    good = B > 0
    if good.sum() < 4:
        raise FitUnstable("B_k vanishes on the fit grid")
    lk, lB = np.log(ks[good]), np.log(B[good])
    top = lk >= lk.max() - math.log(16)
    slope, inter = np.polyfit(lk[top], lB[top], 1)
    beta_fit = beta if beta is not None else (w.beta or float(slope))
    theta_fit = theta if theta is not None else (w.theta or float(math.exp(inter)))
    out = beta_fit is None or beta_fit <= 0.05 or float(slope) <= 0.05

    r = B - theta_fit * ks.astype(float) ** beta_fit
    nz = np.abs(r) > 1e-9 * np.maximum(B, 1.0)
    if not nz.any():
        return Condition11Report(theta_fit=float(theta_fit),
                                 beta_fit=float(beta_fit),
                                 remainder_exponent=None,
                                 exact_compliance=True,
                                 out_of_scope=bool(out), points=len(ks))
    if nz.sum() < 3:
        raise FitUnstable("remainder is nonzero at fewer than 3 grid points")
    rexp, _ = np.polyfit(np.log(ks[nz]), np.log(np.abs(r[nz])), 1)
    return Condition11Report(theta_fit=float(theta_fit), beta_fit=float(beta_fit),
                             remainder_exponent=float(rexp),
                             exact_compliance=False,
                             out_of_scope=bool(out), points=len(ks))
