"""Single-part generating functions and their powers.

A multiplicative partition measure is assembled from one power series

    f(z) = sum_{j>=0} g_j z^j,   g_0 = 1,  g_j >= 0,

whose value at z = x^k controls how many parts of size k appear. Everything
downstream needs three views of f:

* coefficients g_j (exact rationals whenever the inputs are rational),
* the logarithmic derivative h = f'/f with its first two derivatives,
  evaluated inside the disc of convergence,
* coefficients of powers f**b, which give the count law for one part size
  when the weight attached to that size is b.

The radius of convergence rho_1 and a descriptor of the singularity on the
positive axis (a pole of known order, an essential singularity, or nothing
within reach) are part of the type: the regime classification and the
tail integrals read them directly.

Truncated evaluation of user-supplied coefficient series is only trusted up
to 0.999*rho_1; nearer the singularity the closed-form kinds must be used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence, Union

import numpy as np

from .errors import DomainError, NegativeCoefficientError, ParamError

Number = Union[int, float, Fraction]

# Evaluation of a truncated coefficient series is refused beyond this
# fraction of the radius: the geometric tail bound degenerates there.
EVAL_RADIUS_FRACTION = 0.999
_REL_TOL = 1e-16
_MAX_TERMS = 10 ** 6


def _as_exact(value: Number) -> Fraction | None:
    """Return value as a Fraction when it is exactly representable."""
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, float) and value == int(value):
        return Fraction(int(value))
    return None


def _maybe_int(q: Fraction) -> int | Fraction:
    return q.numerator if q.denominator == 1 else q


@dataclass(frozen=True)
class Singularity:
    """Nature of f on the positive axis at rho_1.

    kind is "pole" (order may be any positive real: powers of a simple pole
    produce non-integer orders), "essential", or "none" (entire functions,
    or polynomials whose radius is infinite).
    """

    kind: str
    order: float | None = None

    def __post_init__(self):
        if self.kind not in ("pole", "essential", "none"):
            raise ParamError(f"unknown singularity kind {self.kind!r}")
        if self.kind == "pole":
            if self.order is None or self.order <= 0:
                raise ParamError("pole singularity needs a positive order")
        elif self.order is not None:
            raise ParamError(f"{self.kind} singularity takes no order")

    @property
    def is_pole(self) -> bool:
        return self.kind == "pole"


class SeriesFunction:
    """Base class: a power series with nonnegative coefficients, g_0 = 1."""

    kind = "abstract"
    radius: float = math.inf
    singularity: Singularity = Singularity("none")

    # True when evaluation is by truncated summation and therefore refused
    # near the radius; quadrature code switches to a series-free treatment
    # of the affected integration range.
    truncated_eval = False

    # -- coefficients ------------------------------------------------------

    def coefficient(self, j: int) -> float:
        raise NotImplementedError

    def exact_coefficient(self, j: int) -> Fraction | None:
        """g_j as an exact rational, or None when not representable."""
        return None

    @property
    def is_rational(self) -> bool:
        return self.exact_coefficient(1) is not None

    # -- evaluation --------------------------------------------------------

    def eval_with_derivatives(self, u: float) -> tuple[float, float, float, float]:
        """Return (f(u), h(u), h'(u), h''(u)) with h = f'/f.

        u must lie in [0, rho_1); truncated kinds additionally require
        u < 0.999*rho_1.
        """
        raise NotImplementedError

    def log_eval_bundle(self, v: float) -> tuple[float, float, float]:
        """(h, h', h'') at u = exp(-v), computed stably for small v.

        Closed-form kinds override this so that quadrature integrands keep
        full relative precision as u -> 1.
        """
        return self.eval_with_derivatives(math.exp(-v))[1:]

    def h_vector(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized (h(u), h'(u)) for moment sums. Default: scalar loop."""
        h = np.empty_like(u)
        hp = np.empty_like(u)
        for i, ui in enumerate(u):
            _, h[i], hp[i], _ = self.eval_with_derivatives(float(ui))
        return h, hp

    def log_value(self, u: float) -> float:
        """ln f(u), stable when f(u) is near 1 or very large."""
        return math.log(self.eval_with_derivatives(u)[0])

    def _check_domain(self, u: float, truncated: bool) -> None:
        if u < 0:
            raise DomainError(f"series evaluated at negative point u={u}")
        if u >= self.radius:
            raise DomainError(
                f"series evaluated at u={u} outside its disc (radius {self.radius})")
        if truncated and u > EVAL_RADIUS_FRACTION * self.radius:
            raise DomainError(
                f"truncated series evaluation refused at u={u}: beyond "
                f"{EVAL_RADIUS_FRACTION} of the radius {self.radius}; use a "
                "closed-form kind near the singularity")

    # -- powers and rescaling ----------------------------------------------

    def __pow__(self, exponent: Number) -> "SeriesFunction":
        if _as_exact(exponent) == 1:
            return self
        return PowerSeriesFunction(self, exponent)

    def tilted(self, scale: float) -> "SeriesFunction":
        """The series z -> f(scale * z).

        Folding a tilt into the series before extracting coefficients keeps
        every intermediate bounded; extracting raw g_j first and scaling
        afterwards overflows as soon as the g_j grow geometrically.
        """
        raise NotImplementedError


class GeometricSeries(SeriesFunction):
    """f(z) = 1/(1 - y z): each extra copy of a part multiplies mass by y.

    Simple pole at rho_1 = 1/y; g_j = y^j.
    """

    kind = "geometric"

    def __init__(self, weight: Number = 1):
        if not (weight > 0):
            raise ParamError(f"geometric weight must be positive, got {weight}")
        self.weight = weight
        self._y = float(weight)
        self._exact_y = _as_exact(weight)
        self.radius = 1.0 / self._y
        self.singularity = Singularity("pole", 1.0)

    def __repr__(self):
        return f"GeometricSeries(weight={self.weight})"

    def coefficient(self, j: int) -> float:
        return self._y ** j

    def exact_coefficient(self, j: int) -> Fraction | None:
        if self._exact_y is None:
            return None
        return self._exact_y ** j

    def eval_with_derivatives(self, u):
        self._check_domain(u, truncated=False)
        y = self._y
        d = 1.0 - y * u
        f = 1.0 / d
        h = y / d
        return f, h, y * h / d, 2.0 * y * y * h / (d * d)

    def log_eval_bundle(self, v):
        y = self._y
        if y == 1.0:
            d = -math.expm1(-v)          # 1 - e^{-v} at full relative precision
        else:
            d = 1.0 - y * math.exp(-v)
        if d <= 0.0:
            raise DomainError(f"log-scale evaluation at v={v} outside the disc")
        h = y / d
        return h, y * h / d, 2.0 * y * y * h / (d * d)

    def h_vector(self, u):
        d = 1.0 - self._y * u
        h = self._y / d
        return h, self._y * h / d

    def log_value(self, u):
        self._check_domain(u, truncated=False)
        return -math.log1p(-self._y * u)

    def tilted(self, scale: float) -> "GeometricSeries":
        if not (scale > 0):
            raise ParamError(f"tilt scale must be positive, got {scale}")
        return GeometricSeries(self.weight * scale)


class ExponentialSeries(SeriesFunction):
    """f(z) = exp(c z): entire, h identically c. g_j = c^j / j!."""

    kind = "exponential"

    def __init__(self, rate: Number = 1):
        if not (rate > 0):
            raise ParamError(f"exponential rate must be positive, got {rate}")
        self.rate = rate
        self._c = float(rate)
        self._exact_c = _as_exact(rate)
        self.radius = math.inf
        self.singularity = Singularity("none")

    def __repr__(self):
        return f"ExponentialSeries(rate={self.rate})"

    def coefficient(self, j: int) -> float:
        return self._c ** j / math.factorial(j)

    def exact_coefficient(self, j: int) -> Fraction | None:
        if self._exact_c is None:
            return None
        return self._exact_c ** j / Fraction(math.factorial(j))

    def eval_with_derivatives(self, u):
        self._check_domain(u, truncated=False)
        return math.exp(self._c * u), self._c, 0.0, 0.0

    def log_eval_bundle(self, v):
        return self._c, 0.0, 0.0

    def h_vector(self, u):
        return np.full_like(u, self._c), np.zeros_like(u)

    def log_value(self, u):
        self._check_domain(u, truncated=False)
        return self._c * u

    def __pow__(self, exponent: Number) -> "SeriesFunction":
        # exp(cz)^b = exp(cb z): stay in closed form so downstream fast
        # paths (Poisson sampling, constant h) survive normalization trades.
        if _as_exact(exponent) == 1:
            return self
        if not (exponent > 0):
            raise ParamError(f"series exponent must be positive, got {exponent}")
        return ExponentialSeries(self.rate * exponent)

    def tilted(self, scale: float) -> "ExponentialSeries":
        if not (scale > 0):
            raise ParamError(f"tilt scale must be positive, got {scale}")
        return ExponentialSeries(self.rate * scale)


class CustomSeries(SeriesFunction):
    """A series given by its coefficients, with declared radius/singularity.

    coefficients may be a finite sequence (a polynomial: zero beyond the end)
    or a callable j -> g_j. The declared radius and singularity are trusted;
    they are how downstream code classifies the ensemble.
    """

    kind = "custom"

    def __init__(self, coefficients: Sequence[Number] | Callable[[int], Number],
                 radius: float = math.inf,
                 singularity: Singularity = Singularity("none")):
        if callable(coefficients):
            self._fn = coefficients
            self._seq = None
            if not (radius > 0):
                raise ParamError("callable coefficients need a positive radius")
        else:
            self._seq = list(coefficients)
            self._fn = None
            if not self._seq or self._seq[0] != 1:
                raise ParamError("coefficient sequence must start with g_0 = 1")
            if any(g < 0 for g in self._seq):
                raise ParamError("coefficients must be nonnegative")
        if self._fn is not None and self._fn(0) != 1:
            raise ParamError("coefficient rule must give g_0 = 1")
        # g_1 > 0 keeps single-part partitions in the support (a_1 > 0).
        if not (self.coefficient(1) > 0):
            raise ParamError("coefficient g_1 must be positive")
        self.radius = float(radius)
        self.singularity = singularity

    def __repr__(self):
        src = "rule" if self._fn is not None else f"{len(self._seq)} coefficients"
        return f"CustomSeries({src}, radius={self.radius})"

    @property
    def _is_polynomial(self) -> bool:
        return self._seq is not None

    @property
    def truncated_eval(self) -> bool:
        return not self._is_polynomial

    def coefficient(self, j: int) -> float:
        if self._seq is not None:
            return float(self._seq[j]) if j < len(self._seq) else 0.0
        return float(self._fn(j))

    def exact_coefficient(self, j: int) -> Fraction | None:
        if self._seq is not None:
            g = self._seq[j] if j < len(self._seq) else 0
        else:
            g = self._fn(j)
        return _as_exact(g)

    def eval_with_derivatives(self, u):
        # Polynomials are exact anywhere; genuine series are truncated and
        # refuse evaluation too close to the declared radius.
        self._check_domain(u, truncated=not self._is_polynomial)
        f = 1.0
        d1 = d2 = d3 = 0.0
        term = 1.0
        j = 0
        limit = len(self._seq) - 1 if self._seq is not None else _MAX_TERMS
        while j < limit:
            j += 1
            g = self.coefficient(j)
            uj = u ** j
            t = g * uj
            f += t
            if u > 0:
                d1 += j * t / u
                d2 += j * (j - 1) * g * u ** (j - 2) if j >= 2 else 0.0
                d3 += j * (j - 1) * (j - 2) * g * u ** (j - 3) if j >= 3 else 0.0
            elif j == 1:
                d1 += g
            elif j == 2:
                d2 += 2 * g
            elif j == 3:
                d3 += 6 * g
            term = abs(t)
            if self._seq is None and j > 8 and term < _REL_TOL * f:
                break
        if self._seq is None and j >= _MAX_TERMS:
            raise DomainError("coefficient series did not converge numerically")
        h = d1 / f
        hp = d2 / f - h * h
        hpp = d3 / f - 3.0 * (d2 / f) * h + 2.0 * h ** 3
        return f, h, hp, hpp

    def tilted(self, scale: float) -> "CustomSeries":
        if not (scale > 0):
            raise ParamError(f"tilt scale must be positive, got {scale}")
        if self._seq is not None:
            scaled = []
            p = 1.0
            for g in self._seq:
                scaled.append(g * p)
                p *= scale
            return CustomSeries(scaled, radius=self.radius / scale,
                                singularity=self.singularity)
        fn = self._fn
        return CustomSeries(lambda j: fn(j) * scale ** j,
                            radius=self.radius / scale,
                            singularity=self.singularity)


class PowerSeriesFunction(SeriesFunction):
    """f**b for a positive real exponent b.

    The logarithmic derivative scales linearly (h_{f^b} = b*h_f), the radius
    is unchanged, and a pole of order m becomes one of order b*m. Coefficients
    come from the power-of-series recurrence on demand.
    """

    kind = "power"

    def __init__(self, base: SeriesFunction, exponent: Number):
        if not (exponent > 0):
            raise ParamError(f"series exponent must be positive, got {exponent}")
        self.base = base
        self.exponent = exponent
        self._b = float(exponent)
        self.radius = base.radius
        s = base.singularity
        if s.is_pole:
            self.singularity = Singularity("pole", s.order * self._b)
        else:
            self.singularity = s
        self._cache: list = []

    def __repr__(self):
        return f"({self.base!r}) ** {self.exponent}"

    @property
    def truncated_eval(self) -> bool:
        return self.base.truncated_eval

    def _extend(self, j: int) -> None:
        if len(self._cache) > j:
            return
        need = max(j, 2 * len(self._cache), 16)
        self._cache = power_coefficients(self.base, self.exponent, need)

    def coefficient(self, j: int) -> float:
        self._extend(j)
        return float(self._cache[j])

    def exact_coefficient(self, j: int) -> Fraction | None:
        if _as_exact(self.exponent) is None or not self.base.is_rational:
            return None
        self._extend(j)
        return Fraction(self._cache[j])

    def eval_with_derivatives(self, u):
        f, h, hp, hpp = self.base.eval_with_derivatives(u)
        return f ** self._b, self._b * h, self._b * hp, self._b * hpp

    def log_eval_bundle(self, v):
        h, hp, hpp = self.base.log_eval_bundle(v)
        return self._b * h, self._b * hp, self._b * hpp

    def h_vector(self, u):
        h, hp = self.base.h_vector(u)
        return self._b * h, self._b * hp

    def log_value(self, u):
        return self._b * self.base.log_value(u)

    def tilted(self, scale: float) -> "SeriesFunction":
        return PowerSeriesFunction(self.base.tilted(scale), self.exponent)


def power_coefficients(f: SeriesFunction, b: Number, j_max: int) -> list:
    """First j_max+1 coefficients of f(z)**b via the power-of-series recurrence.

    With f = sum g_i z^i, g_0 = 1, the coefficients c_j of f**b satisfy

        j*c_j = sum_{i=1..j} (i*(b+1) - j) * g_i * c_{j-i},  c_0 = 1,

    which needs one pass and no polynomial products. Arithmetic is exact
    (Fraction/int) when b and all g_i are rational, double precision
    otherwise.

    Raises NegativeCoefficientError when a genuinely negative coefficient
    appears: f**b is then not an admissible count generating function.
    """
    if j_max < 0:
        raise ParamError("j_max must be >= 0")
    if not (b >= 0):
        raise ParamError(f"power exponent must be nonnegative, got {b}")
    if b == 0:
        # f**0 = 1 regardless of f
        return [1] + [0] * j_max

    b_exact = _as_exact(b)
    exact = b_exact is not None and f.is_rational
    if exact:
        g = [f.exact_coefficient(i) for i in range(j_max + 1)]
        bq = b_exact
        c: list = [Fraction(1)]
        for j in range(1, j_max + 1):
            acc = Fraction(0)
            for i in range(1, j + 1):
                gi = g[i]
                if gi:
                    acc += (i * (bq + 1) - j) * gi * c[j - i]
            cj = acc / j
            if cj < 0:
                raise NegativeCoefficientError(
                    f"coefficient {j} of f**{b} is negative: {cj}")
            c.append(cj)
        return [_maybe_int(q) for q in c]

    gf = [f.coefficient(i) for i in range(j_max + 1)]
    bf = float(b)
    cf = [1.0]
    scale = 1.0
    for j in range(1, j_max + 1):
        acc = 0.0
        for i in range(1, j + 1):
            gi = gf[i]
            if gi:
                acc += (i * (bf + 1.0) - j) * gi * cf[j - i]
        cj = acc / j
        scale = max(scale, abs(cj))
        if cj < -1e-9 * scale:
            raise NegativeCoefficientError(
                f"coefficient {j} of f**{b} is negative: {cj}")
        cf.append(max(cj, 0.0))
    return cf
