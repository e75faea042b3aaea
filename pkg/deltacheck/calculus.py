# Copyright (C) 2024 The deltacheck contributors
#
# This file is part of deltacheck.
#
# deltacheck is free software: you can redistribute it and/or modify it under the
# terms of the GNU General Public License as published by the Free Software Foundation,
# either version 3 of the License, or (at your option) any later version.
#
# deltacheck is distributed in the hope that it will be useful, but WITHOUT ANY
# WARRANTY; without even the implied warranty of MERCHANTABILITY or FITNESS FOR A
# PARTICULAR PURPOSE.
# See the GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License along with
# deltacheck. If not, see <https://www.gnu.org/licenses/>.
"""
Delta-calculus on a :py:class:`~deltacheck.timescale.TimeScale`.

Integrals split [from, to] into scattered cells [t, sigma(t)], each contributing
mu(t)*f(t), and maximal dense sub-segments integrated by adaptive Simpson quadrature.
Derivatives are exact difference quotients at right-scattered points and
Richardson-extrapolated one-sided differences at right-dense points.
"""
import functools
import math
import sys
import threading
from enum import unique
from typing import (
    Callable,
    Final,
    Hashable,
    NamedTuple,
    Protocol,
    runtime_checkable,
)

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from deltacheck.timescale import (
    BadBase,
    Segment,
    TimeScale,
    membership_tolerance,
    sigma,
)
from deltacheck.utils.conditional_imports import StrEnum
from deltacheck.utils.ContextLogger import get_logger
from deltacheck.utils.misc import DeltaCheckError

logger = get_logger(__name__)

__all__ = [
    "NotInKappa",
    "NumericalDivergence",
    "QuadratureFailure",
    "KindMismatch",
    "QuadratureConfig",
    "DEFAULT_CONFIG",
    "RealFunction",
    "Differentiable",
    "Vectorized",
    "ScaleFunction",
    "as_scale_function",
    "f_sigma",
    "delta_derivative",
    "delta_derivative_function",
    "delta_integral",
    "simpson",
    "Monomials",
    "get_monomials",
    "monomial_h",
    "ScaleKind",
    "hk_closed_form",
    "hk_quantum_product",
    "h2_closed_form",
    "grid_values",
    "delta_sup_inf",
]


class NotInKappa(DeltaCheckError, ValueError):
    pass


class NumericalDivergence(DeltaCheckError, ArithmeticError):
    pass


class QuadratureFailure(DeltaCheckError, ArithmeticError):
    pass


class KindMismatch(DeltaCheckError, ValueError):
    pass


class QuadratureConfig(BaseModel):
    """Tolerances and limits of every approximate computation."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    abs_tol: float = Field(1e-10, gt=0)
    rel_tol: float = Field(1e-9, gt=0)
    max_depth: int = Field(40, ge=1)
    fd_step: float = Field(1e-6, gt=0)
    dense_samples: int = Field(1024, ge=2)
    symbolic_dense: bool = True
    """Use the classical derivative of a function (if it has one) inside integrands."""


DEFAULT_CONFIG: Final = QuadratureConfig()

RealFunction = Callable[[float], float]


@runtime_checkable
class Differentiable(Protocol):
    def __call__(self, t: float) -> float: ...

    def derivative(self) -> RealFunction: ...


@runtime_checkable
class Vectorized(Protocol):
    """A function that also evaluates a whole array of points in one call."""

    def __call__(self, t: float) -> float: ...

    def on_grid(self, ts: np.ndarray) -> np.ndarray: ...


class ScaleFunction:
    """
    A function on a time scale with a separate rule for dense segments.

    'at_point' is the value at any point of the scale. 'on_dense' agrees with it on
    right-dense points and is what quadrature samples inside a dense segment, so that
    a jump of sigma at the end of a segment never leaks into the quadrature.
    """

    __slots__ = ("at_point", "on_dense")

    def __init__(self, at_point: RealFunction, on_dense: RealFunction | None = None):
        self.at_point = at_point
        self.on_dense = on_dense if on_dense is not None else at_point

    def __call__(self, t: float) -> float:
        return self.at_point(t)

    def __mul__(self, other: "ScaleFunction | RealFunction") -> "ScaleFunction":
        g = as_scale_function(other)
        f_point, f_dense = self.at_point, self.on_dense
        g_point, g_dense = g.at_point, g.on_dense
        return ScaleFunction(
            lambda t: f_point(t) * g_point(t), lambda t: f_dense(t) * g_dense(t)
        )

    __rmul__ = __mul__


def as_scale_function(f: ScaleFunction | RealFunction) -> ScaleFunction:
    return f if isinstance(f, ScaleFunction) else ScaleFunction(f)


def f_sigma(T: TimeScale, f: RealFunction) -> ScaleFunction:
    """t -> f(sigma(t))"""
    return ScaleFunction(lambda t: f(sigma(T, t)), f)


# Ridders tableau for one-sided differences: the error expansion has every power of
# h, so column j removes h^j.
_CON: Final = 2.0
_NTAB: Final = 6
_SAFE: Final = 2.0
# rounding of one tableau entry, in units of eps * scale / step
_NOISE: Final = 2.0
# a settled estimate agrees with its neighbours up to this many rounding units
_SETTLED: Final = 16.0


def _power_of_two_below(x: float) -> float:
    return math.ldexp(1.0, math.frexp(x)[1] - 1)


class _Extrapolation(NamedTuple):
    value: float
    error: float
    step: float
    scale: float

    def noise(self) -> float:
        return _NOISE * sys.float_info.epsilon * self.scale / self.step


def _one_sided_richardson(
    f: RealFunction, t: float, h: float, direction: int
) -> _Extrapolation:
    ft = f(t)

    def quotient(step: float) -> float:
        x = t + direction * step
        if x == t:
            raise NumericalDivergence(f"A step of {step} vanishes next to t={t}")
        # divide by the step actually taken, t + step is rounded
        return (f(x) - ft) / (x - t)

    prev = [quotient(h)]
    scale = max(1.0, abs(ft), abs(prev[0]))
    best = _Extrapolation(prev[0], math.inf, h, scale)
    rank = math.inf
    hh = h
    for i in range(1, _NTAB):
        hh /= _CON
        row = [quotient(hh)]
        noise = _NOISE * sys.float_info.epsilon * scale / hh
        fac = _CON
        for j in range(1, i + 1):
            row.append((row[j - 1] * fac - prev[j - 1]) / (fac - 1.0))
            fac *= _CON
            errt = max(abs(row[j] - row[j - 1]), abs(row[j] - prev[j - 1]))
            # deeper rows only win if they beat the rounding of the coarser ones
            if max(errt, noise) < rank:
                rank = max(errt, noise)
                best = _Extrapolation(row[j], errt, hh, scale)
        if abs(row[i] - prev[i - 1]) >= _SAFE * rank or _CON * noise >= rank:
            break
        prev = row
    return best


def _dense_derivative_fd(
    f: RealFunction, t: float, seg: Segment, cfg: QuadratureConfig
) -> float:
    forward, backward = seg.hi - t, t - seg.lo
    if forward >= cfg.fd_step or forward >= backward:
        direction, room = 1, forward
    else:
        direction, room = -1, backward
    # power-of-two steps keep t + h exact wherever t allows it
    h = _power_of_two_below(min(cfg.fd_step, room))
    estimate = _one_sided_richardson(f, t, h, direction)
    value = estimate.value
    tolerance = max(cfg.rel_tol * estimate.scale, _SETTLED * estimate.noise())
    if not math.isfinite(value) or estimate.error > tolerance:
        raise NumericalDivergence(
            f"Derivative at t={t} did not settle (estimate {value},"
            f" error {estimate.error})"
        )
    return value


def delta_derivative(
    T: TimeScale, f: RealFunction, t: float, cfg: QuadratureConfig = DEFAULT_CONFIG
) -> float:
    """
    The delta-derivative of f at t.

    Raises:
        PointNotInScale: If t is not in T
        NotInKappa: If t is a left-scattered maximum
        NumericalDivergence: If the extrapolation at a right-dense point does not settle
    """
    idx, t = T.locate(t)
    if not T.in_kappa(t):
        raise NotInKappa(f"{t} is a left-scattered maximum of {T.summary()}")
    s = sigma(T, t)
    if s > t:
        return (f(s) - f(t)) / (s - t)
    seg = T.segments[idx]
    if seg.is_point:
        raise NotInKappa(f"{T.summary()} has no neighbourhood of {t}")
    return _dense_derivative_fd(f, t, seg, cfg)


def delta_derivative_function(
    T: TimeScale, f: RealFunction, cfg: QuadratureConfig = DEFAULT_CONFIG
) -> ScaleFunction:
    """
    f^Delta as a :py:class:`ScaleFunction`, for use inside integrands and grids.

    If cfg.symbolic_dense is set and f knows its classical derivative, that derivative
    is used at right-dense points instead of finite differences.
    """
    def finite_difference(t: float) -> float:
        idx, t = T.locate(t)
        return _dense_derivative_fd(f, t, T.segments[idx], cfg)

    dense: RealFunction = finite_difference
    if cfg.symbolic_dense and isinstance(f, Differentiable):
        dense = f.derivative()

    def at_point(t: float) -> float:
        t = T.snap(t)
        s = sigma(T, t)
        if s > t:
            return (f(s) - f(t)) / (s - t)
        return dense(t)

    return ScaleFunction(at_point, dense)


_MIN_DEPTH: Final = 3


def simpson(
    f: RealFunction, lo: float, hi: float, cfg: QuadratureConfig = DEFAULT_CONFIG
) -> float:
    """
    Adaptive Simpson quadrature of f over [lo, hi].

    The tolerance is max(abs_tol, rel_tol * integral of |f|), halved on every
    subdivision.

    Raises:
        QuadratureFailure: If cfg.max_depth subdivisions do not reach the tolerance
    """
    if lo == hi:
        return 0.0

    def rule(a: float, fa: float, b: float, fb: float) -> tuple[float, float, float]:
        m = (a + b) / 2.0
        fm = f(m)
        return m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def adapt(
        a: float,
        fa: float,
        b: float,
        fb: float,
        m: float,
        fm: float,
        whole: float,
        tol: float,
        depth: int,
    ) -> float:
        lm, flm, left = rule(a, fa, m, fm)
        rm, frm, right = rule(m, fm, b, fb)
        delta = left + right - whole
        if depth >= min(_MIN_DEPTH, cfg.max_depth) and abs(delta) <= 15.0 * tol:
            return left + right + delta / 15.0
        if depth >= cfg.max_depth:
            raise QuadratureFailure(
                f"Quadrature on [{lo}, {hi}] exhausted max_depth={cfg.max_depth}"
                f" near [{a}, {b}]"
            )
        return adapt(a, fa, m, fm, lm, flm, left, tol / 2.0, depth + 1) + adapt(
            m, fm, b, fb, rm, frm, right, tol / 2.0, depth + 1
        )

    flo, fhi = f(lo), f(hi)
    m, fm, whole = rule(lo, flo, hi, fhi)
    magnitude = (hi - lo) / 6.0 * (abs(flo) + 4.0 * abs(fm) + abs(fhi))
    tol = max(cfg.abs_tol, cfg.rel_tol * magnitude)
    return adapt(lo, flo, hi, fhi, m, fm, whole, tol, 0)


def delta_integral(
    T: TimeScale,
    f: ScaleFunction | RealFunction,
    start: float,
    end: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> float:
    """
    The oriented delta-integral of f from start to end.

    Raises:
        PointNotInScale: If start or end is not in T
        QuadratureFailure: If the quadrature of a dense part fails
    """
    iu, u = T.locate(start)
    iv, v = T.locate(end)
    if u == v:
        return 0.0
    if u > v:
        return -delta_integral(T, f, v, u, cfg)

    F = as_scale_function(f)
    terms: list[float] = []
    for idx in range(iu, iv + 1):
        seg = T.segments[idx]
        lo, hi = max(seg.lo, u), min(seg.hi, v)
        if hi > lo:
            terms.append(simpson(F.on_dense, lo, hi, cfg))
        if idx < iv:
            gap = T.segments[idx + 1].lo - seg.hi
            terms.append(gap * F.at_point(seg.hi))
    return math.fsum(terms)


class Monomials:
    """
    The generalized monomials h_k(t, s) of one time scale, memoized.

    h_0 = 1, h_1(t, s) = t - s and h_{k+1}(t, s) is the delta-integral of h_k(., s)
    from s to t. For every (k, s) the memo holds the delta-integral of h_{k-1}(., s)
    from a to the start of every segment, so a lookup integrates over at most part of
    one dense segment. The memo is shared between threads; writes are serialized by a
    lock.
    """

    def __init__(self, T: TimeScale, cfg: QuadratureConfig = DEFAULT_CONFIG) -> None:
        self.T = T
        self.cfg = cfg
        self._memo: dict[tuple[int, float], tuple[float, ...]] = {}
        self._lock = threading.Lock()

    def __call__(self, k: int, t: float, s: float) -> float:
        if k < 0:
            raise ValueError(f"Monomials need k >= 0 (got {k})")
        it, t = self.T.locate(t)
        i_s, s = self.T.locate(s)
        if k == 0:
            return 1.0
        if t == s:
            return 0.0
        if k == 1:
            return t - s
        return self._from_a(k, s, it, t) - self._from_a(k, s, i_s, s)

    def _lower(self, k: int, s: float) -> RealFunction:
        return lambda tau: self(k - 1, tau, s)

    def _segment_starts(self, k: int, s: float) -> tuple[float, ...]:
        if (cached := self._memo.get((k, s))) is not None:
            return cached
        g = self._lower(k, s)
        segments = self.T.segments
        starts = [0.0]
        for seg, following in zip(segments, segments[1:]):
            dense = 0.0 if seg.is_point else simpson(g, seg.lo, seg.hi, self.cfg)
            starts.append(starts[-1] + dense + (following.lo - seg.hi) * g(seg.hi))
        with self._lock:
            return self._memo.setdefault((k, s), tuple(starts))

    def _from_a(self, k: int, s: float, idx: int, t: float) -> float:
        """The delta-integral of h_{k-1}(., s) from a to t, t lying in segment idx."""
        start = self._segment_starts(k, s)[idx]
        lo = self.T.segments[idx].lo
        if t == lo:
            return start
        return start + simpson(self._lower(k, s), lo, t, self.cfg)


@functools.lru_cache(maxsize=64)
def get_monomials(T: TimeScale, cfg: QuadratureConfig = DEFAULT_CONFIG) -> Monomials:
    return Monomials(T, cfg)


def monomial_h(
    T: TimeScale, k: int, t: float, s: float, cfg: QuadratureConfig = DEFAULT_CONFIG
) -> float:
    """h_k(t, s) on T, computed by the integral recursion."""
    return get_monomials(T, cfg)(k, t, s)


@unique
class ScaleKind(StrEnum):
    CONTINUOUS = "continuous"
    DISCRETE = "discrete"
    QUANTUM = "quantum"


def _is_q_power(q: float, s: float) -> bool:
    if s <= 0:
        return False
    k = round(math.log(s) / math.log(q))
    return abs(q**k - s) <= membership_tolerance(s)


def _check_kind(kind: ScaleKind, t: float, s: float, q: float | None) -> None:
    if kind is ScaleKind.QUANTUM:
        if q is None or not math.isfinite(q) or q <= 1:
            raise BadBase(f"The quantum closed forms need q > 1 (got {q})")
        if not _is_q_power(q, s):
            raise KindMismatch(f"{s} is not a power of {q}")
        return
    if q is not None:
        raise KindMismatch(f"q is only meaningful for quantum scales (got q={q})")
    if kind is ScaleKind.DISCRETE and not (
        float(t).is_integer() and float(s).is_integer()
    ):
        raise KindMismatch(f"Discrete closed forms need integers (got t={t}, s={s})")


def hk_quantum_product(q: float, k: int, t: float, s: float) -> float:
    """h_k(t, s) on a q-lattice: the product of (t - q^v s) / (1 + q + ... + q^v)."""
    return math.prod(
        (t - q**v * s) / math.fsum(q**j for j in range(v + 1)) for v in range(k)
    )


def hk_closed_form(
    kind: ScaleKind, k: int, t: float, s: float, q: float | None = None
) -> float:
    """
    h_k(t, s) on the real line, the integers or a q-lattice.

    Raises:
        BadBase: If kind is quantum and q is missing or <= 1
        KindMismatch: If the arguments do not fit the kind
    """
    kind = ScaleKind(kind)
    _check_kind(kind, t, s, q)
    match kind:
        case ScaleKind.CONTINUOUS:
            return (t - s) ** k / math.factorial(k)
        case ScaleKind.DISCRETE:
            falling = math.prod(t - s - i for i in range(k))
            return falling / math.factorial(k)
        case ScaleKind.QUANTUM:
            assert q is not None
            return hk_quantum_product(q, k, t, s)
    raise KindMismatch(f"Unknown kind {kind}")


def h2_closed_form(
    kind: ScaleKind, t: float, s: float, q: float | None = None
) -> float:
    return hk_closed_form(kind, 2, t, s, q)


def grid_values(
    T: TimeScale,
    f: ScaleFunction | RealFunction,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    kappa: bool = True,
) -> np.ndarray:
    """
    Values of f on the verification grid of T.

    The grid holds every right-scattered point and cfg.dense_samples equidistant
    points per dense segment. With kappa=False a left-scattered maximum is added.
    """
    F = as_scale_function(f)
    points = T.scattered_points()
    if not kappa and T.segments[-1].is_point:
        points.append(T.b)
    parts = [np.array([F.at_point(p) for p in points], dtype=float)]
    dense = F.on_dense
    for seg in T.dense_segments():
        grid = np.linspace(seg.lo, seg.hi, cfg.dense_samples)
        if isinstance(dense, Vectorized):
            parts.append(dense.on_grid(grid))
        else:
            parts.append(np.fromiter((dense(float(x)) for x in grid), dtype=float))
    return np.concatenate(parts)


def delta_sup_inf(
    T: TimeScale, f: RealFunction, cfg: QuadratureConfig = DEFAULT_CONFIG
) -> tuple[float, float]:
    """
    (min, max) of f^Delta over the verification grid of T.

    This is a grid estimate, not a certified enclosure. Results for hashable functions
    are cached.
    """
    if isinstance(f, Hashable):
        return _cached_sup_inf(T, f, cfg)
    return _sup_inf(T, f, cfg)


def _sup_inf(
    T: TimeScale, f: RealFunction, cfg: QuadratureConfig
) -> tuple[float, float]:
    values = grid_values(T, delta_derivative_function(T, f, cfg), cfg)
    if values.size == 0:
        raise NotInKappa(f"{T.summary()} has no point to differentiate at")
    gamma, Gamma = float(values.min()), float(values.max())
    logger.debug("f^Delta on %s lies in [%s, %s]", T.summary(), gamma, Gamma)
    return gamma, Gamma


_cached_sup_inf = functools.lru_cache(maxsize=256)(_sup_inf)
