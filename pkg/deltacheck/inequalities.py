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
Both sides of the Montgomery identity and of the Grüss, Ostrowski and
Ostrowski-Grüss inequalities on time scales, with their specializations to the real
line, the integers and q-lattices.

Every check returns a :py:class:`BoundReport`. A report holds when its slack is not
below -tol_check, with tol_check = 1e-7 * max(1, |lhs|, |rhs|).
"""
import math
from enum import unique
from typing import Any, Final, NamedTuple, Sequence

import numpy as np

from deltacheck.calculus import (
    DEFAULT_CONFIG,
    Differentiable,
    QuadratureConfig,
    RealFunction,
    ScaleFunction,
    as_scale_function,
    delta_derivative_function,
    delta_integral,
    delta_sup_inf,
    f_sigma,
    grid_values,
    monomial_h,
    simpson,
)
from deltacheck.timescale import (
    DegenerateWindow,
    TimeScale,
    q_lattice,
    real_interval,
)
from deltacheck.utils.conditional_imports import StrEnum
from deltacheck.utils.ContextLogger import get_logger
from deltacheck.utils.misc import DeltaCheckError

logger = get_logger(__name__)

__all__ = [
    "OutOfRange",
    "BoundsViolated",
    "SequenceTooShort",
    "MidpointNotInScale",
    "ReportName",
    "BoundReport",
    "BoundsSource",
    "make_report",
    "error_report",
    "describe",
    "montgomery_kernel",
    "montgomery_residual",
    "montgomery_check",
    "kernel_integral",
    "mean_derivative",
    "sigma_bounds",
    "gruss_check",
    "ostrowski_check",
    "ostrowski_gruss_check",
    "corollary_continuous",
    "corollary_discrete",
    "corollary_quantum",
    "corollary_bounded",
    "corollary_midpoint",
    "corollary_endpoint",
]

TOL_CHECK_FACTOR: Final = 1e-7
BOUND_TOL_FACTOR: Final = 1e-9


class OutOfRange(DeltaCheckError, ValueError):
    pass


class BoundsViolated(DeltaCheckError, ValueError):
    pass


class SequenceTooShort(DeltaCheckError, ValueError):
    pass


class MidpointNotInScale(DeltaCheckError, LookupError):
    pass


@unique
class ReportName(StrEnum):
    MONTGOMERY = "montgomery"
    GRUSS = "gruss"
    OSTROWSKI = "ostrowski"
    OSTROWSKI_GRUSS = "ostrowski_gruss"
    COROLLARY_CONTINUOUS = "corollary_continuous"
    COROLLARY_DISCRETE = "corollary_discrete"
    COROLLARY_QUANTUM = "corollary_quantum"
    COROLLARY_BOUNDED = "corollary_bounded"
    COROLLARY_MIDPOINT = "corollary_midpoint"
    COROLLARY_ENDPOINT = "corollary_endpoint"


@unique
class BoundsSource(StrEnum):
    SUPPLIED = "supplied"
    GRID = "grid"


class BoundReport(NamedTuple):
    name: str
    t: float | None
    lhs: float
    rhs: float
    slack: float
    holds: bool
    tol_check: float
    inputs: dict[str, Any]
    error: str | None = None


def make_report(
    name: str, t: float | None, lhs: float, rhs: float, inputs: dict[str, Any]
) -> BoundReport:
    tol = TOL_CHECK_FACTOR * max(1.0, abs(lhs), abs(rhs))
    slack = rhs - lhs
    report = BoundReport(
        name=str(name),
        t=t,
        lhs=lhs,
        rhs=rhs,
        slack=slack,
        holds=bool(slack >= -tol),
        tol_check=tol,
        inputs=inputs,
    )
    if not report.holds:
        logger.warning(
            "%s does not hold at t=%s: lhs=%s > rhs=%s (%s)",
            name,
            t,
            lhs,
            rhs,
            inputs.get("function", ""),
        )
    return report


def error_report(
    name: str, t: float | None, inputs: dict[str, Any], error: BaseException
) -> BoundReport:
    """A report for a check that could not be computed. It never holds."""
    return BoundReport(
        name=str(name),
        t=t,
        lhs=math.nan,
        rhs=math.nan,
        slack=math.nan,
        holds=False,
        tol_check=math.nan,
        inputs=inputs,
        error=f"{type(error).__name__}: {error}",
    )


def describe(f: Any) -> str:
    """The text of an expression-backed function, otherwise its name or repr."""
    if text := getattr(f, "text", None):
        return str(text)
    return str(getattr(f, "__name__", repr(f)))


def _base_inputs(T: TimeScale, f: Any) -> dict[str, Any]:
    return {"scale": T.summary(), "function": describe(f)}


def _require_window(T: TimeScale) -> None:
    if not T.a < T.b:
        raise DegenerateWindow(f"Inequalities need a < b on {T.summary()}")


def _mean_sigma(T: TimeScale, f: RealFunction, cfg: QuadratureConfig) -> float:
    return delta_integral(T, f_sigma(T, f), T.a, T.b, cfg) / T.length


def montgomery_kernel(t: float, s: float, a: float, b: float) -> float:
    """
    p(t, s) = s - a for s < t and s - b for s >= t.

    Raises:
        OutOfRange: If s or t lies outside [a, b]
    """
    if not (a <= s <= b and a <= t <= b):
        raise OutOfRange(f"Kernel needs s={s} and t={t} in [{a}, {b}]")
    return s - a if s < t else s - b


def _kernel_integrals(
    T: TimeScale, g: ScaleFunction | RealFunction, t: float, cfg: QuadratureConfig
) -> float:
    """The delta-integral of p(t, s)*g(s) over [a, b], split at t."""
    a, b = T.a, T.b
    G = as_scale_function(g)
    left = delta_integral(T, G * (lambda s: s - a), a, t, cfg)
    right = delta_integral(T, G * (lambda s: s - b), t, b, cfg)
    return left + right


def montgomery_residual(
    T: TimeScale, f: RealFunction, t: float, cfg: QuadratureConfig = DEFAULT_CONFIG
) -> float:
    """
    f(t) minus the mean of f^sigma minus the kernel-weighted mean of f^Delta.

    Vanishes (up to quadrature error) for every delta-differentiable f.
    """
    _require_window(T)
    t = T.snap(t)
    weighted = _kernel_integrals(T, delta_derivative_function(T, f, cfg), t, cfg)
    return f(t) - _mean_sigma(T, f, cfg) - weighted / T.length


def montgomery_check(
    T: TimeScale, f: RealFunction, t: float, cfg: QuadratureConfig = DEFAULT_CONFIG
) -> BoundReport:
    """The Montgomery identity as a report: lhs = |residual|, rhs = 1e-7*(1+|f(t)|)."""
    t = T.snap(t)
    residual = montgomery_residual(T, f, t, cfg)
    ft = f(t)
    inputs = _base_inputs(T, f) | {"residual": residual, "f_t": ft}
    return make_report(
        ReportName.MONTGOMERY,
        t,
        abs(residual),
        TOL_CHECK_FACTOR * (1 + abs(ft)),
        inputs,
    )


def kernel_integral(
    T: TimeScale, t: float, cfg: QuadratureConfig = DEFAULT_CONFIG
) -> tuple[float, float]:
    """
    The delta-integral of p(t, .) over [a, b] next to its closed form
    h_2(t, a) - h_2(t, b).
    """
    _require_window(T)
    t = T.snap(t)
    computed = _kernel_integrals(T, lambda s: 1.0, t, cfg)
    closed = monomial_h(T, 2, t, T.a, cfg) - monomial_h(T, 2, t, T.b, cfg)
    return computed, closed


def mean_derivative(
    T: TimeScale, f: RealFunction, cfg: QuadratureConfig = DEFAULT_CONFIG
) -> tuple[float, float]:
    """
    The mean of f^Delta over [a, b] next to (f(b) - f(a)) / (b - a).
    """
    _require_window(T)
    fd = delta_derivative_function(T, f, cfg)
    computed = delta_integral(T, fd, T.a, T.b, cfg) / T.length
    return computed, (f(T.b) - f(T.a)) / T.length


def _bound_tol(*bounds: float) -> float:
    return BOUND_TOL_FACTOR * max(1.0, *(abs(x) for x in bounds))


def _validate_range(values: np.ndarray, lo: float, hi: float, what: str) -> None:
    if lo > hi:
        raise BoundsViolated(f"Lower bound {lo} of {what} exceeds upper bound {hi}")
    if values.size == 0:
        return
    tol = _bound_tol(lo, hi)
    low, high = float(values.min()), float(values.max())
    if low < lo - tol or high > hi + tol:
        raise BoundsViolated(
            f"{what} takes values in [{low}, {high}] outside of [{lo}, {hi}]"
        )


def sigma_bounds(
    T: TimeScale, f: RealFunction, cfg: QuadratureConfig = DEFAULT_CONFIG
) -> tuple[float, float]:
    """(min, max) of f^sigma over the verification grid, including b."""
    values = grid_values(T, f_sigma(T, f), cfg, kappa=False)
    return float(values.min()), float(values.max())


def gruss_check(
    T: TimeScale,
    f: RealFunction,
    g: RealFunction,
    bounds: Sequence[float],
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> BoundReport:
    """
    Grüss inequality for f and g with m1 <= f^sigma <= M1 and m2 <= g^sigma <= M2.

    Raises:
        BoundsViolated: If f^sigma or g^sigma leaves its bounds on the verification
            grid
    """
    _require_window(T)
    m1, M1, m2, M2 = bounds
    fs, gs = f_sigma(T, f), f_sigma(T, g)
    _validate_range(grid_values(T, fs, cfg, kappa=False), m1, M1, "f^sigma")
    _validate_range(grid_values(T, gs, cfg, kappa=False), m2, M2, "g^sigma")

    length = T.length
    mean_fg = delta_integral(T, fs * gs, T.a, T.b, cfg) / length
    mean_f = delta_integral(T, fs, T.a, T.b, cfg) / length
    mean_g = delta_integral(T, gs, T.a, T.b, cfg) / length
    lhs = abs(mean_fg - mean_f * mean_g)
    rhs = (M1 - m1) * (M2 - m2) / 4
    inputs = _base_inputs(T, f) | {
        "function_g": describe(g),
        "m1": m1,
        "M1": M1,
        "m2": m2,
        "M2": M2,
    }
    return make_report(ReportName.GRUSS, None, lhs, rhs, inputs)


def ostrowski_check(
    T: TimeScale,
    f: RealFunction,
    t: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    M: float | None = None,
) -> BoundReport:
    """
    Ostrowski inequality |f(t) - mean of f^sigma| <= M/(b-a) * (h_2(t,a) + h_2(t,b)).

    M defaults to max(|gamma|, |Gamma|) of :py:func:`delta_sup_inf`.
    """
    _require_window(T)
    t = T.snap(t)
    if M is None:
        gamma, Gamma = delta_sup_inf(T, f, cfg)
        M, source = max(abs(gamma), abs(Gamma)), BoundsSource.GRID
    else:
        source = BoundsSource.SUPPLIED
    h2_sum = monomial_h(T, 2, t, T.a, cfg) + monomial_h(T, 2, t, T.b, cfg)
    lhs = abs(f(t) - _mean_sigma(T, f, cfg))
    rhs = M / T.length * h2_sum
    inputs = _base_inputs(T, f) | {"M": M, "bounds_source": str(source)}
    return make_report(ReportName.OSTROWSKI, t, lhs, rhs, inputs)


def _ostrowski_gruss_lhs(
    T: TimeScale, f: RealFunction, t: float, cfg: QuadratureConfig
) -> tuple[float, dict[str, Any]]:
    length = T.length
    mean = _mean_sigma(T, f, cfg)
    h2_diff = monomial_h(T, 2, t, T.a, cfg) - monomial_h(T, 2, t, T.b, cfg)
    correction = (f(T.b) - f(T.a)) / length**2 * h2_diff
    lhs = abs(f(t) - mean - correction)
    return lhs, {"mean_sigma": mean, "correction": correction}


def ostrowski_gruss_check(
    T: TimeScale,
    f: RealFunction,
    t: float,
    gamma_Gamma: tuple[float, float] | None = None,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> BoundReport:
    """
    Ostrowski-Grüss inequality with the trapezoid-type correction term, bounded by
    (b-a)(Gamma-gamma)/4.

    Args:
        gamma_Gamma: Bounds of f^Delta. Validated on the verification grid if given,
            computed by :py:func:`delta_sup_inf` otherwise

    Raises:
        BoundsViolated: If supplied bounds do not hold on the verification grid
    """
    _require_window(T)
    t = T.snap(t)
    if gamma_Gamma is None:
        gamma, Gamma = delta_sup_inf(T, f, cfg)
        source = BoundsSource.GRID
    else:
        gamma, Gamma = gamma_Gamma
        fd = delta_derivative_function(T, f, cfg)
        _validate_range(grid_values(T, fd, cfg), gamma, Gamma, "f^Delta")
        source = BoundsSource.SUPPLIED
    lhs, details = _ostrowski_gruss_lhs(T, f, t, cfg)
    rhs = T.length * (Gamma - gamma) / 4
    inputs = (
        _base_inputs(T, f)
        | {"gamma": gamma, "Gamma": Gamma, "bounds_source": str(source)}
        | details
    )
    return make_report(ReportName.OSTROWSKI_GRUSS, t, lhs, rhs, inputs)


def corollary_continuous(
    f: RealFunction,
    a: float,
    b: float,
    t: float,
    gamma: float | None = None,
    Gamma: float | None = None,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
    derivative: RealFunction | None = None,
) -> BoundReport:
    """
    The Ostrowski-Grüss inequality on [a, b], evaluated with classical quadrature:
    |f(t) - mean of f - (f(b)-f(a))/(b-a) * (t - (a+b)/2)| <= (b-a)(Gamma-gamma)/4.

    Missing bounds are taken from 'derivative' (or the classical derivative of f, or
    finite differences) on cfg.dense_samples equidistant points.

    Raises:
        DegenerateWindow: If a >= b
        OutOfRange: If t lies outside [a, b]
    """
    T = real_interval(a, b)
    if not a <= t <= b:
        raise OutOfRange(f"t={t} is not in [{a}, {b}]")
    if gamma is None or Gamma is None:
        if derivative is None and isinstance(f, Differentiable):
            derivative = f.derivative()
        if derivative is not None:
            grid = np.linspace(a, b, cfg.dense_samples)
            values = np.fromiter((derivative(float(x)) for x in grid), dtype=float)
            found = (float(values.min()), float(values.max()))
        else:
            found = delta_sup_inf(T, f, cfg)
        gamma = found[0] if gamma is None else gamma
        Gamma = found[1] if Gamma is None else Gamma
        source = BoundsSource.GRID
    else:
        source = BoundsSource.SUPPLIED
    mean = simpson(f, a, b, cfg) / (b - a)
    correction = (f(b) - f(a)) / (b - a) * (t - (a + b) / 2)
    lhs = abs(f(t) - mean - correction)
    rhs = (b - a) * (Gamma - gamma) / 4
    inputs = _base_inputs(T, f) | {
        "gamma": gamma,
        "Gamma": Gamma,
        "bounds_source": str(source),
        "mean": mean,
        "correction": correction,
    }
    return make_report(ReportName.COROLLARY_CONTINUOUS, t, lhs, rhs, inputs)


def corollary_discrete(
    x: Sequence[float], i: int, cfg: QuadratureConfig = DEFAULT_CONFIG
) -> BoundReport:
    """
    The Ostrowski-Grüss inequality for a sequence x_0, ..., x_n at index i:
    |x_i - (x_1+...+x_n)/n - (x_n-x_0)/n * (i - (n+1)/2)| <= n(Gamma-gamma)/4,
    gamma and Gamma being the extreme forward differences.

    The inputs also carry 'lhs_literal', the left side with the factor x_n/n, which
    agrees with the general form only for x_0 = 0.

    Raises:
        SequenceTooShort: If x has fewer than two elements
        OutOfRange: If i is not in 1..n
    """
    n = len(x) - 1
    if n < 1:
        raise SequenceTooShort(f"Need at least x_0 and x_1 (got {len(x)} values)")
    if not 1 <= i <= n:
        raise OutOfRange(f"Index i={i} is not in 1..{n}")
    diffs = [x[k + 1] - x[k] for k in range(n)]
    gamma, Gamma = min(diffs), max(diffs)
    mean = math.fsum(x[1:]) / n
    position = i - (n + 1) / 2
    correction = (x[n] - x[0]) / n * position
    lhs = abs(x[i] - mean - correction)
    lhs_literal = abs(x[i] - mean - x[n] / n * position)
    rhs = n * (Gamma - gamma) / 4
    inputs = {
        "n": n,
        "i": i,
        "gamma": gamma,
        "Gamma": Gamma,
        "mean": mean,
        "correction": correction,
        "lhs_literal": lhs_literal,
    }
    return make_report(ReportName.COROLLARY_DISCRETE, float(i), lhs, rhs, inputs)


def corollary_quantum(
    f: RealFunction,
    q: float,
    m: int,
    n: int,
    t: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> BoundReport:
    """
    The Ostrowski-Grüss inequality on the q-lattice q^m, ..., q^n.

    gamma and Gamma bound the q-difference quotient (f(qs) - f(s)) / ((q-1)s) over
    s = q^m, ..., q^(n-1). The report is the general form. Its inputs also carry
    'lhs_literal', the left side with the correction factor
    (f(q^n) - f(q^m))/(q^n - q^m) * (t - (q^(2n+1) - q^(2m+1))/(q+1)), which does not
    match the general form, and the difference of both.

    Raises:
        BadBase: If q <= 1
        DegenerateWindow: If m >= n
        PointNotInScale: If t is not a lattice point
    """
    T = q_lattice(q, m, n)
    t = T.snap(t)
    quotients = [(f(q * s) - f(s)) / ((q - 1) * s) for s in T.points()[:-1]]
    gamma, Gamma = min(quotients), max(quotients)
    general = ostrowski_gruss_check(T, f, t, (gamma, Gamma), cfg)

    a, b = T.a, T.b
    shift = (q ** (2 * n + 1) - q ** (2 * m + 1)) / (q + 1)
    literal_correction = (f(b) - f(a)) / (b - a) * (t - shift)
    lhs_literal = abs(f(t) - general.inputs["mean_sigma"] - literal_correction)
    inputs = general.inputs | {
        "q": q,
        "m": m,
        "n": n,
        "lhs_literal": lhs_literal,
        "literal_minus_general": lhs_literal - general.lhs,
    }
    return general._replace(name=str(ReportName.COROLLARY_QUANTUM), inputs=inputs)


def corollary_bounded(
    T: TimeScale,
    f: RealFunction,
    t: float,
    M: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> BoundReport:
    """
    The Ostrowski-Grüss left side bounded by (b-a)M/2 for |f^Delta| <= M.

    Raises:
        BoundsViolated: If |f^Delta| exceeds M on the verification grid
    """
    _require_window(T)
    t = T.snap(t)
    fd = delta_derivative_function(T, f, cfg)
    _validate_range(grid_values(T, fd, cfg), -M, M, "f^Delta")
    lhs, details = _ostrowski_gruss_lhs(T, f, t, cfg)
    rhs = T.length * M / 2
    inputs = _base_inputs(T, f) | {"M": M} | details
    return make_report(ReportName.COROLLARY_BOUNDED, t, lhs, rhs, inputs)


def corollary_midpoint(
    T: TimeScale, f: RealFunction, cfg: QuadratureConfig = DEFAULT_CONFIG
) -> BoundReport:
    """
    :py:func:`ostrowski_gruss_check` at t = (a+b)/2.

    Raises:
        MidpointNotInScale: If (a+b)/2 is not in T
    """
    _require_window(T)
    midpoint = (T.a + T.b) / 2
    if midpoint not in T:
        raise MidpointNotInScale(f"{midpoint} is not in {T.summary()}")
    report = ostrowski_gruss_check(T, f, midpoint, None, cfg)
    return report._replace(name=str(ReportName.COROLLARY_MIDPOINT))


def corollary_endpoint(
    T: TimeScale, f: RealFunction, cfg: QuadratureConfig = DEFAULT_CONFIG
) -> BoundReport:
    """:py:func:`ostrowski_gruss_check` at t = b."""
    report = ostrowski_gruss_check(T, f, T.b, None, cfg)
    return report._replace(name=str(ReportName.COROLLARY_ENDPOINT))
