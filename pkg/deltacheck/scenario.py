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
Scenario files: a time scale, some functions, some points and the checks to run on
them.

A scenario is UTF-8 JSON, for example::

    {
        "timescale": {"segments": [[0, 1], [2, 2], [3, 4]]},
        "functions": ["t^2 + 1", "sin(t)"],
        "points": "all-scale-points",
        "checks": ["montgomery", "ostrowski_gruss"],
        "tolerances": {"rel_tol": 1e-10}
    }

The time scale is given by exactly one of 'segments', 'integers' ({a, b}),
'qlattice' ({q, m, n}) or 'interval' ({a, b}).
"""
from enum import unique
from pathlib import Path
from typing import Any, Callable, ClassVar, Final, Literal, Union

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PrivateAttr,
    ValidationError,
    field_validator,
    model_validator,
)

from deltacheck.calculus import DEFAULT_CONFIG, QuadratureConfig, delta_sup_inf
from deltacheck.computation_error import handle_computation_error
from deltacheck.exprparse import ExprFunction, parse
from deltacheck.inequalities import (
    BoundReport,
    ReportName,
    corollary_bounded,
    corollary_continuous,
    corollary_discrete,
    corollary_endpoint,
    corollary_midpoint,
    corollary_quantum,
    describe,
    error_report,
    gruss_check,
    montgomery_check,
    ostrowski_check,
    ostrowski_gruss_check,
    sigma_bounds,
)
from deltacheck.timescale import (
    TimeScale,
    integers_window,
    make_timescale,
    q_lattice,
    real_interval,
)
from deltacheck.utils.conditional_imports import Self, StrEnum
from deltacheck.utils.ContextLogger import QueueContextManager as QCM
from deltacheck.utils.ContextLogger import get_logger
from deltacheck.utils.filesystem import read_text
from deltacheck.utils.misc import NEVER_CATCH, DeltaCheckError

logger = get_logger(__name__)

ALL_SCALE_POINTS: Final = "all-scale-points"


class SpecError(DeltaCheckError, ValueError):
    """The scenario cannot be read or does not describe a valid run."""


@unique
class Check(StrEnum):
    MONTGOMERY = "montgomery"
    GRUSS = "gruss"
    OSTROWSKI = "ostrowski"
    OSTROWSKI_GRUSS = "ostrowski_gruss"
    COROLLARIES = "corollaries"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class IntegersWindow(_Strict):
    a: int
    b: int


class QLatticeWindow(_Strict):
    q: float
    m: int
    n: int


class IntervalWindow(_Strict):
    a: float
    b: float


class SegmentsScale(_Strict):
    segments: list[tuple[float, float]] = Field(min_length=1)
    corollary_name: ClassVar[str | None] = None

    def build(self) -> TimeScale:
        return make_timescale(self.segments)

    def corollary(
        self, f: ExprFunction, t: float, cfg: QuadratureConfig
    ) -> BoundReport | None:
        return None


class IntegersScale(_Strict):
    integers: IntegersWindow
    corollary_name: ClassVar[str | None] = ReportName.COROLLARY_DISCRETE

    def build(self) -> TimeScale:
        return integers_window(self.integers.a, self.integers.b)

    def corollary(
        self, f: ExprFunction, t: float, cfg: QuadratureConfig
    ) -> BoundReport | None:
        """The sequence form on x_j = f(a + j), or None for t = a."""
        a, b = self.integers.a, self.integers.b
        if (i := round(t) - a) < 1:
            return None
        report = corollary_discrete([f(float(j)) for j in range(a, b + 1)], i, cfg)
        inputs = {"scale": self.build().summary(), "function": describe(f)}
        return report._replace(t=float(round(t)), inputs=inputs | report.inputs)


class QLatticeScale(_Strict):
    qlattice: QLatticeWindow
    corollary_name: ClassVar[str | None] = ReportName.COROLLARY_QUANTUM

    def build(self) -> TimeScale:
        return q_lattice(self.qlattice.q, self.qlattice.m, self.qlattice.n)

    def corollary(
        self, f: ExprFunction, t: float, cfg: QuadratureConfig
    ) -> BoundReport | None:
        window = self.qlattice
        return corollary_quantum(f, window.q, window.m, window.n, t, cfg)


class IntervalScale(_Strict):
    interval: IntervalWindow
    corollary_name: ClassVar[str | None] = ReportName.COROLLARY_CONTINUOUS

    def build(self) -> TimeScale:
        return real_interval(self.interval.a, self.interval.b)

    def corollary(
        self, f: ExprFunction, t: float, cfg: QuadratureConfig
    ) -> BoundReport | None:
        return corollary_continuous(f, self.interval.a, self.interval.b, t, cfg=cfg)


ScaleSpec = Union[SegmentsScale, IntegersScale, QLatticeScale, IntervalScale]


class ScenarioSpec(_Strict):
    timescale: ScaleSpec
    functions: list[str] = Field(min_length=1)
    points: list[float] | Literal["all-scale-points"]
    checks: list[Check] = Field(min_length=1)
    tolerances: QuadratureConfig | None = None

    _scale: TimeScale | None = PrivateAttr(default=None)

    @field_validator("functions")
    @classmethod
    def _parse_functions(cls, functions: list[str]) -> list[str]:
        for text in functions:
            parse(text)
        return functions

    @model_validator(mode="after")
    def _points_in_scale(self) -> Self:
        scale = self.scale
        if self.points == ALL_SCALE_POINTS:
            return self
        if outside := [p for p in self.points if p not in scale]:
            raise ValueError(f"Points {outside} are not in {scale.summary()}")
        return self

    @property
    def scale(self) -> TimeScale:
        if self._scale is None:
            self._scale = self.timescale.build()
        return self._scale

    def evaluation_points(self) -> list[float]:
        if self.points == ALL_SCALE_POINTS:
            return self.scale.points()
        return [self.scale.snap(p) for p in self.points]

    def quadrature_config(
        self, base: QuadratureConfig = DEFAULT_CONFIG
    ) -> QuadratureConfig:
        """base, overridden by the tolerances this scenario sets explicitly."""
        if self.tolerances is None:
            return base
        overrides = self.tolerances.model_dump(exclude_unset=True)
        return QuadratureConfig.model_validate(base.model_dump() | overrides)


def parse_scenario(text: str) -> ScenarioSpec:
    """
    Raises:
        SpecError: If text is not a valid scenario
    """
    try:
        return ScenarioSpec.model_validate_json(text)
    except ValidationError as e:
        raise SpecError(f"Invalid scenario:\n{e}") from e


def load_scenario(path: str | Path) -> ScenarioSpec:
    """
    Raises:
        SpecError: If the file cannot be read or is not a valid scenario
    """
    try:
        text = read_text(path)
    except (OSError, UnicodeDecodeError) as e:
        raise SpecError(f"Cannot read scenario {path}: {e}") from e
    return parse_scenario(text)


def _guarded(
    name: str,
    t: float | None,
    inputs: dict[str, Any],
    compute: Callable[[], BoundReport | None],
) -> BoundReport | None:
    try:
        return compute()
    except NEVER_CATCH:
        raise
    except Exception as e:
        context = f"{inputs['scale']} | {inputs['function']} | t={t}"
        handle_computation_error(name, e, context)
        return error_report(name, t, inputs, e)


class _Runner:
    def __init__(self, spec: ScenarioSpec, cfg: QuadratureConfig) -> None:
        self.spec = spec
        self.T = spec.scale
        self.cfg = cfg
        self.reports: list[BoundReport] = []

    def add(
        self,
        name: str,
        f: ExprFunction,
        t: float | None,
        compute: Callable[[], BoundReport | None],
    ) -> None:
        inputs = {"scale": self.T.summary(), "function": describe(f)}
        if (report := _guarded(name, t, inputs, compute)) is not None:
            self.reports.append(report)

    def bound_of_derivative(self, f: ExprFunction) -> float:
        gamma, Gamma = delta_sup_inf(self.T, f, self.cfg)
        return max(abs(gamma), abs(Gamma))

    def at_point(self, check: Check, f: ExprFunction, t: float) -> None:
        T, cfg = self.T, self.cfg
        match check:
            case Check.MONTGOMERY:
                self.add(check, f, t, lambda: montgomery_check(T, f, t, cfg))
            case Check.OSTROWSKI:
                self.add(check, f, t, lambda: ostrowski_check(T, f, t, cfg))
            case Check.OSTROWSKI_GRUSS:
                self.add(check, f, t, lambda: ostrowski_gruss_check(T, f, t, None, cfg))
            case Check.COROLLARIES:
                self.add(
                    ReportName.COROLLARY_BOUNDED,
                    f,
                    t,
                    lambda: corollary_bounded(
                        T, f, t, self.bound_of_derivative(f), cfg
                    ),
                )
                if name := self.spec.timescale.corollary_name:
                    self.add(
                        name, f, t, lambda: self.spec.timescale.corollary(f, t, cfg)
                    )

    def per_function(self, check: Check, f: ExprFunction, g: ExprFunction) -> None:
        T, cfg = self.T, self.cfg
        match check:
            case Check.GRUSS:

                def gruss() -> BoundReport:
                    bounds = (*sigma_bounds(T, f, cfg), *sigma_bounds(T, g, cfg))
                    return gruss_check(T, f, g, bounds, cfg)

                self.add(check, f, None, gruss)
            case Check.COROLLARIES:
                self.add(
                    ReportName.COROLLARY_ENDPOINT,
                    f,
                    T.b,
                    lambda: corollary_endpoint(T, f, cfg),
                )
                if (T.a + T.b) / 2 in T:
                    self.add(
                        ReportName.COROLLARY_MIDPOINT,
                        f,
                        (T.a + T.b) / 2,
                        lambda: corollary_midpoint(T, f, cfg),
                    )


def run_scenario(
    spec: ScenarioSpec, cfg: QuadratureConfig = DEFAULT_CONFIG
) -> list[BoundReport]:
    """
    Runs every check of the scenario.

    The order is deterministic: for every function, every point and every check (in
    the order given) the pointwise reports, followed by the reports computed once per
    function (Grüss paired with the next function, endpoint and midpoint corollaries).
    A check that fails to compute yields a report carrying the error and never holds.

    Args:
        spec: The scenario
        cfg: The tolerances the scenario's own tolerances are applied on
    """
    runner = _Runner(spec, spec.quadrature_config(cfg))
    functions = [ExprFunction.from_text(text) for text in spec.functions]
    points = spec.evaluation_points()
    logger.info(
        "Running %s checks for %s functions at %s points on %s",
        len(spec.checks),
        len(functions),
        len(points),
        runner.T.summary(),
    )
    for idx, f in enumerate(functions):
        with QCM(logger, logger.info, "Checking %s", f):
            for t in points:
                with QCM(logger, logger.debug, "At t=%s", t):
                    for check in spec.checks:
                        runner.at_point(check, f, t)
            g = functions[(idx + 1) % len(functions)]
            for check in spec.checks:
                runner.per_function(check, f, g)
    return runner.reports
