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
Randomized verification of the Montgomery identity and the Ostrowski and
Ostrowski-Grüss inequalities.

Every trial draws a time scale, a polynomial and a point from its own generator,
seeded with (seed, trial index), so any trial can be replayed on its own.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Final, Iterable, NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from deltacheck.calculus import DEFAULT_CONFIG, QuadratureConfig
from deltacheck.exprparse import polynomial_text
from deltacheck.inequalities import BoundReport, ReportName
from deltacheck.scenario import Check, ScenarioSpec, SegmentsScale, run_scenario
from deltacheck.timescale import make_timescale
from deltacheck.utils.conditional_imports import Self
from deltacheck.utils.ContextLogger import QueueContextManager as QCM
from deltacheck.utils.ContextLogger import get_logger

logger = get_logger(__name__)

FUZZ_CHECKS: Final = (Check.MONTGOMERY, Check.OSTROWSKI, Check.OSTROWSKI_GRUSS)
SLACK_REPORTS: Final = (str(ReportName.OSTROWSKI), str(ReportName.OSTROWSKI_GRUSS))
"""Reports whose slack is an inequality margin (Montgomery reports carry a residual)"""
DECIMALS: Final = 4
"""Drawn endpoints and coefficients are rounded so the scenarios stay readable"""


class FuzzConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    seed: int = Field(ge=0, lt=2**64)
    trials: int = Field(ge=1)
    max_segments: int = Field(6, ge=1)
    max_poly_degree: int = Field(5, ge=0)
    coeff_range: float = Field(4.0, gt=0)
    scale_span: tuple[float, float] = (0.0, 10.0)
    workers: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _span_is_window(self) -> Self:
        lo, hi = self.scale_span
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValueError(f"scale_span needs finite lo < hi (got {self.scale_span})")
        return self


class TrialResult(NamedTuple):
    trial: int
    spec: ScenarioSpec
    reports: list[BoundReport]


class FuzzSummary(BaseModel):
    seed: int
    trials_run: int
    violations: int
    errors: int
    min_slack: float | None
    worst_trial: int | None
    worst_case: ScenarioSpec | None
    residual_max: float


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, trial])


def random_segments(
    rng: np.random.Generator, cfg: FuzzConfig
) -> list[tuple[float, float]]:
    """
    Up to cfg.max_segments disjoint segments in cfg.scale_span, each one collapsed to
    an isolated point with probability 1/2. The result always spans a window a < b.
    """
    lo, hi = cfg.scale_span
    count = int(rng.integers(1, cfg.max_segments + 1))
    ends = np.sort(np.round(rng.uniform(lo, hi, 2 * count), DECIMALS))
    isolated = rng.random(count) < 0.5
    if count == 1:
        isolated[0] = False
    segments = []
    for k in range(count):
        left, right = float(ends[2 * k]), float(ends[2 * k + 1])
        segments.append((left, left) if isolated[k] else (left, right))
    return widen_to_window(segments, cfg.scale_span)


def widen_to_window(
    segments: list[tuple[float, float]], span: tuple[float, float]
) -> list[tuple[float, float]]:
    """segments, plus an isolated end of span if they all collapsed to one point."""
    T = make_timescale(segments)
    if T.a < T.b:
        return segments
    lo, hi = span
    point = hi if T.a != hi else lo
    return [*segments, (point, point)]


def random_polynomial(rng: np.random.Generator, cfg: FuzzConfig) -> str:
    degree = int(rng.integers(0, cfg.max_poly_degree + 1))
    coefficients = np.round(
        rng.uniform(-cfg.coeff_range, cfg.coeff_range, degree + 1), DECIMALS
    )
    return polynomial_text([float(c) for c in coefficients])


def random_point(
    rng: np.random.Generator, segments: list[tuple[float, float]]
) -> float:
    """A scattered point, a dense-segment endpoint or a dense-segment midpoint."""
    T = make_timescale(segments)
    candidates = T.points() + [(seg.lo + seg.hi) / 2 for seg in T.dense_segments()]
    candidates.sort()
    return candidates[int(rng.integers(0, len(candidates)))]


def draw_trial(cfg: FuzzConfig, trial: int) -> ScenarioSpec:
    rng = trial_rng(cfg.seed, trial)
    segments = random_segments(rng, cfg)
    function = random_polynomial(rng, cfg)
    t = random_point(rng, segments)
    return ScenarioSpec(
        timescale=SegmentsScale(segments=segments),
        functions=[function],
        points=[t],
        checks=list(FUZZ_CHECKS),
    )


def run_trial(
    cfg: FuzzConfig, trial: int, quadrature: QuadratureConfig = DEFAULT_CONFIG
) -> TrialResult:
    spec = draw_trial(cfg, trial)
    with QCM(
        logger,
        logger.debug,
        "Trial %s: %s on %s at t=%s",
        trial,
        spec.functions[0],
        spec.scale.summary(),
        spec.points,
    ):
        reports = run_scenario(spec, quadrature)
    return TrialResult(trial, spec, reports)


def replay(
    seed: int,
    trial: int,
    quadrature: QuadratureConfig = DEFAULT_CONFIG,
    **generation: int | float,
) -> TrialResult:
    """
    Reruns a single trial of a fuzz run.

    Args:
        seed: The seed of the fuzz run
        trial: The index of the trial
        generation: The generation options of the fuzz run (see :py:class:`FuzzConfig`)
    """
    cfg = FuzzConfig.model_validate(
        {"seed": seed, "trials": trial + 1} | dict(generation)
    )
    return run_trial(cfg, trial, quadrature)


def summarize(cfg: FuzzConfig, results: Iterable[TrialResult]) -> FuzzSummary:
    """
    Reduces trial results with min, max and counts only, so the summary does not
    depend on the order the trials finished in. Ties go to the lowest trial index.
    """
    trials_run = violations = errors = 0
    worst: tuple[float, int, ScenarioSpec] | None = None
    residual_max = 0.0
    for result in results:
        trials_run += 1
        for report in result.reports:
            if report.error is not None:
                errors += 1
                continue
            if not report.holds:
                violations += 1
            if report.name == ReportName.MONTGOMERY:
                residual_max = max(residual_max, report.lhs)
            elif report.name in SLACK_REPORTS:
                candidate = (report.slack, result.trial, result.spec)
                if worst is None or candidate[:2] < worst[:2]:
                    worst = candidate
    return FuzzSummary(
        seed=cfg.seed,
        trials_run=trials_run,
        violations=violations,
        errors=errors,
        min_slack=worst[0] if worst else None,
        worst_trial=worst[1] if worst else None,
        worst_case=worst[2] if worst else None,
        residual_max=residual_max,
    )


def fuzz(cfg: FuzzConfig, quadrature: QuadratureConfig = DEFAULT_CONFIG) -> FuzzSummary:
    """
    Runs cfg.trials independent trials, on cfg.workers threads.

    Computation errors are counted per report and never abort the run.
    """
    logger.info(
        "Fuzzing %s trials with seed %s on %s worker(s)",
        cfg.trials,
        cfg.seed,
        cfg.workers,
    )
    trials = range(cfg.trials)
    if cfg.workers == 1:
        summary = summarize(cfg, (run_trial(cfg, i, quadrature) for i in trials))
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = pool.map(lambda i: run_trial(cfg, i, quadrature), trials)
            summary = summarize(cfg, results)
    if summary.violations:
        logger.warning(
            "%s violations in %s trials (worst trial: %s)",
            summary.violations,
            summary.trials_run,
            summary.worst_trial,
        )
    logger.info("Smallest slack: %s (trial %s)", summary.min_slack, summary.worst_trial)
    return summary
