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
Entry point of the program.

Exit status: 0 if every check holds, 1 if a check does not hold or could not be
computed, 2 if the input is invalid.
"""
import argparse
import logging
import os
import sys
from typing import Final

from pydantic import ValidationError

from deltacheck.calculus import QuadratureConfig
from deltacheck.computation_error import write_errors
from deltacheck.fuzzer import fuzz, replay
from deltacheck.inequalities import BoundReport
from deltacheck.report import check_suffix, emit_report, emit_summary
from deltacheck.scenario import SpecError, load_scenario, run_scenario
from deltacheck.user_interface import (
    fuzz_config,
    generation_options,
    get_parser,
    init_logging,
    mutex_args,
    quadrature_config,
    sancheck_args,
)
from deltacheck.utils.ContextLogger import get_logger
from deltacheck.utils.filesystem import write_bytes
from deltacheck.utils.misc import dict2str

logger = get_logger(__name__)

EXIT_HOLDS: Final = 0
EXIT_VIOLATED: Final = 1
EXIT_BAD_INPUT: Final = 2


def output(data: bytes, out: str | None, fmt: str | None = None) -> None:
    if out is None:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
        return
    file = write_bytes(data, out)
    if fmt:
        check_suffix(file, fmt)


def exit_status(reports: list[BoundReport]) -> int:
    return EXIT_HOLDS if all(report.holds for report in reports) else EXIT_VIOLATED


def run_check(a: argparse.Namespace, quadrature: QuadratureConfig) -> int:
    try:
        spec = load_scenario(a.spec)
    except SpecError as e:
        logger.critical("%s", e)
        return EXIT_BAD_INPUT
    reports = run_scenario(spec, quadrature)
    output(emit_report(reports, a.format, a.debug), a.out, a.format)
    return exit_status(reports)


def run_fuzz(a: argparse.Namespace, quadrature: QuadratureConfig) -> int:
    summary = fuzz(fuzz_config(a), quadrature)
    output(emit_summary(summary), a.out, "json")
    if summary.violations or summary.errors:
        return EXIT_VIOLATED
    return EXIT_HOLDS


def run_replay(a: argparse.Namespace, quadrature: QuadratureConfig) -> int:
    try:
        result = replay(a.seed, a.trial, quadrature, **generation_options(a))
    except ValidationError as e:
        logger.critical("Invalid replay options: %s", e)
        return EXIT_BAD_INPUT
    scenario = result.spec.model_dump_json(indent=2) + os.linesep
    print(scenario, end="", file=sys.stderr)
    if a.scenario_out:
        write_bytes(scenario.encode("utf-8"), a.scenario_out)
    output(emit_report(result.reports, a.format, a.debug), a.out, a.format)
    return exit_status(result.reports)


COMMANDS: Final = {"check": run_check, "fuzz": run_fuzz, "replay": run_replay}


def main() -> None:
    """
    Orchestrates a full run of the program
    """
    a = get_parser().parse_args()
    mutex_args(a)
    init_logging(a.debug, a.verbosity)
    if logger.isEnabledFor(logging.DEBUG):
        logger.debug(
            "CLI-ARGS: %s\t%s", os.linesep, dict2str(vars(a), os.linesep + "\t")
        )

    logger.info("--- Processing arguments ---")
    sancheck_args(a)
    quadrature = quadrature_config(a)

    logger.info("--- Running %s ---", a.command)
    status = COMMANDS[a.command](a, quadrature)

    logger.info("--- Summary ---")
    write_errors(a.debug)
    logger.info("Exit status: %s", status)
    sys.exit(status)


if __name__ == "__main__":
    main()
