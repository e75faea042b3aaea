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
Module for processing commandline-arguments.

Responsible for extracting the relevant parameters from the command line and the
config-file, doing basic checking for correctness and constructing the configuration
objects of the numerical core from them.

Attributes:
    logger (logging.Logger): The logger for the module. Receives the constructed
        logger from :py:mod:`deltacheck.utils.ContextLogger`
"""
import argparse
import os
import sys
from functools import cache
from pathlib import Path
from typing import Final, get_args

from importlib_metadata import PackageNotFoundError, version
from pydantic import ValidationError

from deltacheck.calculus import DEFAULT_CONFIG, QuadratureConfig
from deltacheck.file_setup import (
    CONFIG_FILE,
    JINJA_TEMPLATE_DIR,
    PROGRAM_NAME,
    PYPROJECT,
    erase_files,
    get_files,
    get_log,
    get_template_files,
)
from deltacheck.fuzzer import FuzzConfig
from deltacheck.utils.ArgConfig import ArgConfig
from deltacheck.utils.conditional_imports import tomllib
from deltacheck.utils.ContextLogger import (
    LOG_LEVEL_NAMES,
    STRING2LEVEL,
    get_logger,
    root_log_setup,
)

logger = get_logger(__name__)
"""The logger for the module. Receives the constructed logger from
:py:mod:`deltacheck.utils.ContextLogger`"""

FUZZ_DEFAULTS: Final = FuzzConfig(seed=0, trials=1)
"""Provides the defaults of the generation options"""


class FileListingArgParse(argparse.ArgumentParser):
    def format_help(self) -> str:
        help_msg = super().format_help()
        files = get_files()
        files.sort()
        files_str = (
            os.linesep + "   " + (os.linesep + "   ").join(files) if files else " none"
        )
        help_msg += (
            os.linesep
            + "files created or used by this program:"
            + files_str
            + os.linesep
        )
        return help_msg


def _add_generation_options(cfg: ArgConfig) -> None:
    cfg.add_type(
        "--seed",
        "The seed of the fuzz run. Every trial derives its randomness from the seed"
        " and its index.",
        default=FUZZ_DEFAULTS.seed,
    )
    cfg.add_type(
        "--max-segments",
        "The maximal number of segments and isolated points of a random time scale",
        default=FUZZ_DEFAULTS.max_segments,
    )
    cfg.add_type(
        "--max-degree",
        "The maximal degree of a random polynomial",
        default=FUZZ_DEFAULTS.max_poly_degree,
    )
    cfg.add_type(
        "--coeff-range",
        "Coefficients of random polynomials are drawn from [-x, x]",
        default=FUZZ_DEFAULTS.coeff_range,
    )


def _add_output_options(cfg: ArgConfig, formats: bool = True) -> None:
    if formats:
        cfg.add_choice(
            "--format",
            "Sets the format of the reports. The value defines which .jinja-template"
            " will be used. The templates are available under"
            f" '{JINJA_TEMPLATE_DIR}'.",
            default="json",
            choices=sorted(get_template_files().keys()),
        )
    cfg.add_arg(
        "--out",
        "Writes the output to this file instead of the standard output. THIS WILL"
        " OVERWRITE ANY EXISTING FILE WITH THE SAME NAME.",
    )


def config_args(config_file: Path) -> argparse.ArgumentParser:
    """
    Creates a parser for this program.

    Args:
        config_file (): The path to this programs config file (will be created if it
            does not exist)

    Returns:
        The :py:class:`argparse.ArgumentParser` for this program
    """
    parser = FileListingArgParse(
        prog=PROGRAM_NAME,
        description=(
            "Verifies the Montgomery identity and inequalities of Grüss- and"
            " Ostrowski-type on time scales numerically"
        ),
        epilog=(
            "Change the default-values for these options by modifying the"
            f" '{PROGRAM_NAME}.toml' file mentioned below."
        ),
    )

    arg_config = ArgConfig(parser, config_file, commands_required=False)

    arg_config.add_choice(
        "--verbosity",
        "Sets the 'chattiness' of the program",
        choices=get_args(LOG_LEVEL_NAMES),
        default="warning",
    )
    arg_config.add_bool(
        "--debug", "Activates debug-mode: Changes the directory for application data"
    )
    arg_config.add_type(
        "--abs-tol",
        "Absolute error tolerance of the quadrature",
        default=DEFAULT_CONFIG.abs_tol,
    )
    arg_config.add_type(
        "--rel-tol",
        "Relative error tolerance of the quadrature and of numerical derivatives",
        default=DEFAULT_CONFIG.rel_tol,
    )
    arg_config.add_type(
        "--max-depth",
        "Maximal recursion depth of the adaptive quadrature",
        default=DEFAULT_CONFIG.max_depth,
    )
    arg_config.add_type(
        "--fd-step",
        "Initial step of the finite differences at right-dense points",
        default=DEFAULT_CONFIG.fd_step,
    )
    arg_config.add_type(
        "--dense-samples",
        "Number of grid points per dense segment used to estimate bounds",
        default=DEFAULT_CONFIG.dense_samples,
    )
    arg_config.add_bool(
        "--finite-differences",
        "Use finite differences at right-dense points even where the classical"
        " derivative of a function is known",
    )
    arg_config.add_bool(
        "--erase-appdata",
        "Erases all data- and cache-files (e.g. the files listed below)",
        short=None,
    )
    arg_config.add_bool(
        "--version",
        "Displays the version number (SemVer)",
        short=None,
    )

    check = arg_config.subcommand("check", "Runs the checks of a scenario file")
    check.add_arg("--spec", "The scenario file (JSON)")
    _add_output_options(check)

    fuzz = arg_config.subcommand(
        "fuzz", "Runs randomized checks and writes a summary (JSON)"
    )
    _add_generation_options(fuzz)
    fuzz.add_type("--trials", "Number of trials", default=1000)
    fuzz.add_type(
        "--workers", "Number of threads the trials are spread over", default=1
    )
    _add_output_options(fuzz, formats=False)

    replay = arg_config.subcommand(
        "replay",
        "Reruns a single fuzz trial. The scenario of the trial is printed to the"
        " standard error, the reports are written like those of 'check'.",
    )
    _add_generation_options(replay)
    replay.add_type("--trial", "Index of the trial", default=0)
    replay.add_arg(
        "--scenario-out",
        "Also writes the scenario of the trial to this file",
        short="-so",
    )
    _add_output_options(replay)

    return parser


@cache
def get_parser() -> argparse.ArgumentParser:
    return config_args(CONFIG_FILE)


def get_version() -> str:
    try:
        return version(PROGRAM_NAME)
    except PackageNotFoundError:
        pass
    if not PYPROJECT.is_file():
        print("pyproject.toml-file not found", file=sys.stderr)
        sys.exit(os.EX_IOERR)
    with PYPROJECT.open("rb") as pyproject:
        return str(tomllib.load(pyproject)["project"]["version"])


def mutex_args(a: argparse.Namespace) -> None:
    """
    Responsible for handling '--erase-appdata' and '--version'

    Raises:
        SystemExit:
            with error code: when another parameter was passed with '--erase-appdata'
            or when no command was given
            without error code: when the program-data was erased successfully

    Args:
        a: The result of a call to :py:meth:`argparse.ArgumentParser.parse_args()`
    """
    if a.erase_appdata:
        if len(sys.argv) > 2:
            get_parser().error("--erase-appdata cannot be used with any other flags")
        erase_files()
        sys.exit(os.EX_OK)
    if a.version:
        if len(sys.argv) > 2:
            get_parser().error("--version cannot be used with any other flags")
        print(get_version())
        sys.exit(os.EX_OK)
    if a.command is None:
        get_parser().error("No command given (choose from 'check', 'fuzz', 'replay')")


def init_logging(debug: bool, verbosity: str) -> None:
    """
    Initializes the global logger

    Args:
        debug (): Whether the logger operates in debug-mode (affects placement of log
            files)
        verbosity (): The verbosity of the logger
    """
    log_file = get_log(debug)
    root_log_setup(STRING2LEVEL[verbosity], str(log_file))


def sancheck_args(a: argparse.Namespace) -> None:
    """
    Responsible for quickly verifying certain parameters.

    Args:
        a: The result of a call to :py:meth:`argparse.ArgumentParser.parse_args()`
    """
    if a.command == "check" and not a.spec:
        get_parser().error("Nothing to check: No scenario passed (--spec)")
    if a.command == "fuzz" and a.workers > (cpus := os.cpu_count() or 1):
        logger.warning("%s workers requested, but only %s CPUs", a.workers, cpus)

    if CONFIG_FILE.is_file() and CONFIG_FILE.stat().st_size == 0:
        logger.warning("The config-file %s is empty", CONFIG_FILE)


def quadrature_config(a: argparse.Namespace) -> QuadratureConfig:
    """
    The tolerances passed on the command line.

    Raises:
        SystemExit: If a tolerance is out of its range (exit status 2)
    """
    try:
        return QuadratureConfig(
            abs_tol=a.abs_tol,
            rel_tol=a.rel_tol,
            max_depth=a.max_depth,
            fd_step=a.fd_step,
            dense_samples=a.dense_samples,
            symbolic_dense=not a.finite_differences,
        )
    except ValidationError as e:
        get_parser().error(f"Invalid tolerances:{os.linesep}{e}")


def generation_options(a: argparse.Namespace) -> dict[str, int | float]:
    return {
        "max_segments": a.max_segments,
        "max_poly_degree": a.max_degree,
        "coeff_range": a.coeff_range,
    }


def fuzz_config(a: argparse.Namespace) -> FuzzConfig:
    """
    The options of the 'fuzz' command.

    Raises:
        SystemExit: If an option is out of its range (exit status 2)
    """
    try:
        return FuzzConfig.model_validate(
            {"seed": a.seed, "trials": a.trials, "workers": a.workers}
            | generation_options(a)
        )
    except ValidationError as e:
        get_parser().error(f"Invalid fuzz options:{os.linesep}{e}")
