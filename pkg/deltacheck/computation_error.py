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
Module for logging and recording errors that prevent a check from being computed.

The errors are collected over a whole run and written as markdown files, one per
(check, exception) pair, when the run is over.
"""
import os
import textwrap
import threading
import traceback
from os import linesep
from typing import Callable, Final, NamedTuple

from importlib_metadata import PackageNotFoundError, version

from deltacheck.file_setup import PROGRAM_NAME, README_NAME, get_error_report_dir
from deltacheck.utils.ContextLogger import get_logger
from deltacheck.utils.markdown import bold, code, codeblock, header, italic, unordered
from deltacheck.utils.traceback_utils import format_stacks, get_shared_frames

logger = get_logger(__name__)
"""The logger for the module. Receives the constructed logger from
:py:mod:`deltacheck.utils.ContextLogger`"""

REPORTED_PACKAGES: Final = (PROGRAM_NAME, "numpy", "pydantic")


def _package_version(name: str) -> str:
    try:
        return version(name)
    except PackageNotFoundError:
        return "not installed"


class ComputationError(NamedTuple):
    """Consists of the context the check ran in and the traceback of its failure."""

    context: str
    traceback: traceback.TracebackException


categorized_errors: dict[str, dict[str, list[ComputationError]]] = {}
"""
Maps the name of a check to a dictionary mapping the name of an exception to all
occurrences of that exception during that check.
"""
_lock: Final = threading.Lock()


def handle_computation_error(
    check: str,
    exception: Exception,
    context: str,
    log: Callable[..., None] | None = None,
    save_error: bool = True,
) -> ComputationError | None:
    """
    Logs and categorizes an exception raised while computing a check.

    Args:
        check: The name of the check (e.g. 'ostrowski_gruss')
        exception: The exception raised by the check
        context: Describes the inputs of the check (scale, function, point)
        log: a logging method (e.g. logger.info, logger.critical...) to report the
            occurrence of the error
        save_error: Whether the error should be stored in :py:data:`categorized_errors`

    Returns:
        The :py:class:`ComputationError` generated from the parameters or None if it
        was not saved
    """
    log = log if log else logger.error
    log("%s could not be computed (%s): ", check, context, exc_info=exception)

    if not save_error:
        return None

    error = ComputationError(
        context=context,
        traceback=traceback.TracebackException.from_exception(exception),
    )
    with _lock:
        by_exception = categorized_errors.setdefault(check, {})
        by_exception.setdefault(type(exception).__name__, []).append(error)
    return error


def reset_errors() -> None:
    with _lock:
        categorized_errors.clear()


def error_count() -> int:
    with _lock:
        return sum(
            len(errors)
            for by_exception in categorized_errors.values()
            for errors in by_exception.values()
        )


PRE_MSG: Final = textwrap.dedent(
    f"""
    --- MESSAGE GENERATED BY {PROGRAM_NAME} ---

    """
)


def errors2str() -> list[tuple[str, str]]:
    """
    Generates a markdown representation for every category in
    :py:data:`categorized_errors`.

    All occurrences of one exception during one check are grouped into the same text.
    One stack trace is shown fully, all others have the frames shared by every trace
    removed.

    Returns:
        A list of tuples, each holding a title (usable as a file name) and the text
    """
    reports = []
    with _lock:
        snapshot = {
            check: dict(by_exception)
            for check, by_exception in categorized_errors.items()
        }
    for check, by_exception in sorted(snapshot.items()):
        for exception_name, errors in sorted(by_exception.items()):
            title = f"{check} - {exception_name}"
            infos = unordered(
                "check: " + code(check),
                "exception: " + code(exception_name),
                *(
                    f"{name} version: " + code(_package_version(name))
                    for name in REPORTED_PACKAGES
                ),
                f"occurrences: {len(errors)}",
                "contexts: ",
            ) + unordered(*(code(error.context) for error in errors), level=1)

            tb_ex_list = [error.traceback for error in errors]
            shared_frames = get_shared_frames(tb_ex_list)
            formatted_stacks = format_stacks(tb_ex_list, shared_frames, PROGRAM_NAME)

            if len(errors) > 1:
                dot_explanation = (
                    italic(
                        "'...' indicates frames present in all traces"
                        " (but only shown in the first)"
                    )
                    + linesep * 2
                )
            else:
                dot_explanation = ""

            stack_traces = [f"{bold('Stack Traces')}{linesep * 2}", dot_explanation]
            for error, stack in zip(errors, formatted_stacks):
                stack_traces.append(f"Context: {error.context}{linesep * 2}")
                stack_traces += codeblock(*stack, language="python")
                stack_traces.append(linesep * 2)

            msg = (
                PRE_MSG
                + header(title, 2)
                + linesep * 2
                + "".join(infos)
                + linesep
                + "".join(stack_traces)
            )
            reports.append((title, msg))

    return reports


def write_errors(debug: bool = False) -> int:
    """
    Writes the reports from :py:func:`errors2str` to a timestamped directory.

    Args:
        debug: Whether the reports should be written into the normal- or into the
            debug-state-directory

    Returns:
        Number of reports written
    """
    if not (errors := errors2str()):
        return 0

    logger.info("---Writing error reports---")

    if not (error_dir := get_error_report_dir(debug)):
        return 0

    for title, msg in errors:
        (error_dir / title).with_suffix(".md").write_text(msg)

    logger.warning(
        "Some checks could not be computed.%sSee %s%sfor details.",
        os.linesep,
        error_dir.parent / README_NAME,
        os.linesep,
    )
    return len(errors)
