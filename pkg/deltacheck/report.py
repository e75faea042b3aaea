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
Module for functions using the jinja2-package to format reports.

Every '.jinja'-file in the template directory is an output format. 'json' and 'csv'
are machine-readable, 'md' and 'txt' are meant for people.
"""
from functools import cache
from typing import Any, Sequence

from jinja2 import Environment, StrictUndefined, Template
from pydantic_core import to_json

from deltacheck.file_setup import JINJA_TEMPLATE_DIR, get_template_files
from deltacheck.fuzzer import FuzzSummary
from deltacheck.inequalities import BoundReport
from deltacheck.utils import markdown
from deltacheck.utils.ContextLogger import get_logger
from deltacheck.utils.filesystem import File, ensure_accessible_file
from deltacheck.utils.misc import get_all_dict, num17

logger = get_logger(__name__)


def json_value(value: Any) -> str:
    """
    A JSON literal for value. Floats get 17 significant digits, non-finite floats
    become null.
    """
    match value:
        case None:
            return "null"
        case bool():
            return "true" if value else "false"
        case int():
            return str(value)
        case float():
            return num17(value, missing="null")
        case _:
            return to_json(str(value)).decode()


@cache
def get_env() -> Environment:
    """
    Initializes a jinja-Environment

    Adds all functions of the :py:mod:`markdown`-module, :py:func:`num17` and
    :py:func:`json_value` to the list of available filters.
    """
    env = Environment(undefined=StrictUndefined)
    env.filters |= get_all_dict(markdown)
    env.filters |= {"num17": num17, "json_value": json_value}
    return env


def get_format_names(debug: bool = False) -> set[str]:
    """
    Returns:
        The names of all available jinja-templates
    """
    return set(get_template_files(debug).keys())


@cache
def _load_template(fmt: str, debug: bool) -> Template:
    if not (template_files := get_template_files(debug)):
        raise FileNotFoundError(
            f"No templates found. Empty directory: {JINJA_TEMPLATE_DIR}"
        )
    if not (template_path := template_files.get(fmt)):
        raise ValueError(f"Template not found: {fmt}")
    if not (template_file := ensure_accessible_file(template_path)):
        raise FileNotFoundError(f"Not an accessible File: {template_path}")
    if not (template_str := template_file.read_text()):
        raise ValueError(f"Template file is empty: {template_file}")
    return get_env().from_string(template_str)


def emit_report(
    reports: Sequence[BoundReport], fmt: str = "json", debug: bool = False
) -> bytes:
    """
    Renders reports with the template named fmt.

    Args:
        reports: The reports to render
        fmt: The name of the template (without '.jinja'-extension)
        debug: Use the templates shipped with the package instead of the user's copies

    Returns:
        The UTF-8 encoded text, ending with a newline
    """
    text = _load_template(fmt, debug).render({"reports": list(reports)})
    return (text.rstrip("\n") + "\n").encode("utf-8")


def emit_summary(summary: FuzzSummary) -> bytes:
    return summary.model_dump_json(indent=2).encode("utf-8") + b"\n"


def check_suffix(out: File, fmt: str) -> None:
    """Warns if the file-ending of out does not match the output format."""
    if (ext := out.suffix.lstrip(".")) and ext != fmt:
        logger.warning(
            "Out-file-ending (%s) does not match the output format (%s)", ext, fmt
        )
