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
Small building blocks for Markdown output.

All functions are registered as jinja-filters for the report templates.
"""
import re
from os import linesep
from typing import Final, Pattern

__all__ = [
    "esc",
    "header",
    "italic",
    "bold",
    "code",
    "codeblock",
    "unordered",
]

INDENT: Final = " " * 4

# matches Markdown-control characters that are not yet escaped
NOT_ESCAPED: Final[Pattern[str]] = re.compile(
    r"(?<!\\)(`|\*|_|{|}|\[|\]|\(|\)|#|\+|-|\.|!|~~|\|)"
)


def esc(string: str) -> str:
    """
    escapable symbols: \'*_{}[]()#+-.!|
    """
    return NOT_ESCAPED.sub(r"\\\1", str(string))


def header(string: str, level: int = 1) -> str:
    level = min(max(level, 1), 6)
    return "#" * level + " " + string


def italic(string: str) -> str:
    return "_" + str.strip(string) + "_"


def bold(string: str) -> str:
    return "**" + str.strip(string) + "**"


def code(string: str) -> str:
    return "`" + string + "`"


def codeblock(*strings: str, language: str = "") -> list[str]:
    return ["```" + language + linesep, *strings, linesep + "```" + linesep]


def unordered(*items: str, level: int = 0) -> list[str]:
    indent = min(max(level, 0), 6) * INDENT
    return [f"{indent}* {item}{linesep}" for item in items]

