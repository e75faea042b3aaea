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
import math
from os import linesep
from types import ModuleType
from typing import Any, Final

__all__ = [
    "NEVER_CATCH",
    "DeltaCheckError",
    "dict2str",
    "num17",
    "get_all_dict",
]

NEVER_CATCH: Final = (SystemExit, MemoryError, KeyboardInterrupt)


class DeltaCheckError(Exception):
    """Base class of every error raised deliberately by this package."""


def dict2str(dictionary: dict[Any, Any], sep: str = linesep) -> str:
    items = [f"{item[0]}: {item[1]}" for item in dictionary.items()]
    return sep.join(items)


def num17(value: float | int | None, missing: str = "") -> str:
    """
    Formats a number with 17 significant digits.

    17 digits are enough for every double to survive a round trip through text.

    Args:
        value (): The number to format
        missing (): Returned for 'None' and for non-finite values

    Returns:
        '0.1' -> '0.10000000000000001'
        '2' -> '2'
        'nan' -> missing
    """
    if value is None:
        return missing
    if isinstance(value, bool):
        raise TypeError("Booleans are not numbers in reports")
    if isinstance(value, int):
        return str(value)
    if not math.isfinite(value):
        return missing
    return f"{value:.17g}"


def get_all_dict(mod: ModuleType) -> dict[str, Any]:
    """
    Builds a dictionary from the __all__-attribute of mod.

    The keys are the strings in __all__ and the values are references to the
    corresponding module-members (e.g. the functions, classes, variables declared in
    that module)

    Args:
        mod (): A python module

    Returns:
        A dictionary filled with member-name|member-reference pairs or an empty
        dictionary if the module does not declare __all__

    """
    if not (declared_items := mod.__dict__["__all__"]):
        return {}
    return {name: mod.__dict__[name] for name in declared_items}
