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
Module offering additional functions for filesystem-interactions.
"""
import os
import sys
from pathlib import Path
from time import localtime, strftime
from typing import Any, NewType, TypeGuard

from deltacheck.utils.ContextLogger import DO_NOT_LOG, get_logger

logger = get_logger(__name__)

File = NewType("File", Path)
"""
Type representing a path to a file. The file existed when the Path was narrowed to
File, which is no guarantee that it still exists later on.
"""


Directory = NewType("Directory", Path)
"""
Type representing a path to a directory. The directory existed when the Path was
narrowed to Directory, which is no guarantee that it still exists later on.
"""


def real_dir(value: Path) -> TypeGuard[Directory]:
    """Checks if the file 'path' points to is an :py:data:`Directory`"""
    return value.is_dir()


_Msg = tuple[str, Any] | tuple[str, Any, Any]
_NO_MSG: _Msg = (DO_NOT_LOG, "", "")


def full_path(*pathelements: str | Path) -> Path:
    """
    Creates an absolute path from pathelements

    Variables and '~' are expanded, surrounding whitespace is removed.

    Args:
        *pathelements (): elements of the path to be formed (correctly ordered)

    Returns:
        An absolute path
    """
    first = str(pathelements[0]).lstrip()
    last = str(pathelements[-1]).rstrip() if len(pathelements) > 1 else ""

    path = Path(first, *pathelements[1:-1], last)
    path = path.expanduser()
    path = Path(os.path.expandvars(path))
    return path.resolve()


def _ensure_existence_dir(path: Path) -> tuple[Directory | None, _Msg]:
    try:
        if path.is_file():
            return None, (
                "%s is already a file, thus a directory with the same name cannot exist",
                path,
            )
        exists = real_dir(path)
    except OSError as e:
        return None, ("Directory cannot be accessed: %s (%s)", path, repr(e))
    if not exists:
        try:
            logger.info("Creating directory: %s", path)
            path.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            return None, ("Directory could not be created: %s (%s)", path, repr(e))
    return Directory(path), _NO_MSG


def ensure_existence_dir(*path_elem: str | Path) -> Directory | None:
    """
    Constructs an absolute path from path_elem pointing to a directory, creating it if
    necessary.

    Returns:
        The directory or None if it cannot be created
    """
    directory, msg = _ensure_existence_dir(full_path(*path_elem))
    if not directory:
        logger.error(*msg)
    return directory


def create_timestamped_dir(*path_elem: str | Path, name: str = "") -> Directory | None:
    """
    Creates a directory at the tip of path_elem whose name is derived from the current
    time

    The name is 'YYYY-mm-DD_HH-MM-SS', prefixed by 'NAME__' if name is given. If such a
    directory already exists, '--N' is appended.

    Returns:
        The new directory or None if it could not be created
    """
    current_time = strftime("%Y-%m-%d_%H-%M-%S", localtime())
    parent = ensure_existence_dir(*path_elem)
    if not parent:
        return None
    dir_name = f"{name}__{current_time}" if name else current_time
    candidate = parent / dir_name
    i = 1
    while candidate.exists():
        candidate = parent / f"{dir_name}--{i}"
        i += 1
    try:
        candidate.mkdir(parents=True)
    except OSError as e:
        logger.error("Directory could not be created: %s (%s)", candidate, repr(e))
        return None
    return Directory(candidate)


def _ensure_accessible_file(path: Path) -> tuple[File | None, _Msg]:
    try:
        if path.is_dir():
            return None, (
                "%s is already a directory, thus a file with the same name cannot exist",
                path,
            )
        exists = path.is_file()
    except OSError as e:
        return None, ("File cannot be accessed: %s (%s)", path, repr(e))
    if not exists:
        directory, msg = _ensure_existence_dir(path.parent)
        if not directory:
            return None, msg
        try:
            logger.info("Creating file: %s", path)
            path.touch()
        except OSError as e:
            return None, ("File could not be created: %s (%s)", path, repr(e))
    if not os.access(path, os.R_OK):
        return None, ("File cannot be read: %s", path)
    if not os.access(path, os.W_OK):
        return None, ("File is not writable: %s", path)
    return File(path), _NO_MSG


def ensure_accessible_file(*path_elem: str | Path) -> File | None:
    """
    Constructs an absolute path from path_elem pointing to a readable and writable file,
    creating it if necessary.

    Returns:
        The file or None if no such file can be created
    """
    file, msg = _ensure_accessible_file(full_path(*path_elem))
    if not file:
        logger.error(*msg)
    return file


def ensure_accessible_file_critical(*path_elem: str | Path) -> File:
    """
    Like :py:func:`ensure_accessible_file`, but exits the program on failure.

    Raises:
        SystemExit: When no such file can be found or created
    """
    file, msg = _ensure_accessible_file(full_path(*path_elem))
    if not file:
        logger.critical(*msg)
        sys.exit(os.EX_IOERR)
    return file


def read_text(path: str | Path) -> str:
    """
    Reads a whole text file.

    Raises:
        OSError: If the file cannot be read
    """
    file = full_path(path)
    logger.info("Reading %s", file)
    return file.read_text(encoding="utf-8")


def write_bytes(data: bytes, *path_elem: str | Path) -> File:
    """
    Writes data to the file described by path_elem, replacing its contents.

    Raises:
        SystemExit: When the file cannot be created or written
    """
    file = ensure_accessible_file_critical(*path_elem)
    try:
        file.write_bytes(data)
    except OSError as e:
        logger.critical("Could not write %s (%s)", file, repr(e))
        sys.exit(os.EX_IOERR)
    logger.info("Wrote %s bytes to %s", len(data), file)
    return file
