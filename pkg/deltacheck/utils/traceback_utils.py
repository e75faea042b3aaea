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
Helpers for making tracebacks readable in logs and error reports.

Paths are cut down to the part below a chosen directory and stack frames shared by
several exceptions are printed only once.
"""
import os
import traceback
from copy import deepcopy
from os import linesep


def shorten_paths(
    stack: traceback.StackSummary,
    first_visible_dir: str | None = None,
    skip_first: bool = False,
) -> traceback.StackSummary:
    """
    Replaces the leading part of every frame's filename with '...'.

    Args:
        stack: The frames to shorten (modified in place)
        first_visible_dir: The first directory that stays visible. If None, the
            innermost directory shared by all frames is used
        skip_first: Leave the first frame untouched

    Returns:
        The modified stack
    """
    if first_visible_dir is None:
        shared = os.path.commonpath([frame.filename for frame in stack])
        first_visible_dir = os.path.basename(shared)

    for frame in stack[1 if skip_first else 0 :]:
        head, sep, tail = frame.filename.partition(first_visible_dir)
        if not sep:
            frame.filename = os.path.join("...", os.path.basename(head))
        else:
            frame.filename = os.path.join(
                "...", first_visible_dir, tail.lstrip(os.sep)
            )
    return stack


def get_shared_frames(
    tb_exes: list[traceback.TracebackException],
) -> traceback.StackSummary:
    """Returns the outermost frames all tracebacks have in common (minus the last)."""
    stacks = [tb_ex.stack for tb_ex in tb_exes]
    shortest = deepcopy(min(stacks, key=len))
    shared_len = len(shortest) - 1
    for i, frame in enumerate(shortest):
        if any(stack[i] != frame for stack in stacks):
            shared_len = max(i - 1, 0)
            break
    return traceback.StackSummary.from_list(shortest[: max(shared_len, 0)])


def format_stacks(
    tb_exes: list[traceback.TracebackException],
    shared_stack: traceback.StackSummary,
    first_visible_dir: str | None = None,
) -> list[list[str]]:
    """
    Formats several tracebacks, printing the shared frames only for the first one.

    Args:
        tb_exes: The tracebacks
        shared_stack: The frames returned by :py:func:`get_shared_frames`
        first_visible_dir: Passed on to :py:func:`shorten_paths`

    Returns:
        One list of formatted lines per traceback
    """
    shared_stack_len = len(shared_stack)
    tb_exes_copy = deepcopy(tb_exes)
    for tb_ex in tb_exes_copy:
        tb_ex.stack = traceback.StackSummary.from_list(tb_ex.stack[shared_stack_len:])
        if first_visible_dir:
            tb_ex.stack = shorten_paths(tb_ex.stack, first_visible_dir)
    if first_visible_dir:
        shared_stack = shorten_paths(shared_stack, first_visible_dir)
    first_stack = shared_stack.format() + list(tb_exes_copy[0].format())[1:]

    sep = ["\t..." + linesep] if shared_stack else []
    stacks = [sep + list(tb_ex.format())[1:] for tb_ex in tb_exes_copy[1:]]

    return [first_stack] + stacks
