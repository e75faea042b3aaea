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
Module that provides a common interface for CLI-arguments /-options and config files.

Most parameters rarely change between runs (tolerances, output format, fuzzing limits),
so every CLI-option is mirrored by a key in a config-file. The defaults written to the
file are commented out, uncommented keys override the built-in defaults and CLI-flags
override both.

Options belonging to a subcommand are stored in a TOML-table named after the
subcommand. The config-file-format used is TOML (https://toml.io)
"""
import argparse
import copy
import os
import sys
import textwrap
from enum import unique
from pathlib import Path
from typing import Any, Final, Generic, Iterable, TypeVar

from deltacheck.utils.conditional_imports import Self, StrEnum, tomllib
from deltacheck.utils.filesystem import File, ensure_accessible_file_critical


def short_flag(long_name: str) -> str:
    """
    Creates a shortened version of a long flag-name

    Uses the first letter of each word. Words should be separated by '-'.

    Examples:
        '--seed' -> '-s'
        '--max-segments' -> '-ms'

    Raises:
        ValueError: If long_name is a positional argument
    """
    if not long_name.startswith("--"):
        raise ValueError(
            f"There cannot be a short version of a positional argument ('{long_name}')"
        )
    segments = long_name[2:].split("-")
    return "-" + "".join(segment.strip()[0] for segment in segments if segment)


def obj2toml(o: Any) -> str:
    """
    Converts an object to a TOML-string

    Supports (unnested) lists as well as strings, booleans and numbers.
    """
    if isinstance(o, list):
        return "[" + ", ".join(obj2toml_i(e) for e in o) + "]"
    return obj2toml_i(o)


def obj2toml_i(o: Any) -> str:
    if isinstance(o, bool):
        return "true" if o else "false"
    if isinstance(o, str):
        return f"'{o}'"
    return str(o)


@unique
class ArgKey(StrEnum):
    """Parameters of :py:meth:`argparse.ArgumentParser.add_argument` set by
    :py:class:`BasicOption` and its subclasses."""

    HELP = "help"
    DEFAULT = "default"
    CHOICES = "choices"
    TYPE = "type"
    ACTION = "action"


class BasicOption:
    """
    Generates an option in its most basic form

    Useful for e.g. "--spec file.json" for the CLI and "spec = 'file.json'" for the
    TOML-file
    """

    help_wrapper = textwrap.TextWrapper(
        width=72,
        initial_indent="# ",
        subsequent_indent="# ",
        break_long_words=False,
        break_on_hyphens=False,
    )

    def __init__(
        self,
        option_name: str,
        help_str: str,
        default: Any = None,
        short: str | None = "",
    ):
        option_name = option_name.strip()
        is_optional = option_name.startswith("--")
        if option_name.startswith("-") and not is_optional:
            raise ValueError(
                "'option_name' should be the long version of the optional argument."
                " Use '--'."
            )
        self.name = option_name[2:] if is_optional else option_name
        self.option_names = [option_name]

        if short is not None:
            short = short.strip()
            if short:
                if not is_optional:
                    raise ValueError(
                        f"Positional arguments ('{option_name}') cannot have a short"
                        " version!"
                    )
                if not short.startswith("-"):
                    raise ValueError(
                        f"Missing '-' at the beginning of the 'short'-argument {short}"
                    )
                if len(short) >= len(option_name):
                    raise ValueError(f"{short=} is not shorter than {option_name=}")
                self.option_names.append(short)
            elif is_optional:
                self.option_names.append(short_flag(option_name))
        self.arguments: dict[ArgKey, Any] = {
            ArgKey.HELP: help_str,
            ArgKey.DEFAULT: default,
        }

    @property
    def toml_key(self) -> str:
        return self.name.replace("-", "_")

    def add_to_parser(self, parser: argparse.ArgumentParser) -> None:
        arguments = dict(self.arguments)
        if arguments[ArgKey.DEFAULT] is not None:
            arguments[ArgKey.HELP] = (
                f"{arguments[ArgKey.HELP]} (default: '{arguments[ArgKey.DEFAULT]}')"
            )
        parser.add_argument(*self.option_names, **arguments)  # type: ignore[misc]

    def to_toml_str(self) -> str:
        """Generates a commented-out TOML-assignment of the default-value."""
        return self.to_toml_str_intern("")

    def to_toml_str_intern(self, value_comment: str) -> str:
        help_str = BasicOption.help_wrapper.fill(self.arguments[ArgKey.HELP])
        default = self.arguments[ArgKey.DEFAULT]
        default_str = "" if default is None else obj2toml(default)
        return (
            f"\n\n{help_str + os.linesep * 2 if help_str else ''}#{self.toml_key} ="
            f" {default_str}{value_comment}\n"
        )

    def to_toml(self, file: File | None = None) -> None:
        """Appends this Option and its default-value to a TOML-file"""
        if file:
            with file.open("a") as f:
                f.write(self.to_toml_str())

    def toml_valid(self, value: Any) -> bool:
        return bool(value)

    def from_toml(self, toml: dict[str, Any]) -> bool:
        """
        Retrieves a value for this option from a TOML-dict.

        A valid value replaces the current default-value.

        Args:
            toml: A dictionary containing TOML-key-value-pairs (e.g. generated by
                :py:meth:`tomllib.load`)

        Returns:
            True if a valid value could be extracted, False otherwise
        """
        value = toml.get(self.toml_key)
        if self.toml_valid(value):
            self.arguments[ArgKey.DEFAULT] = value
            return True
        return False


T = TypeVar("T")


class ChoiceOption(BasicOption, Generic[T]):
    """
    Option restricted to a set of choices.
    """

    def __init__(
        self,
        option_name: str,
        help_str: str,
        default: T,
        choices: Iterable[T],
        short: str | None = "",
    ):
        choices = list(choices)
        if default not in choices:
            raise ValueError(f"Parameter {default=} not in {choices=}")
        super().__init__(option_name, help_str, default, short)
        self.arguments[ArgKey.CHOICES] = choices

    def to_toml_str(self) -> str:
        choice_str = " | ".join(
            obj2toml(choice) for choice in self.arguments[ArgKey.CHOICES]
        )
        return super().to_toml_str_intern(f" # Possible values: {choice_str}")

    def toml_valid(self, value: Any) -> bool:
        return value in self.arguments[ArgKey.CHOICES]


class TypeOption(BasicOption):
    """
    Option converting its input-string to a type.

    Since the value is also parsed from TOML, only 'int' and 'float' make sense. An
    integer is accepted where a float is expected.
    """

    def __init__(
        self,
        option_name: str,
        help_str: str,
        default: Any,
        t: type | None = None,
        short: str | None = "",
    ):
        if t is None:
            if default is None:
                raise ValueError(
                    "t could not be inferred (since 't' and 'default' are None)"
                )
            t = type(default)
        elif default is not None and not isinstance(default, t):
            raise ValueError(f"Parameter {default=} does not match type {t=}")
        super().__init__(option_name, help_str, default, short)
        self.arguments[ArgKey.TYPE] = t

    def toml_valid(self, value: Any) -> bool:
        if not (t := self.arguments.get(ArgKey.TYPE)):
            raise RuntimeError("'arguments' does not contain 'type' (but it should)")
        if isinstance(value, bool):
            return t is bool
        if t is float and isinstance(value, int):
            return True
        return isinstance(value, t)

    def from_toml(self, toml: dict[str, Any]) -> bool:
        if valid := super().from_toml(toml):
            self.arguments[ArgKey.DEFAULT] = self.arguments[ArgKey.TYPE](
                self.arguments[ArgKey.DEFAULT]
            )
        return valid


class BoolOption(BasicOption):
    """
    Flag-option ('store_true').
    """

    def __init__(
        self,
        option_name: str,
        help_str: str,
        default: bool = False,
        short: str | None = "",
    ):
        super().__init__(option_name, help_str, default, short)
        self.arguments[ArgKey.ACTION] = "store_true"

    def to_toml_str(self) -> str:
        return super().to_toml_str_intern(" # Possible values: true | false")

    def toml_valid(self, value: Any) -> bool:
        return value in (True, False)


CFG_PREAMBLE: Final = textwrap.dedent(
    """
    #*****************************************************************************
    # Configuration file for the program %s
    #
    # Every option listed here has a CLI-pendant that it mirrors in function.
    # If an option is defined here it will override the default-value for that
    # option. Options defined here will be overridden by CLI arguments.
    #
    # Options of a subcommand live in the table named after it ([check], [fuzz],
    # ...). Global options have to stay above the first table.
    #
    # To recover the original file simply delete this file and run the program.
    # (e.g. '%s --help')
    #
    # For information about this file-format, please visit: https://toml.io
    #*****************************************************************************
    """
)
"""
Help text explaining how the config-file works. Takes the program name twice.
"""


class ArgConfig:
    """
    Unified API for CLI-arguments and TOML-config-files.

    If the config-file exists, every option that is added tries to retrieve its
    default-value from it. Otherwise the file is created and every option writes a
    commented-out TOML-key-value-pair of itself to it while being added.

    All global options have to be added before the first call of
    :py:meth:`subcommand`, since TOML-keys below a table header belong to that table.
    """

    def __init__(
        self,
        parser: argparse.ArgumentParser,
        config_file: Path,
        commands_required: bool = True,
    ):
        self.parser = parser
        self.commands_required = commands_required
        self.existed_before = config_file.is_file()
        self.file = ensure_accessible_file_critical(config_file)
        self.toml: dict[str, Any] = {}
        self._subparsers: Any = None
        if self.existed_before:
            with self.file.open("rb") as cfg:
                try:
                    self.toml = tomllib.load(cfg)
                except tomllib.TOMLDecodeError as e:
                    msg = (
                        f"The config-file ({config_file}) seems to be misconfigured"
                        f" ({e}). Fix the error or delete the file and generate a new"
                        f" one by running the program with any argument (eg."
                        f" '{parser.prog} --help')"
                    )
                    print(msg, file=sys.stderr)
                    sys.exit(os.EX_DATAERR)
        else:
            try:
                self.file.write_text(CFG_PREAMBLE % (parser.prog, parser.prog))
            except Exception as e:
                if self.file.is_file():
                    os.remove(self.file)
                raise e

    def error_exit(self) -> None:
        if not self.existed_before:
            try:
                os.remove(self.file)
            except FileNotFoundError:
                pass

    def subcommand(self, name: str, help_str: str) -> Self:
        """
        Registers a subcommand and returns an ArgConfig adding options to it.

        The options of the subcommand are read from and written to the TOML-table
        '[name]'. The name of the chosen subcommand is stored as 'command' in the
        parsed namespace.
        """
        if self._subparsers is None:
            self._subparsers = self.parser.add_subparsers(
                dest="command", metavar="COMMAND", required=self.commands_required
            )
        sub = copy.copy(self)
        sub._subparsers = None
        sub.parser = self._subparsers.add_parser(
            name, help=help_str, description=help_str
        )
        if self.existed_before:
            table = self.toml.get(name, {})
            sub.toml = table if isinstance(table, dict) else {}
        else:
            with self.file.open("a") as f:
                f.write(f"\n\n{BasicOption.help_wrapper.fill(help_str)}\n[{name}]\n")
        return sub

    def _add_option(self, option: type, args: tuple[Any, ...]) -> None:
        try:
            o = option(*args)
            if self.existed_before:
                o.from_toml(self.toml)
            else:
                o.to_toml(self.file)
            o.add_to_parser(self.parser)
        except (argparse.ArgumentError, ValueError) as e:
            self.error_exit()
            raise ValueError(e) from None
        except Exception:
            self.error_exit()
            raise

    def add_arg(
        self, name: str, help_str: str, default: Any = None, short: str | None = ""
    ) -> None:
        """
        Register a standard argument expecting a string value.

        Args:
            name: The name of the option. Sets the flag '--name' and the TOML-key
                'name' (with '-' replaced by '_').
            help_str: Help-text of the flag and comment above the TOML-key.
            default: The value used if neither CLI nor TOML provide one.
            short: The short version of the flag. 'None' disables it, an empty string
                derives it from 'name' (see :py:func:`short_flag`).
        """
        self._add_option(BasicOption, (name, help_str, default, short))

    def add_choice(
        self,
        name: str,
        help_str: str,
        default: T,
        choices: Iterable[T],
        short: str | None = "",
    ) -> None:
        """
        Register a choice from a restricted set of values. See :py:meth:`add_arg`.
        """
        self._add_option(ChoiceOption, (name, help_str, default, choices, short))

    def add_type(
        self,
        name: str,
        help_str: str,
        default: Any,
        t: type | None = None,
        short: str | None = "",
    ) -> None:
        """
        Register an argument of type 't' (int or float). See :py:meth:`add_arg`.
        """
        self._add_option(TypeOption, (name, help_str, default, t, short))

    def add_bool(
        self, name: str, help_str: str, default: bool = False, short: str | None = ""
    ) -> None:
        """
        Register a boolean flag. See :py:meth:`add_arg`.
        """
        self._add_option(BoolOption, (name, help_str, default, short))
