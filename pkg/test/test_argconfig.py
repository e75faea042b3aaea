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
import argparse
import os
import unittest
from test.test_helpers import (
    TEST_PROJECT_TMPDIR,
    assertEval,
    create_tmpdirs,
    delete_tmpdirs,
)

import deltacheck.utils.ArgConfig as argconfig
from deltacheck.user_interface import config_args


class TestFunctions(unittest.TestCase):
    def test_short_flag(self):
        parameter = [
            ("--verbosity", "-v"),
            ("--seed", "-s"),
            ("--max-segments", "-ms"),
            ("--finite-differences", "-fd"),
        ]

        assertEval(self, argconfig.short_flag, parameter)
        with self.assertRaises(ValueError):
            argconfig.short_flag("spec")

    def test_obj2toml(self):
        parameter = [
            (True, "true"),
            ("json", "'json'"),
            (1e-10, "1e-10"),
            ([1, 2, 3], "[1, 2, 3]"),
            (["csv", "md"], "['csv', 'md']"),
            ([], "[]"),
        ]

        assertEval(self, argconfig.obj2toml, parameter)


class TestOptions(unittest.TestCase):
    def test_basic_init(self):
        b = argconfig.BasicOption("--seed", "The seed", 0)
        self.assertEqual(b.name, "seed")
        self.assertEqual(b.option_names, ["--seed", "-s"])
        self.assertEqual(b.arguments[argconfig.ArgKey.DEFAULT], 0)

        b = argconfig.BasicOption("--scenario-out", "", short="-so")
        self.assertEqual(b.option_names, ["--scenario-out", "-so"])
        self.assertEqual(b.toml_key, "scenario_out")

        b = argconfig.BasicOption("--version", "", short=None)
        self.assertEqual(b.option_names, ["--version"])

        b = argconfig.BasicOption("spec", "")
        self.assertEqual(b.option_names, ["spec"])

        invalid = [
            ("-s", {}),
            ("spec", {"short": "-s"}),
            ("--spec", {"short": "s"}),
            ("--spec", {"short": "--specification"}),
        ]
        for name, kwargs in invalid:
            with self.subTest(name=name, kwargs=kwargs):
                with self.assertRaises(ValueError):
                    argconfig.BasicOption(name, "", **kwargs)

    def test_to_toml_str(self):
        params = [
            (
                argconfig.BasicOption("--seed", "The seed", 0),
                "\n\n# The seed\n\n#seed = 0\n",
            ),
            (
                argconfig.BasicOption("--out", ""),
                "\n\n#out = \n",
            ),
            (
                argconfig.TypeOption("--max-segments", "Segments", 6),
                "\n\n# Segments\n\n#max_segments = 6\n",
            ),
            (
                argconfig.ChoiceOption("--format", "Format", "json", ["json", "csv"]),
                "\n\n# Format\n\n#format = 'json' # Possible values: 'json' | 'csv'\n",
            ),
            (
                argconfig.BoolOption("--debug", "Debug"),
                "\n\n# Debug\n\n#debug = false # Possible values: true | false\n",
            ),
        ]
        for option, validation in params:
            with self.subTest(option=option.name):
                self.assertEqual(option.to_toml_str(), validation)

    def test_help_is_wrapped(self):
        help_str = " ".join(["tolerance"] * 20)
        lines = argconfig.BasicOption("--rel-tol", help_str, 1e-9).to_toml_str()
        comment_lines = [line for line in lines.splitlines() if line.startswith("# ")]
        self.assertGreater(len(comment_lines), 1)
        self.assertTrue(all(len(line) <= 72 for line in comment_lines))

    def test_choice(self):
        c = argconfig.ChoiceOption("--format", "", "json", ["json", "csv"])
        self.assertTrue(c.toml_valid("csv"))
        self.assertFalse(c.toml_valid("xml"))
        with self.assertRaises(ValueError):
            argconfig.ChoiceOption("--format", "", "xml", ["json", "csv"])

    def test_type(self):
        t = argconfig.TypeOption("--rel-tol", "", 1e-9)
        self.assertIs(t.arguments[argconfig.ArgKey.TYPE], float)
        self.assertTrue(t.toml_valid(1))
        self.assertTrue(t.toml_valid(1e-3))
        self.assertFalse(t.toml_valid(True))
        self.assertFalse(t.toml_valid("1e-3"))

        self.assertTrue(t.from_toml({"rel_tol": 1}))
        self.assertEqual(t.arguments[argconfig.ArgKey.DEFAULT], 1.0)
        self.assertIsInstance(t.arguments[argconfig.ArgKey.DEFAULT], float)

        i = argconfig.TypeOption("--trials", "", 1000)
        self.assertFalse(i.toml_valid(2.5))
        self.assertFalse(i.from_toml({"trials": 2.5}))
        self.assertEqual(i.arguments[argconfig.ArgKey.DEFAULT], 1000)

        with self.assertRaises(ValueError):
            argconfig.TypeOption("--trials", "", None)
        with self.assertRaises(ValueError):
            argconfig.TypeOption("--trials", "", "many", int)

    def test_bool(self):
        b = argconfig.BoolOption("--debug", "")
        self.assertEqual(b.arguments[argconfig.ArgKey.ACTION], "store_true")
        self.assertTrue(b.toml_valid(False))
        self.assertFalse(b.toml_valid("yes"))


class TestArgConfig(unittest.TestCase):
    def setUp(self) -> None:
        if not create_tmpdirs():
            self.fail()
        self.config_file = TEST_PROJECT_TMPDIR / "deltacheck.toml"

    def tearDown(self) -> None:
        if not delete_tmpdirs():
            self.fail()

    def test_generated_file(self):
        parser = config_args(self.config_file)
        text = self.config_file.read_text()
        self.assertTrue(text.lstrip().startswith("#****"))
        for table in ("[check]", "[fuzz]", "[replay]"):
            with self.subTest(table=table):
                self.assertIn(os.linesep + table + os.linesep, text)
        self.assertLess(text.index("#verbosity ="), text.index("[check]"))
        self.assertLess(text.index("[fuzz]"), text.index("#trials = 1000"))

        a = parser.parse_args(["fuzz"])
        self.assertEqual(a.command, "fuzz")
        self.assertEqual(a.trials, 1000)
        self.assertEqual(a.seed, 0)
        self.assertEqual(a.verbosity, "warning")
        self.assertFalse(a.debug)
        self.assertIsNone(a.out)

    def test_config_overrides_defaults(self):
        config_args(self.config_file)
        text = self.config_file.read_text()
        text = text.replace("#verbosity = 'warning'", "verbosity = 'info'")
        text = text.replace("#trials = 1000", "trials = 5")
        text = text.replace("#rel_tol = 1e-09", "rel_tol = 1")
        self.config_file.write_text(text)

        parser = config_args(self.config_file)
        a = parser.parse_args(["fuzz"])
        self.assertEqual(a.verbosity, "info")
        self.assertEqual(a.trials, 5)
        self.assertEqual(a.rel_tol, 1.0)

        a = parser.parse_args(["-v", "error", "fuzz", "--trials", "7"])
        self.assertEqual(a.verbosity, "error")
        self.assertEqual(a.trials, 7)

        a = parser.parse_args(["replay", "-t", "3"])
        self.assertEqual(a.trial, 3)

    def test_invalid_config(self):
        self.config_file.write_text("trials = = 3")
        with self.assertRaises(SystemExit) as e:
            config_args(self.config_file)
        self.assertEqual(e.exception.code, os.EX_DATAERR)

    def test_subcommand_without_table(self):
        self.config_file.write_text("verbosity = 'debug'\n")
        parser = config_args(self.config_file)
        a = parser.parse_args(["check", "--spec", "scenario.json", "-f", "csv"])
        self.assertEqual(a.verbosity, "debug")
        self.assertEqual(a.spec, "scenario.json")
        self.assertEqual(a.format, "csv")

    def test_duplicate_option(self):
        parser = argparse.ArgumentParser(prog="test")
        cfg = argconfig.ArgConfig(parser, self.config_file)
        cfg.add_arg("--spec", "")
        with self.assertRaises(ValueError):
            cfg.add_arg("--spec", "")
