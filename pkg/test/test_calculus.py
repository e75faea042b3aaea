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
import unittest
from test.test_helpers import (
    MIXED,
    Q_LATTICE,
    UNIT_INTERVAL,
    Z_WINDOW,
    assertClose,
    coefficient_lists,
    fn,
    mixed_scales,
    polynomial,
)

from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

import deltacheck.calculus as calc
from deltacheck.calculus import DEFAULT_CONFIG, QuadratureConfig, ScaleKind
from deltacheck.exprparse import ExprFunction
from deltacheck.timescale import (
    BadBase,
    PointNotInScale,
    TimeScale,
    integers_window,
    make_timescale,
    q_lattice,
    real_interval,
    sigma,
)

SQUARE = fn("t^2")
IDENTITY = fn("t")


def assertTight(
    testcase: unittest.TestCase, value: float, expected: float, *magnitudes: float
) -> None:
    scale = 1.0 + max((abs(m) for m in magnitudes), default=0.0)
    assertClose(testcase, value, expected, rel=0.0, abs_tol=1e-8 * scale)


def magnitude(coefficients: list[float], reach: float = 9.0) -> float:
    """Bound of |p| and |p'| on [-reach, reach] for p with these coefficients"""
    return sum(abs(c) * (k + 1) * reach**k for k, c in enumerate(coefficients))


class TestConfig(unittest.TestCase):
    def test_defaults(self) -> None:
        self.assertEqual(
            DEFAULT_CONFIG.model_dump(),
            {
                "abs_tol": 1e-10,
                "rel_tol": 1e-9,
                "max_depth": 40,
                "fd_step": 1e-6,
                "dense_samples": 1024,
                "symbolic_dense": True,
            },
        )

    def test_validation(self) -> None:
        for bad in (
            {"abs_tol": 0},
            {"rel_tol": -1e-9},
            {"max_depth": 0},
            {"fd_step": 0.0},
            {"dense_samples": 1},
            {"tolerance": 1e-3},
        ):
            with self.subTest(bad=bad), self.assertRaises(ValidationError):
                QuadratureConfig.model_validate(bad)

    def test_frozen_and_hashable(self) -> None:
        with self.assertRaises(ValidationError):
            DEFAULT_CONFIG.abs_tol = 1.0  # type: ignore [misc]
        self.assertEqual(hash(QuadratureConfig()), hash(DEFAULT_CONFIG))


class TestDerivative(unittest.TestCase):
    def test_scattered_points(self) -> None:
        self.assertEqual(calc.delta_derivative(Z_WINDOW, SQUARE, 3), 7)
        self.assertEqual(calc.delta_derivative(Q_LATTICE, SQUARE, 4), 12)
        self.assertEqual(calc.delta_derivative(MIXED, SQUARE, 1), 3)
        self.assertEqual(calc.delta_derivative(MIXED, SQUARE, 2), 5)

    def test_dense_points(self) -> None:
        tol = DEFAULT_CONFIG.abs_tol
        for t, expected in ((0.5, 1.0), (0, 0.0), (0.25, 0.5)):
            with self.subTest(t=t):
                value = calc.delta_derivative(UNIT_INTERVAL, lambda t: t * t, t)
                assertClose(self, value, expected, rel=0.0, abs_tol=tol)
        # no room to the right of the maximum, the backward side is used
        value = calc.delta_derivative(UNIT_INTERVAL, lambda t: t * t, 1)
        assertClose(self, value, 2.0, rel=0.0, abs_tol=tol)
        for t in (0.0, 0.1, 0.7, 1.0):
            with self.subTest(t=t):
                value = calc.delta_derivative(UNIT_INTERVAL, lambda x: x, t)
                self.assertEqual(value, 1.0)

    def test_dense_points_large_values(self) -> None:
        T = real_interval(0, 10)
        for t in (1.0, 5.5, 9.999, 10.0):
            with self.subTest(t=t):
                value = calc.delta_derivative(T, math.exp, t)
                assertClose(self, value, math.exp(t), rel=5e-9, abs_tol=0.0)
        # close to an edge the step shrinks with the room
        T = real_interval(2, 2 + 1e-7)
        value = calc.delta_derivative(T, lambda t: t * t, T.b)
        assertClose(self, value, 2 * T.b, rel=1e-7, abs_tol=0.0)

    def test_errors(self) -> None:
        with self.assertRaises(calc.NotInKappa):
            calc.delta_derivative(Z_WINDOW, SQUARE, 5)
        with self.assertRaises(PointNotInScale):
            calc.delta_derivative(MIXED, SQUARE, 1.5)
        with self.assertRaises(calc.NumericalDivergence):
            calc.delta_derivative(UNIT_INTERVAL, lambda t: math.sqrt(abs(t - 0.5)), 0.5)

    def test_derivative_function(self) -> None:
        d_symbolic = calc.delta_derivative_function(MIXED, SQUARE)
        d_numeric = calc.delta_derivative_function(
            MIXED, SQUARE, QuadratureConfig(symbolic_dense=False)
        )
        for t in (0.0, 0.5, 1.0, 2.0, 3.25):
            with self.subTest(t=t):
                assertClose(self, d_symbolic(t), d_numeric(t), abs_tol=1e-6)
        self.assertEqual(d_symbolic(1.0), 3.0)
        self.assertEqual(d_symbolic.on_dense(1.0), 2.0)

    @settings(derandomize=True, max_examples=50, deadline=None)
    @given(mixed_scales(), coefficient_lists)
    def test_scattered_quotient_is_exact(
        self, T: TimeScale, coefficients: list[float]
    ) -> None:
        f = polynomial(coefficients)
        for t in T.scattered_points():
            s = sigma(T, t)
            self.assertEqual(calc.delta_derivative(T, f, t), (f(s) - f(t)) / (s - t))


class TestFSigma(unittest.TestCase):
    def test_values(self) -> None:
        self.assertEqual(calc.f_sigma(Z_WINDOW, SQUARE)(2), 9)
        self.assertEqual(calc.f_sigma(q_lattice(2, 0, 2), IDENTITY)(2), 4)
        self.assertEqual(calc.f_sigma(MIXED, SQUARE)(1), 4)
        for t in (0, 0.3, 1):
            self.assertEqual(calc.f_sigma(UNIT_INTERVAL, SQUARE)(t), SQUARE(t))

    def test_dense_rule_is_f(self) -> None:
        fs = calc.f_sigma(MIXED, SQUARE)
        self.assertIs(fs.on_dense, SQUARE)
        with self.assertRaises(PointNotInScale):
            fs(1.5)

    def test_products(self) -> None:
        product = calc.f_sigma(MIXED, SQUARE) * IDENTITY
        self.assertEqual(product(1), 4)
        self.assertEqual(product.on_dense(1), 1)
        self.assertEqual((IDENTITY * calc.f_sigma(MIXED, IDENTITY))(2), 6)


class TestIntegral(unittest.TestCase):
    def test_oracles(self) -> None:
        self.assertEqual(calc.delta_integral(Z_WINDOW, SQUARE, 0, 3), 5)
        value = calc.delta_integral(UNIT_INTERVAL, SQUARE, 0, 1)
        assertClose(self, value, 1 / 3, abs_tol=1e-10)
        T = make_timescale([(0, 1), (2, 2)])
        assertClose(self, calc.delta_integral(T, SQUARE, 0, 2), 4 / 3, abs_tol=1e-10)
        self.assertEqual(calc.delta_integral(MIXED, SQUARE, 2, 2), 0.0)
        self.assertEqual(calc.delta_integral(MIXED, SQUARE, 0.5, 0.5), 0.0)

    def test_partial_segments(self) -> None:
        # [0.5, 1] + mu(1)*f(1) + mu(2)*f(2) + [3, 3.5]
        expected = (1 - 0.125) / 3 + 1 + 4 + (3.5**3 - 27) / 3
        value = calc.delta_integral(MIXED, SQUARE, 0.5, 3.5)
        assertClose(self, value, expected, rel=1e-12)

    def test_errors(self) -> None:
        with self.assertRaises(PointNotInScale):
            calc.delta_integral(MIXED, SQUARE, 0, 1.5)
        with self.assertRaises(calc.QuadratureFailure):
            strict = QuadratureConfig(max_depth=2, abs_tol=1e-14, rel_tol=1e-14)
            calc.simpson(math.sqrt, 0, 1, strict)

    def test_simpson(self) -> None:
        assertClose(self, calc.simpson(math.sin, 0, math.pi), 2.0, rel=1e-9)
        self.assertEqual(calc.simpson(math.sin, 1, 1), 0.0)
        shallow = QuadratureConfig(max_depth=1)
        assertClose(self, calc.simpson(lambda t: 3 * t**2, 0, 2, shallow), 8.0)

    def test_integers_are_exact_sums(self) -> None:
        T = integers_window(-3, 7)
        f = fn("t^3 - 2*t + 1")
        forward_sum = sum(f(j) for j in range(-3, 7))
        self.assertEqual(calc.delta_integral(T, f, -3, 7), forward_sum)
        self.assertEqual(calc.delta_integral(T, f, 7, -3), -forward_sum)

    @settings(derandomize=True, max_examples=50, deadline=None)
    @given(
        coefficient_lists,
        st.floats(min_value=-2, max_value=2),
        st.floats(min_value=0.1, max_value=3),
    )
    def test_real_interval_matches_antiderivative(
        self, coefficients: list[float], a: float, width: float
    ) -> None:
        T = real_interval(a, a + width)
        f = polynomial(coefficients)

        def antiderivative(x: float) -> float:
            return sum(c * x ** (k + 1) / (k + 1) for k, c in enumerate(coefficients))

        expected = antiderivative(T.b) - antiderivative(T.a)
        assertTight(
            self, calc.delta_integral(T, f, T.a, T.b), expected, magnitude(coefficients)
        )


class TestIntegralProperties(unittest.TestCase):
    @settings(derandomize=True, max_examples=100, deadline=None)
    @given(
        mixed_scales(),
        coefficient_lists,
        coefficient_lists,
        st.integers(min_value=-3, max_value=3),
        st.integers(min_value=-3, max_value=3),
        st.data(),
    )
    def test_properties(
        self,
        T: TimeScale,
        cf: list[float],
        cg: list[float],
        alpha: int,
        beta: int,
        data: st.DataObject,
    ) -> None:
        f, g = polynomial(cf), polynomial(cg)
        picks = st.lists(st.sampled_from(T.points()), min_size=3, max_size=3)
        u, c, v = sorted(data.draw(picks))

        def integral(
            h: calc.ScaleFunction | calc.RealFunction, x: float, y: float
        ) -> float:
            return calc.delta_integral(T, h, x, y)

        int_f, int_g = integral(f, u, v), integral(g, u, v)
        bound_f = magnitude(cf) * (1 + T.length)
        bound_fg = magnitude(cf) * magnitude(cg) * (1 + T.length)
        with self.subTest("zero width"):
            self.assertEqual(integral(f, c, c), 0.0)
        with self.subTest("orientation"):
            self.assertEqual(integral(f, v, u), -int_f)
        with self.subTest("linearity"):
            padded_f = cf + [0.0] * (len(cg) - len(cf))
            padded_g = cg + [0.0] * (len(cf) - len(cg))
            combined = [alpha * x + beta * y for x, y in zip(padded_f, padded_g)]
            assertTight(
                self,
                integral(polynomial(combined), u, v),
                alpha * int_f + beta * int_g,
                3 * bound_f,
                3 * magnitude(cg) * (1 + T.length),
            )
        with self.subTest("additivity"):
            assertTight(self, integral(f, u, c) + integral(f, c, v), int_f, bound_f)
        with self.subTest("integration by parts"):
            f_dg = calc.as_scale_function(f) * calc.delta_derivative_function(T, g)
            df_gs = calc.delta_derivative_function(T, f) * calc.f_sigma(T, g)
            rhs = f(v) * g(v) - f(u) * g(u) - integral(df_gs, u, v)
            assertTight(self, integral(f_dg, u, v), rhs, bound_fg)


class TestMonomials(unittest.TestCase):
    def test_oracles(self) -> None:
        self.assertEqual(calc.monomial_h(MIXED, 0, 3.5, 0.5), 1.0)
        self.assertEqual(calc.monomial_h(Z_WINDOW, 2, 5, 0), 10)
        h2 = calc.monomial_h(real_interval(0, 3), 2, 3, 1)
        assertClose(self, h2, 2.0, abs_tol=1e-10)
        assertClose(self, calc.monomial_h(Q_LATTICE, 2, 4, 1), 2.0, abs_tol=1e-12)

    def test_identities(self) -> None:
        for T in (MIXED, Z_WINDOW, Q_LATTICE):
            for s in T.points():
                for t in T.points():
                    with self.subTest(T=T, t=t, s=s):
                        h1 = calc.monomial_h(T, 1, t, s)
                        assertClose(self, h1, t - s, abs_tol=1e-10)
                for k in (1, 2, 3):
                    self.assertEqual(calc.monomial_h(T, k, s, s), 0.0)

    def test_memo(self) -> None:
        self.assertIs(
            calc.get_monomials(Z_WINDOW, DEFAULT_CONFIG),
            calc.get_monomials(Z_WINDOW, DEFAULT_CONFIG),
        )
        monomials = calc.Monomials(Z_WINDOW)
        self.assertEqual(monomials(2, 4, 1), 3.0)
        self.assertEqual(monomials._memo[(2, 1.0)], (0.0, -1.0, -1.0, 0.0, 2.0, 5.0))
        for t in Z_WINDOW.points():
            monomials(2, t, 1)
            monomials(3, t, 1)
        # one entry per (k, s), however many points were asked for
        self.assertEqual(sorted(monomials._memo), [(2, 1.0), (3, 1.0)])
        with self.assertRaises(ValueError):
            monomials(-1, 4, 1)

    def test_memo_on_dense_segments(self) -> None:
        monomials = calc.Monomials(MIXED)
        for t in (0.25, 0.5, 3.5, 4.0):
            with self.subTest(t=t):
                direct = calc.delta_integral(MIXED, lambda x: x - 0.5, 0.5, t)
                assertClose(self, monomials(2, t, 0.5), direct, rel=0.0, abs_tol=1e-10)
        self.assertEqual(list(monomials._memo), [(2, 0.5)])

    @settings(derandomize=True, max_examples=50, deadline=None)
    @given(st.floats(min_value=0, max_value=3), st.floats(min_value=0, max_value=3))
    def test_continuous_closed_form(self, t: float, s: float) -> None:
        T = real_interval(0, 3)
        assertClose(
            self,
            calc.monomial_h(T, 2, t, s),
            calc.h2_closed_form(ScaleKind.CONTINUOUS, t, s),
            rel=1e-9,
            abs_tol=1e-9,
        )

    @settings(derandomize=True, max_examples=50, deadline=None)
    @given(
        st.integers(min_value=-4, max_value=6), st.integers(min_value=-4, max_value=6)
    )
    def test_discrete_closed_form(self, t: int, s: int) -> None:
        T = integers_window(-4, 6)
        self.assertEqual(
            calc.monomial_h(T, 2, t, s), calc.h2_closed_form(ScaleKind.DISCRETE, t, s)
        )

    @settings(derandomize=True, max_examples=50, deadline=None)
    @given(
        st.sampled_from([1.5, 2.0, 3.0]),
        st.integers(min_value=0, max_value=4),
        st.integers(min_value=0, max_value=4),
        st.integers(min_value=1, max_value=3),
    )
    def test_quantum_closed_form(self, q: float, i: int, j: int, k: int) -> None:
        T = q_lattice(q, 0, 4)
        t, s = T.points()[i], T.points()[j]
        expected = calc.hk_closed_form(ScaleKind.QUANTUM, k, t, s, q)
        assertClose(self, calc.monomial_h(T, k, t, s), expected, rel=1e-9, abs_tol=1e-9)
        assertClose(self, calc.hk_quantum_product(q, k, t, s), expected)


class TestClosedForms(unittest.TestCase):
    def test_h2(self) -> None:
        self.assertEqual(calc.h2_closed_form(ScaleKind.CONTINUOUS, 3, 1), 2)
        self.assertEqual(calc.h2_closed_form(ScaleKind.DISCRETE, 5, 0), 10)
        self.assertEqual(calc.h2_closed_form(ScaleKind.QUANTUM, 4, 1, 2), 2)
        by_name = calc.h2_closed_form("discrete", 0, 5)  # type: ignore [arg-type]
        self.assertEqual(by_name, 15)

    def test_hk(self) -> None:
        self.assertEqual(calc.hk_closed_form(ScaleKind.CONTINUOUS, 3, 3, 0), 4.5)
        self.assertEqual(calc.hk_closed_form(ScaleKind.DISCRETE, 3, 5, 0), 10)
        self.assertEqual(calc.hk_closed_form(ScaleKind.DISCRETE, 0, 5, 0), 1)
        self.assertEqual(calc.hk_quantum_product(2, 1, 8, 2), 6)

    def test_errors(self) -> None:
        with self.assertRaises(BadBase):
            calc.h2_closed_form(ScaleKind.QUANTUM, 4, 1)
        with self.assertRaises(BadBase):
            calc.h2_closed_form(ScaleKind.QUANTUM, 4, 1, 1)
        with self.assertRaises(calc.KindMismatch):
            calc.h2_closed_form(ScaleKind.QUANTUM, 4, 3, 2)
        with self.assertRaises(calc.KindMismatch):
            calc.h2_closed_form(ScaleKind.DISCRETE, 2.5, 0)
        with self.assertRaises(calc.KindMismatch):
            calc.h2_closed_form(ScaleKind.CONTINUOUS, 2, 0, 2)
        with self.assertRaises(ValueError):
            calc.h2_closed_form("fractal", 2, 0)  # type: ignore [arg-type]


class TestSupInf(unittest.TestCase):
    def test_oracles(self) -> None:
        self.assertEqual(calc.delta_sup_inf(Z_WINDOW, SQUARE), (1, 9))
        self.assertEqual(calc.delta_sup_inf(UNIT_INTERVAL, IDENTITY), (1, 1))
        self.assertEqual(calc.delta_sup_inf(q_lattice(2, 0, 2), SQUARE), (3, 6))

    def test_finite_differences(self) -> None:
        tol = DEFAULT_CONFIG.abs_tol
        gamma, Gamma = calc.delta_sup_inf(UNIT_INTERVAL, lambda t: t)
        assertClose(self, gamma, 1.0, rel=0.0, abs_tol=tol)
        assertClose(self, Gamma, 1.0, rel=0.0, abs_tol=tol)
        gamma, Gamma = calc.delta_sup_inf(
            UNIT_INTERVAL, lambda t: t * t, QuadratureConfig(dense_samples=11)
        )
        assertClose(self, gamma, 0.0, rel=0.0, abs_tol=tol)
        assertClose(self, Gamma, 2.0, rel=0.0, abs_tol=tol)

    def test_mixed_grid(self) -> None:
        cfg = QuadratureConfig(dense_samples=5)
        derivative = calc.delta_derivative_function(MIXED, SQUARE, cfg)
        values = calc.grid_values(MIXED, derivative, cfg)
        # scattered 1 and 2, then 5 samples on [0, 1] and on [3, 4]
        self.assertEqual(len(values), 12)
        self.assertEqual(list(values[:2]), [3.0, 5.0])
        self.assertEqual(calc.delta_sup_inf(MIXED, SQUARE, cfg), (0.0, 8.0))

    def test_kappa_grid(self) -> None:
        values = calc.grid_values(Z_WINDOW, SQUARE, kappa=False)
        self.assertEqual(list(values), [0, 1, 4, 9, 16, 25])

    def test_cached(self) -> None:
        f = ExprFunction.from_text("t^3")
        first = calc.delta_sup_inf(Z_WINDOW, f)
        self.assertIs(calc.delta_sup_inf(Z_WINDOW, f), first)
