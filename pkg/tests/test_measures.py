"""Scalar measure transforms and path-space measures."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from idtlab import (
    DiscretePathMeasure,
    LevyDensity,
    LevyPointMasses,
    LogUniform,
    PathFunctional,
    PointMasses,
    PowerTailLower,
    exp_mixture_density,
    idt_scaling_check,
    lift_path_measure,
    subordinator_path_measure,
    transform_levy_measure,
)
from idtlab.errors import DivergentTransform, UnsupportedMeasureSupport
from idtlab.measures import capped_positive, functional_from_json, indicator_above, positive_part
from idtlab.paths import SamplePath


def unit_jump_atom(jump_time=1.0, size=1.0):
    return SamplePath([0.0, jump_time], [0.0, size])


class TestTransform:
    def test_point_mass_tail_block(self):
        nu = LevyPointMasses([(1.0, 1.0)])
        mu = PointMasses([(2.5, 1.0)])
        f = lambda y: np.where(np.asarray(y) > 0.5, 1.0, 0.0)
        assert transform_levy_measure(nu, mu, f) == pytest.approx(2.5)

    def test_zero_function(self):
        nu = LevyPointMasses([(1.0, 2.0)])
        mu = PointMasses([(1.0, 1.0)])
        assert transform_levy_measure(nu, mu, lambda y: np.zeros_like(np.asarray(y))) == 0.0

    def test_requires_f_zero_at_zero(self):
        nu = LevyPointMasses([(1.0, 1.0)])
        mu = PointMasses([(1.0, 1.0)])
        with pytest.raises(ValueError):
            transform_levy_measure(nu, mu, lambda y: np.ones_like(np.asarray(y)))

    def test_formal_density_identity(self):
        # log-measure transform of the formal inverse-sqrt density matches
        # the closed mixture density integrated against f
        nu = LevyDensity.inverse_sqrt()
        mu = LogUniform(0.0, 1.0)
        f = lambda y: np.where(
            (np.asarray(y) >= 0.5) & (np.asarray(y) <= 5.0),
            np.sin(np.asarray(y)) ** 2, 0.0,
        )
        lhs = transform_levy_measure(nu, mu, f, f_support=(0.5, 5.0))
        rhs = quad(lambda v: math.sin(v) ** 2 / math.sqrt(2.0 * v), 0.5, 5.0)[0]
        assert lhs == pytest.approx(rhs, rel=1e-3)

    def test_dual_routes_agree(self):
        # segment enumeration vs generic h-quadrature, smooth f
        nu = LevyPointMasses([(0.7, 1.2), (2.0, 0.4)])
        mu = PointMasses([(0.5, 0.8), (1.5, 1.1)])
        f = lambda y: np.asarray(y) ** 2 * np.exp(-np.asarray(y))
        a = transform_levy_measure(nu, mu, f, method="segments")
        b = transform_levy_measure(nu, mu, f, method="quadrature")
        assert abs(a - b) < 1e-8

    def test_linearity_in_nu_and_f(self):
        mu = PointMasses([(1.0, 1.0), (3.0, 0.5)])
        nu1 = LevyPointMasses([(0.5, 1.0)])
        nu2 = LevyPointMasses([(2.0, 2.0)])
        both = LevyPointMasses([(0.5, 1.0), (2.0, 2.0)])
        f1 = lambda y: np.asarray(y) ** 2
        f2 = lambda y: np.abs(np.asarray(y)) ** 0.5
        fsum = lambda y: f1(y) + f2(y)
        assert transform_levy_measure(both, mu, f1) == pytest.approx(
            transform_levy_measure(nu1, mu, f1) + transform_levy_measure(nu2, mu, f1)
        )
        assert transform_levy_measure(nu1, mu, fsum) == pytest.approx(
            transform_levy_measure(nu1, mu, f1) + transform_levy_measure(nu1, mu, f2)
        )

    def test_complex_integrand(self):
        # cf-style integrand: value must be exp-free and finite
        nu = LevyPointMasses([(1.0, 1.0)])
        mu = PointMasses([(2.0, 1.0)])
        z = 0.5
        val = transform_levy_measure(nu, mu, lambda y: np.exp(1j * z * np.asarray(y)) - 1.0)
        assert val == pytest.approx(2.0 * (np.exp(1j * z) - 1.0))

    def test_unbounded_mu_rejected(self):
        nu = LevyPointMasses([(1.0, 1.0)])

        class FakeMu:
            support_end = math.inf

        with pytest.raises((UnsupportedMeasureSupport, TypeError)):
            transform_levy_measure(nu, FakeMu(), lambda y: np.asarray(y))


class TestExpMixture:
    def test_inverse_sqrt_closed_form(self):
        nu = LevyDensity.inverse_sqrt()
        assert exp_mixture_density(nu, 2.0) == pytest.approx(0.5, rel=1e-6)
        assert exp_mixture_density(nu, 0.5) == pytest.approx(1.0, rel=1e-6)

    def test_point_mass(self):
        nu = LevyPointMasses([(1.0, 3.0)])
        assert exp_mixture_density(nu, 1.0) == pytest.approx(3.0 * math.exp(-1.0))

    def test_log_grid_sweep(self):
        nu = LevyDensity.inverse_sqrt()
        for v in np.geomspace(0.1, 10.0, 20):
            closed = 1.0 / math.sqrt(2.0 * v)
            assert abs(exp_mixture_density(nu, v) - closed) / closed < 1e-3

    def test_integrability_guard(self):
        with pytest.raises(DivergentTransform):
            LevyDensity(lambda x: np.asarray(x) ** -3.0, (0.0, 1.0), formal=False)

    def test_formal_flag_skips_guard(self):
        LevyDensity(lambda x: np.asarray(x) ** -3.0, (0.0, 1.0), formal=True)


class TestPathMeasures:
    def test_lift_measures_rescaling_set(self):
        n = DiscretePathMeasure([1.0], [unit_jump_atom()])
        m = lift_path_measure(n, np.linspace(0.0, 4.0, 161))
        f = indicator_above(2.0)
        # mass of {u <= 2} since y(2/u) > 0 iff u <= 2
        assert m.integral(f) == pytest.approx(2.0, abs=m.resolution)

    def test_zero_functional(self):
        n = DiscretePathMeasure([1.0], [unit_jump_atom()])
        m = lift_path_measure(n, np.linspace(0.0, 4.0, 81))
        z = PathFunctional((1.0,), lambda v: 0.0, {"kind": "zero"})
        assert m.integral(z) == 0.0

    def test_scaling_identity_after_lift(self):
        n = DiscretePathMeasure([1.0], [unit_jump_atom()])
        m = lift_path_measure(n, np.linspace(0.0, 7.5, 251))
        rep = idt_scaling_check(m, 2, [indicator_above(2.0)])
        assert rep.passed
        assert rep.statistic <= 2.0 * m.resolution

    def test_residual_halves_under_refinement(self):
        n = DiscretePathMeasure([1.0], [unit_jump_atom()])
        f = [indicator_above(2.0)]
        for nn in (2, 3):
            coarse = idt_scaling_check(
                lift_path_measure(n, np.linspace(0.0, 7.5, 251)), nn, f
            ).statistic
            fine = idt_scaling_check(
                lift_path_measure(n, np.linspace(0.0, 7.5, 501)), nn, f
            ).statistic
            assert 0.35 <= fine / coarse <= 0.65

    def test_unlifted_atom_fails(self):
        n = DiscretePathMeasure([1.0], [unit_jump_atom()])
        rep = idt_scaling_check(n, 2, [indicator_above(0.75)], tol=0.1)
        assert not rep.passed
        assert rep.statistic == pytest.approx(1.0)

    def test_n_equals_one_is_exact(self):
        n = DiscretePathMeasure([1.0], [unit_jump_atom()])
        m = lift_path_measure(n, np.linspace(0.0, 4.0, 41))
        rep = idt_scaling_check(m, 1, [indicator_above(1.5)])
        assert rep.statistic == 0.0

    def test_json_round_trip(self):
        n = DiscretePathMeasure([1.0, 0.5],
                                [unit_jump_atom(), unit_jump_atom(2.0, 3.0)])
        back = DiscretePathMeasure.from_json(n.to_json())
        assert np.array_equal(back.weights, n.weights)
        assert np.array_equal(back.paths[1].values, n.paths[1].values)

    def test_functional_json(self):
        f = functional_from_json({"kind": "capped-positive", "time": 1.5, "cap": 2.0})
        assert f.apply_values([5.0]) == 2.0
        g = functional_from_json({"kind": "indicator-above", "time": 1.0})
        assert g.apply_values([0.5]) == 1.0


class TestSubordinatorPathMeasure:
    def test_triangle_area(self):
        nu = LevyPointMasses([(1.0, 1.0)])
        val = subordinator_path_measure(nu, PowerTailLower(0.0), positive_part(1.0))
        assert val == pytest.approx(0.5, abs=1e-6)

    def test_weighted_rescaled(self):
        nu = LevyPointMasses([(1.0, 2.0)])
        val = subordinator_path_measure(nu, PowerTailLower(0.0), positive_part(2.0))
        assert val == pytest.approx(2.0, abs=1e-6)

    def test_zero_functional(self):
        nu = LevyPointMasses([(1.0, 1.0)])
        z = PathFunctional((1.0,), lambda v: 0.0, {"kind": "zero"})
        assert subordinator_path_measure(nu, PowerTailLower(0.0), z) == 0.0

    def test_callable_tail(self):
        # callable tails take the open-ended integration branch; the kink at
        # u = 1 is not a quadrature breakpoint there, so compare loosely
        nu = LevyPointMasses([(1.0, 1.0)])
        tail = lambda u: np.maximum(0.0, 1.0 - np.asarray(u))
        cap = capped_positive(1.0, 10.0)
        val = subordinator_path_measure(nu, PowerTailLower(0.0), cap)
        val2 = subordinator_path_measure(nu, tail, cap)
        assert val2 == pytest.approx(val, rel=1e-3)
