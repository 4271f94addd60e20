"""Tests of the solar variables, force and constraints."""
import math
import unittest

import numpy as np

from solar_flow.closed_form import burgers_solution
from solar_flow.solar_model import (
    ModelParams,
    SolarState,
    StateOutsideManifoldError,
    angular_momentum,
    check_manifold,
    constraint_residuals,
    field_power,
    forcing,
    g_formula_discrepancy,
    initial_momentum,
    initial_state,
    lagrangian_invariants,
    pressure,
    rhs,
)

N = 64
THETA = np.arange(N) / N
SIN = np.sin(2 * np.pi * THETA)
COS = np.cos(2 * np.pi * THETA)


def make_state(x, v, y=None, w=None, t=0.0):
    """State with zero time integral and base point."""
    y = np.zeros(N) if y is None else y
    w = np.zeros(N) if w is None else w
    return SolarState(
        t=t, x=x, v=v, y=y, w=w, time_integral=np.zeros(N), b=0.0
    )


class ModelParamsTest(unittest.TestCase):
    """Tests the parameter container."""

    def test_gamma(self):
        """
        gamma = 2 / (lambda - 1)
        """
        self.assertEqual(ModelParams(lam=2, sigma=0).gamma, 2.0)
        self.assertEqual(ModelParams(lam=3, sigma=0).gamma, 1.0)
        self.assertAlmostEqual(ModelParams(lam=4, sigma=0).gamma, 2.0 / 3.0)

    def test_lambda_one_is_rejected(self):
        """
        lambda = 1 makes gamma singular
        """
        with self.assertRaises(ValueError):
            ModelParams(lam=1.0, sigma=0.0)

    def test_continuation_flags(self):
        """
        Only positive integer gamma may cross zero
        """
        self.assertTrue(ModelParams(lam=2, sigma=0).continues_through_zero)
        self.assertTrue(ModelParams(lam=3, sigma=0).continues_through_zero)
        self.assertFalse(ModelParams(lam=4, sigma=0).continues_through_zero)
        self.assertFalse(ModelParams(lam=-1, sigma=0).continues_through_zero)
        self.assertTrue(ModelParams(lam=-1, sigma=0).integer_gamma)


class FieldPowerTest(unittest.TestCase):
    """Tests powers valid through zero."""

    def test_integer_powers_accept_negative_base(self):
        """
        Integer exponents work for x <= 0
        """
        x = np.array([-2.0, 0.0, 3.0])
        np.testing.assert_allclose(field_power(x, 2), [4.0, 0.0, 9.0])
        np.testing.assert_allclose(field_power(x, 1.0), x)

    def test_fractional_power_needs_positive_base(self):
        """
        Non-integer exponents refuse x <= 0
        """
        np.testing.assert_allclose(field_power(np.array([4.0]), 0.5), [2.0])
        with self.assertRaises(ValueError):
            field_power(np.array([1.0, -1.0]), 0.5)


class InitialStateTest(unittest.TestCase):
    """Tests the initial phase point."""

    def test_initial_state(self):
        """
        x = 1, v = u0' / gamma, y = 0, w = m0
        """
        u0 = 1.0 + 0.1 * SIN
        params = ModelParams(lam=3, sigma=1.0)
        state = initial_state(u0, params)
        np.testing.assert_allclose(state.x, 1.0)
        np.testing.assert_allclose(state.v, 0.2 * np.pi * COS, atol=1e-12)
        np.testing.assert_allclose(state.y, 0.0)
        np.testing.assert_allclose(
            state.w, 1.0 + 0.4 * np.pi**2 * SIN, atol=1e-10
        )
        self.assertEqual(state.b, 0.0)

    def test_sigma_mismatch(self):
        """
        sigma must be the mean of u0
        """
        with self.assertRaises(ValueError):
            initial_state(1.0 + SIN, ModelParams(lam=2, sigma=0.0))

    def test_pack_roundtrip(self):
        """
        unpack(pack(state)) rebuilds the state
        """
        state = initial_state(SIN, ModelParams(lam=2, sigma=0.0))
        rebuilt = SolarState.unpack(0.5, state.pack())
        self.assertEqual(rebuilt.t, 0.5)
        np.testing.assert_array_equal(rebuilt.w, state.w)
        self.assertEqual(state.pack().size, 5 * N + 1)


class ForcingTest(unittest.TestCase):
    """Tests E, G and F."""

    def test_constant_data(self):
        """
        Constant u0 gives E = 0, G = 0 and F = 0 for any lambda
        """
        for lam in (2.0, 3.0, 5.0, -1.0):
            params = ModelParams(lam=lam, sigma=0.7)
            state = initial_state(np.full(N, 0.7), params)
            result = forcing(state, params)
            self.assertEqual(result.E, 0.0)
            np.testing.assert_allclose(result.G, 0.0, atol=1e-15)
            np.testing.assert_allclose(result.F, 0.0, atol=1e-15)

    def test_burgers_with_mean(self):
        """
        lambda = 3, sigma = 1, x = 1, v = cos: G = sin / 2 pi, F = 3 G
        """
        params = ModelParams(lam=3.0, sigma=1.0)
        result = forcing(make_state(np.ones(N), COS), params)
        np.testing.assert_allclose(result.G, SIN / (2 * np.pi), atol=1e-14)
        np.testing.assert_allclose(
            result.F, 3 * SIN / (2 * np.pi), atol=1e-14
        )

    def test_hunter_saxton_energy(self):
        """
        lambda = 2, sigma = 0, v = pi cos: E = 2 pi^2, F = -pi^2 / 2
        """
        params = ModelParams(lam=2.0, sigma=0.0)
        result = forcing(make_state(np.ones(N), np.pi * COS), params)
        self.assertAlmostEqual(result.E, 2 * np.pi**2, places=12)
        np.testing.assert_allclose(result.F, -np.pi**2 / 2, atol=1e-12)

    def test_fractional_gamma_stops_at_zero(self):
        """
        Non-integer gamma refuses states with x <= eps_pos
        """
        params = ModelParams(lam=4.0, sigma=0.0)
        x = np.ones(N)
        x[5] = 0.0
        state = make_state(x, np.zeros(N))
        with self.assertRaises(StateOutsideManifoldError) as context:
            check_manifold(state, params)
        self.assertAlmostEqual(context.exception.theta, 5 / N)
        with self.assertRaises(StateOutsideManifoldError):
            forcing(state, params)

    def test_burgers_continues_through_zero(self):
        """
        lambda = 3 has F = 3 sigma G, finite when x crosses zero
        """
        params = ModelParams(lam=3.0, sigma=0.0)
        state = make_state(1.0 + 1.5 * COS, COS)
        result = forcing(state, params)
        self.assertTrue(math.isnan(result.E))
        np.testing.assert_allclose(result.F, 0.0)


class RhsTest(unittest.TestCase):
    """Tests the first-order right-hand side."""

    def test_constant_data(self):
        """
        Rigid rotation: only A and b move
        """
        params = ModelParams(lam=2.0, sigma=0.5)
        state = initial_state(np.full(N, 0.5), params)
        tangent = rhs(state, params)
        np.testing.assert_allclose(tangent.dx, 0.0)
        np.testing.assert_allclose(tangent.dv, 0.0)
        np.testing.assert_allclose(tangent.dy, 0.5)
        np.testing.assert_allclose(tangent.dtime_integral, 1.0)
        self.assertAlmostEqual(tangent.db, 0.5)

    def test_hunter_saxton_acceleration(self):
        """
        lambda = 2, u0 = sin: v_t = -pi^2 / 2 at t = 0
        """
        params = ModelParams(lam=2.0, sigma=0.0)
        tangent = rhs(initial_state(SIN, params), params)
        np.testing.assert_allclose(tangent.dv, -np.pi**2 / 2, atol=1e-10)


class ConstraintTest(unittest.TestCase):
    """Tests angular momentum and constraint residuals."""

    def test_initial_angular_momentum(self):
        """
        x w - y v = m0 at t = 0
        """
        u0 = 1.0 + 0.1 * SIN
        state = initial_state(u0, ModelParams(lam=2.0, sigma=1.0))
        np.testing.assert_allclose(
            angular_momentum(state), initial_momentum(u0)
        )

    def test_burgers_closed_form_momentum(self):
        """
        x = 1 + t cos, y = 2 pi t sin: x w - y v = 2 pi sin
        """
        t = 0.4
        state = make_state(
            1.0 + t * COS, COS, 2 * np.pi * t * SIN, 2 * np.pi * SIN, t
        )
        np.testing.assert_allclose(
            angular_momentum(state), 2 * np.pi * SIN, atol=1e-14
        )

    def test_initial_residuals_vanish(self):
        """
        Exact initial states satisfy every constraint
        """
        params = ModelParams(lam=3.0, sigma=1.0)
        state = initial_state(1.0 + 0.1 * SIN, params)
        residuals = constraint_residuals(state, params)
        for key in ("c1", "c2", "c3"):
            self.assertLess(residuals[key], 1e-12)

    def test_scaled_x(self):
        """
        Scaling x by 1.01 gives c1 = |1.01^gamma - 1|
        """
        params = ModelParams(lam=2.0, sigma=0.0)
        state = make_state(np.full(N, 1.01), np.zeros(N))
        residuals = constraint_residuals(state, params)
        self.assertAlmostEqual(residuals["c1"], 1.01**2 - 1.0, places=14)

    def test_burgers_oracle_residuals(self):
        """
        The Burgers closed form satisfies the constraints at t = 0.5
        """
        u0 = SIN / (2 * np.pi)
        fields = burgers_solution(u0, 0.5)
        state = SolarState(
            t=0.5,
            x=fields.x,
            v=fields.v,
            y=fields.y,
            w=fields.w,
            time_integral=np.zeros(N),
            b=0.0,
        )
        residuals = constraint_residuals(state, ModelParams(3.0, 0.0))
        for key in ("c1", "c2", "c3"):
            self.assertLess(residuals[key], 1e-8)


class SupplementTest(unittest.TestCase):
    """Tests invariants, pressure and the G normalization report."""

    def test_lagrangian_invariants_at_start(self):
        """
        At t = 0, sigma = mean u0, L2 = mean u0^2 and E = mean u0'^2
        """
        u0 = 1.0 + 0.1 * SIN
        params = ModelParams(lam=2.0, sigma=1.0)
        values = lagrangian_invariants(initial_state(u0, params), params)
        self.assertAlmostEqual(values["sigma"], 1.0, places=12)
        self.assertAlmostEqual(values["L2"], 1.005, places=12)
        self.assertAlmostEqual(
            values["E"], 0.02 * np.pi**2, places=12
        )

    def test_pressure(self):
        """
        P_theta = G x and mean(P x) = 0 for lambda = 3
        """
        params = ModelParams(lam=3.0, sigma=1.0)
        state = make_state(np.ones(N), COS)
        P = pressure(state, params)
        self.assertAlmostEqual(float(np.mean(P)), 0.0, places=14)
        np.testing.assert_allclose(
            np.gradient(P, 1.0 / N, edge_order=2)[1:-1],
            (SIN / (2 * np.pi))[1:-1],
            atol=1e-3,
        )
        with self.assertRaises(ValueError):
            pressure(state, ModelParams(lam=2.0, sigma=1.0))

    def test_g_formula_discrepancy(self):
        """
        Only the gamma-consistent G has G_theta = gamma x^(gamma-1) x_t
        """
        params = ModelParams(lam=2.0, sigma=0.0)
        state = initial_state(SIN, params)
        report = g_formula_discrepancy(state, params)
        self.assertLess(report["with_gamma"]["derivative_residual"], 1e-10)
        self.assertGreater(report["without_gamma"]["derivative_residual"], 1)
        self.assertLess(report["with_gamma"]["weighted_mean"], 1e-14)


if __name__ == "__main__":
    unittest.main()
