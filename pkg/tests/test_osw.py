"""Tests of the OSW family and its Ermakov-Pinney form."""
import unittest

import numpy as np

from solar_flow.osw import (
    OSW_SERIES_COLUMNS,
    OswRunConfig,
    degregorio_bound_check,
    ermakov_check,
    osw_force,
    osw_initial_state,
    osw_integrate,
    osw_velocity,
    transport_error,
)

N = 64
THETA = np.arange(N) / N
SIN = np.sin(2 * np.pi * THETA)
COS = np.cos(2 * np.pi * THETA)


class VelocityTest(unittest.TestCase):
    """Tests u, u_theta and F from the vorticity."""

    def test_velocity_of_sine(self):
        """
        m = 2 pi sin gives u = sin
        """
        u, u_theta = osw_velocity(2 * np.pi * SIN)
        np.testing.assert_allclose(u, SIN, atol=1e-13)
        np.testing.assert_allclose(u_theta, 2 * np.pi * COS, atol=1e-12)

    def test_rejects_nonzero_mean(self):
        """
        H u_theta always has zero mean
        """
        with self.assertRaises(ValueError):
            osw_velocity(1.0 + SIN)

    def test_force_of_single_modes(self):
        """
        F = 2 pi^2 for u = sin and u = cos
        """
        for u in (SIN, COS):
            np.testing.assert_allclose(
                osw_force(u), 2 * np.pi**2, atol=1e-10
            )

    def test_initial_state(self):
        """
        m0 = H u0', eta = theta, eta_theta = 1
        """
        state = osw_initial_state(SIN, -1.0)
        np.testing.assert_allclose(state.m0, 2 * np.pi * SIN, atol=1e-12)
        np.testing.assert_array_equal(state.eta, THETA)
        np.testing.assert_array_equal(state.eta_theta, 1.0)
        self.assertEqual(state.pack().size, 4 * N)


class OswRunTest(unittest.TestCase):
    """Tests runs of the De Gregorio and lambda = 1 members."""

    @classmethod
    def setUpClass(cls):
        """De Gregorio run of the steady profile u0 = sin"""
        config = OswRunConfig(n=N, dt=1e-3, t_end=0.5, sample_every=5)
        cls.run_output = osw_integrate(SIN, -1.0, config)

    def test_config_validation(self):
        """
        Non-positive steps are refused
        """
        with self.assertRaises(ValueError):
            OswRunConfig(dt=0.0)
        with self.assertRaises(ValueError):
            OswRunConfig(sample_every=0)

    def test_zero_data_is_frozen(self):
        """
        u0 = 0 leaves m = 0 and eta = theta
        """
        config = OswRunConfig(n=32, dt=0.01, t_end=0.1)
        run = osw_integrate(np.zeros(32), -1.0, config)
        final = run.states[-1]
        np.testing.assert_allclose(final.m, 0.0)
        np.testing.assert_allclose(final.eta, np.arange(32) / 32)
        self.assertEqual(run.min_force, 0.0)
        self.assertFalse(run.stopped_early)

    def test_steady_vorticity(self):
        """
        sin is steady for lambda = -1 while the labels move
        """
        final = self.run_output.states[-1]
        self.assertAlmostEqual(final.t, 0.5)
        np.testing.assert_allclose(final.m, 2 * np.pi * SIN, atol=1e-9)
        self.assertGreater(np.max(np.abs(final.eta - THETA)), 0.05)
        self.assertEqual(list(self.run_output.series.columns), OSW_SERIES_COLUMNS)
        self.assertGreater(self.run_output.min_force, 0.0)

    def test_transport(self):
        """
        eta_theta^lambda m(eta) = m0 along the run
        """
        for state in self.run_output.states:
            error, coverage = transport_error(state)
            self.assertLess(error, 1e-5)
            self.assertEqual(coverage, 1.0)

    def test_transport_guard(self):
        """
        Labels above the amplification cap are not checked
        """
        error, coverage = transport_error(self.run_output.states[0], 0.5)
        self.assertEqual((error, coverage), (0.0, 0.0))

    def test_ermakov(self):
        """
        The planar point obeys the Ermakov-Pinney system
        """
        report = ermakov_check(self.run_output.states)
        self.assertGreater(report.windows_checked, 0)
        self.assertLess(report.rho_residual, 1e-3)
        self.assertLess(report.linear_residual, 1e-3)
        self.assertLess(report.angular_momentum_drift, 1e-3)
        self.assertLessEqual(report.rho_residual_relative, report.rho_residual)
        self.assertGreater(report.f_positivity, 0.0)
        with self.assertRaises(ValueError):
            ermakov_check(self.run_output.states[:4])

    def test_degregorio_bound(self):
        """
        eta_theta <= 1 / sin^2 where |m0| is not small
        """
        report = degregorio_bound_check(self.run_output)
        self.assertGreater(report.points_checked, 0)
        self.assertLessEqual(report.margin, 1e-6)
        self.assertTrue(report.passed)

    def test_lambda_one_collapses(self):
        """
        For lambda = 1 the labels crowd and the run stops early
        """
        config = OswRunConfig(n=128, dt=5e-4, t_end=1.0)
        u0 = np.sin(2 * np.pi * np.arange(128) / 128)
        run = osw_integrate(u0, 1.0, config)
        self.assertTrue(run.stopped_early)
        self.assertLess(run.stop_time, 0.5)
        self.assertLessEqual(
            run.series["min_eta_theta"].iloc[-1], config.stop_eta_theta
        )
        self.assertGreater(run.min_force, 0.0)
        with self.assertRaises(ValueError):
            degregorio_bound_check(run)


class DeGregorioHorizonTest(unittest.TestCase):
    """Tests the steady De Gregorio profile up to t = 5."""

    @classmethod
    def setUpClass(cls):
        """De Gregorio run of u0 = sin to t = 5"""
        config = OswRunConfig(n=N, dt=1e-3, t_end=5.0, sample_every=5)
        cls.run_output = osw_integrate(SIN, -1.0, config)

    def test_flow_gradient(self):
        """
        eta_theta = 1 / (cosh 2 pi t - cos 2 pi theta sinh 2 pi t)
        """
        for state in self.run_output.states[:601:200]:
            exact = 1.0 / (
                np.cosh(2 * np.pi * state.t)
                - COS * np.sinh(2 * np.pi * state.t)
            )
            np.testing.assert_allclose(state.eta_theta, exact, rtol=1e-6)

    def test_ermakov(self):
        """
        Residuals stay below 1e-3 over the whole horizon
        """
        report = ermakov_check(self.run_output.states)
        self.assertAlmostEqual(self.run_output.states[-1].t, 5.0)
        self.assertGreater(report.windows_checked, 100)
        self.assertLess(report.rho_residual, 1e-3)
        self.assertLess(report.linear_residual, 1e-3)
        self.assertLess(report.angular_momentum_drift, 1e-3)
        # crowded and stretched labels leave the checked band late in the run
        self.assertLess(report.label_coverage, 1.0)

    def test_degregorio_bound(self):
        """
        The bound holds to t = 5
        """
        report = degregorio_bound_check(self.run_output)
        self.assertTrue(report.passed)
        self.assertIsNotNone(report.worst_t)


if __name__ == "__main__":
    unittest.main()
