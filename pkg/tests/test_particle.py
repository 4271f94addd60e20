"""Tests of the single particle under a central force."""
import math
import unittest

import numpy as np

from solar_flow.particle import (
    ParticleState,
    constant_force,
    force_envelope,
    particle_integrate,
    radius_barrier_margin,
    radius_lower_bound,
    riccati_envelope_check,
    riccati_margin,
    sign_crossings,
    spiral_force,
)


class ParticleStateTest(unittest.TestCase):
    """Tests the particle container."""

    def test_derived_quantities(self):
        """
        Angular momentum and radius
        """
        state = ParticleState(x=3.0, vx=1.0, y=4.0, vy=2.0)
        self.assertEqual(state.radius, 5.0)
        self.assertEqual(state.angular_momentum, 2.0)

    def test_rejects_nan(self):
        """
        Non-finite components are refused
        """
        with self.assertRaises(ValueError):
            ParticleState(x=math.nan, vx=0.0, y=0.0, vy=0.0)


class ParticleIntegrateTest(unittest.TestCase):
    """Tests the RK4 trajectory and its events."""

    def test_free_particle_zero(self):
        """
        x = 1 - t crosses zero at t = 1
        """
        trajectory = particle_integrate(
            constant_force(0.0), ParticleState(1.0, -1.0, 0.0, 0.5), 2.0, 0.03
        )
        self.assertEqual(len(trajectory.x_crossings), 1)
        self.assertAlmostEqual(trajectory.x_crossings[0], 1.0, places=10)
        self.assertEqual(trajectory.y_crossings, [])
        self.assertAlmostEqual(trajectory.t[-1], 2.0, places=14)

    def test_harmonic_orbit(self):
        """
        F = -1 keeps the unit circle and the angular momentum
        """
        trajectory = particle_integrate(
            constant_force(-1.0), ParticleState(1.0, 0.0, 0.0, 1.0), 10.0, 0.01
        )
        self.assertLess(np.max(np.abs(trajectory.radius - 1.0)), 1e-6)
        self.assertLess(
            np.max(np.abs(trajectory.angular_momentum - 1.0)), 1e-6
        )
        self.assertEqual(len(trajectory.x_crossings), 3)
        self.assertAlmostEqual(
            trajectory.x_crossings[0], math.pi / 2, places=6
        )

    def test_rejects_bad_step(self):
        """
        dt and t_end must be positive
        """
        with self.assertRaises(ValueError):
            particle_integrate(
                constant_force(0.0), ParticleState(1, 0, 0, 0), 1.0, 0.0
            )

    def test_singular_force(self):
        """
        Integrating onto the singularity of the spiral force is an error
        """
        with self.assertRaises(RuntimeError):
            particle_integrate(
                spiral_force(1.0), ParticleState(1, 0, 0, 0.1), 1.0, 0.01
            )

    def test_sign_crossings_skip_touching_zero(self):
        """
        A sample at zero without a sign change is not a crossing
        """
        t = np.array([0.0, 1.0, 2.0])
        values = np.array([1.0, 0.0, 1.0])
        self.assertEqual(sign_crossings(t, values, np.zeros(3)), [])


class SpiralForceTest(unittest.TestCase):
    """Tests the singular inward force."""

    def test_force_values(self):
        """
        F(t) = -k^2 / (1 - t)^2
        """
        force = spiral_force(1.0)
        self.assertEqual(force(0.5), -4.0)
        self.assertEqual(force(1.0), -math.inf)

    def test_spiral_winds_into_origin(self):
        """
        k = 1 winds around the origin while the radius collapses
        """
        spiral = particle_integrate(
            spiral_force(1.0), ParticleState(1.0, 0.0, 0.0, 0.1), 0.999, 1e-5
        )
        crossings = len(spiral.x_crossings) + len(spiral.y_crossings)
        self.assertGreaterEqual(len(spiral.x_crossings), 2)
        self.assertGreaterEqual(crossings, 3)
        self.assertLess(spiral.radius[-1], 0.1 * spiral.radius[0])


class BoundsTest(unittest.TestCase):
    """Tests the radius barrier and the ratio envelope."""

    def test_radius_lower_bound(self):
        """
        Closed values of the barrier
        """
        self.assertEqual(radius_lower_bound(1.0, 0.0, 1.0, 0.0), 1.0)
        self.assertAlmostEqual(
            radius_lower_bound(1.0, -1.0, 0.5, 0.0), 0.5 / math.sqrt(1.25)
        )
        self.assertEqual(radius_lower_bound(1.0, -1.0, 0.0, 0.0), 0.0)
        with self.assertRaises(ValueError):
            radius_lower_bound(1.0, 0.0, 1.0, -1.0)

    def test_barrier_is_sharp_for_free_motion(self):
        """
        A straight line never gets closer than the barrier
        """
        trajectory = particle_integrate(
            constant_force(0.0), ParticleState(1.0, -1.0, 0.0, 0.5), 2.0, 0.03
        )
        margin = radius_barrier_margin(trajectory)
        self.assertGreaterEqual(margin, -1e-12)
        self.assertLess(margin, 1e-3)

    def test_riccati_envelope(self):
        """
        x = cosh t satisfies x_t / x <= max(0, 1) but not <= 0.5
        """
        trajectory = particle_integrate(
            constant_force(1.0), ParticleState(1.0, 0.0, 0.0, 0.0), 2.0, 1e-3
        )
        passed, margin = riccati_envelope_check(trajectory, 1.0)
        self.assertTrue(passed)
        self.assertLessEqual(margin, 0.0)

        passed, margin = riccati_envelope_check(
            trajectory, lambda t: np.full(t.shape, 0.5)
        )
        self.assertFalse(passed)
        self.assertAlmostEqual(margin, math.tanh(2.0) - 0.5, places=6)

    def test_riccati_margin_needs_positive_phi(self):
        """
        The ratio is undefined once phi reaches zero
        """
        t = np.array([0.0, 1.0])
        with self.assertRaises(ValueError):
            riccati_margin(t, np.array([1.0, 0.0]), np.zeros(2), 0.0)

    def test_force_envelope(self):
        """
        Running maximum of sqrt(max(F, 0)) along time
        """
        history = np.array([[-1.0, 1.0], [4.0, 0.0], [1.0, 9.0]])
        np.testing.assert_allclose(
            force_envelope(history), [[0.0, 1.0], [2.0, 1.0], [2.0, 3.0]]
        )


if __name__ == "__main__":
    unittest.main()
