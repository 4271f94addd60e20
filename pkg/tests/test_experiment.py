"""Tests the experiment file parser"""
import tempfile
import unittest
from pathlib import Path

import numpy as np

from solar_flow.diagnostics import reflect
from solar_flow.experiment import (
    Experiment,
    InitialCondition,
    preset_names,
)
from solar_flow.integration import RunConfig
from solar_flow.osw import OswRunConfig


class InitialConditionTest(unittest.TestCase):
    """Tests the Fourier series of u0."""

    def test_samples(self):
        """
        constant + a sin + b cos on the grid
        """
        condition = InitialCondition(constant=0.5, modes=((2, 1.0, -1.0),))
        theta = np.arange(16) / 16
        expected = (
            0.5
            + np.sin(4 * np.pi * theta)
            - np.cos(4 * np.pi * theta)
        )
        np.testing.assert_allclose(condition.samples(16), expected)
        self.assertEqual(condition.max_wavenumber, 2)

    def test_unresolved_mode(self):
        """
        2 k >= n is refused
        """
        with self.assertRaises(ValueError):
            InitialCondition(modes=((8, 1.0, 0.0),)).samples(16)

    def test_invalid_modes(self):
        """
        Modes are (k >= 1, sin, cos) with finite coefficients
        """
        for modes in (((0, 1.0, 0.0),), ((1, 1.0),), ((1, np.nan, 0.0),)):
            with self.assertRaises(ValueError):
                InitialCondition(modes=modes)

    def test_reflected_matches_sample_reflection(self):
        """
        The reflected series samples -u0(1 - theta)
        """
        condition = InitialCondition(constant=1.0, modes=((1, 0.1, 0.2),))
        np.testing.assert_allclose(
            condition.reflected().samples(32),
            reflect(condition.samples(32)),
            atol=1e-14,
        )

    def test_presets(self):
        """
        Every named preset is available
        """
        self.assertEqual(
            preset_names(),
            [
                "burgers",
                "constant",
                "hunter-saxton",
                "mckean-breakdown",
                "mckean-global",
                "sine",
            ],
        )
        for name in preset_names():
            InitialCondition.preset(name)
        with self.assertRaises(ValueError):
            InitialCondition.preset("missing")


class ExperimentTest(unittest.TestCase):
    """Tests the experiment sections and their defaults."""

    def test_defaults(self):
        """
        An empty file is a lambda = 2 run of the sine preset
        """
        experiment = Experiment({})
        self.assertEqual(experiment.family, "mu-lambda")
        self.assertEqual(experiment.model_params.lam, 2.0)
        self.assertEqual(experiment.model_params.sigma, 0.0)
        self.assertEqual(experiment.run_config, RunConfig())
        self.assertEqual(experiment.u0().size, 256)
        self.assertEqual(experiment.output_dir, Path("out"))

    def test_preset_lambda(self):
        """
        Presets choose their family member unless lambda is given
        """
        burgers = Experiment({"initial": {"preset": "burgers"}})
        self.assertEqual(burgers.model_params.lam, 3.0)
        other = Experiment(
            {"initial": {"preset": "burgers"}, "model": {"lam": 5.0}}
        )
        self.assertEqual(other.model_params.lam, 5.0)

    def test_sigma_is_mean_of_u0(self):
        """
        sigma follows the constant term, reflection included
        """
        experiment = Experiment(
            {"initial": {"preset": "mckean-breakdown", "reflect": True}}
        )
        self.assertEqual(experiment.model_params.sigma, -1.0)

    def test_unknown_keys(self):
        """
        Unknown sections and keys are refused
        """
        with self.assertRaises(ValueError):
            Experiment({"solver": {}})
        with self.assertRaises(ValueError):
            Experiment({"run": {"steps": 10}})
        with self.assertRaises(ValueError):
            Experiment({"family": "kdv"})

    def test_invalid_values(self):
        """
        Invalid numbers fail when the experiment is built
        """
        with self.assertRaises(ValueError):
            Experiment({"model": {"lam": 1.0}})
        with self.assertRaises(ValueError):
            Experiment({"run": {"dt": -1.0}})
        with self.assertRaises(ValueError):
            Experiment({"initial": {"preset": "sine", "constant": 1.0}})
        with self.assertRaises(ValueError):
            Experiment({"monitors": {"snapshot_count": 0}})

    def test_family_run_keys(self):
        """
        stop_eta_theta only applies to the OSW family
        """
        osw = Experiment({"family": "osw", "run": {"stop_eta_theta": 0.1}})
        self.assertIsInstance(osw.run_config, OswRunConfig)
        self.assertEqual(osw.lambda_osw, -1.0)
        with self.assertRaises(ValueError):
            Experiment({"run": {"stop_eta_theta": 0.1}})

    def test_particle(self):
        """
        Particle experiments build the force and p0
        """
        experiment = Experiment(
            {
                "family": "particle",
                "particle": {"force": "spiral", "k": 2.0, "p0": [1, 0, 0, 1]},
                "run": {"t_end": 0.5, "dt": 0.01},
            }
        )
        force, p0 = experiment.particle
        self.assertEqual(force(0.5), -16.0)
        self.assertEqual(p0.angular_momentum, 1.0)
        self.assertEqual(experiment.particle_horizon, (0.5, 0.01))
        with self.assertRaises(ValueError):
            Experiment({"family": "particle", "particle": {"force": "drag"}})

    def test_overrides(self):
        """
        Command-line values replace the run section
        """
        experiment = Experiment({"run": {"n": 128}}).with_overrides(
            n=64, t_end=0.5, output_dir="elsewhere"
        )
        self.assertEqual(experiment.run_config.n, 64)
        self.assertEqual(experiment.run_config.t_end, 0.5)
        self.assertEqual(experiment.output_dir, Path("elsewhere"))

    def test_sweep(self):
        """
        One experiment per value, each in its own folder
        """
        experiment = Experiment(
            {
                "model": {"lam": 2.0},
                "sweep": {"key": "model.lam", "values": [2.0, 3.0]},
                "output": {"dir": "results"},
            }
        )
        members = list(experiment.sweep_experiments())
        names = [name for name, _ in members]
        self.assertEqual(names, ["model.lam=2.0", "model.lam=3.0"])
        self.assertEqual(members[1][1].model_params.lam, 3.0)
        self.assertEqual(
            members[1][1].output_dir, Path("results/model.lam=3.0")
        )
        self.assertIsNone(members[0][1].sweep)

        with self.assertRaises(ValueError):
            list(
                Experiment(
                    {"sweep": {"key": "lam", "values": [1]}}
                ).sweep_experiments()
            )

    def test_from_yaml(self):
        """
        Experiments are read from yaml files
        """
        with tempfile.TemporaryDirectory() as folder:
            path = Path(folder).joinpath("experiment.yaml")
            path.write_text(
                "family: mu-lambda\n"
                "initial:\n"
                "  preset: burgers\n"
                "run:\n"
                "  n: 64\n"
                "  dt: 0.01\n"
            )
            experiment = Experiment.from_yaml(path)
            self.assertEqual(experiment.run_config.n, 64)
            self.assertEqual(experiment.describe()["model"]["lam"], 3.0)

            path.write_text("- not\n- a mapping\n")
            with self.assertRaises(ValueError):
                Experiment.from_yaml(path)


if __name__ == "__main__":
    unittest.main()
