"""Tests the experiment runner and its artifacts"""
import os
import tempfile
import unittest
from pathlib import Path
from unittest import mock

from solar_flow import integration
from solar_flow.experiment import Experiment
from solar_flow.integration import SERIES_COLUMNS
from solar_flow.runner import (
    EXIT_BREAKDOWN,
    EXIT_ERROR,
    EXIT_OK,
    SCHEMA_VERSION,
    WORKERS_VARIABLE,
    run_experiment,
    run_sweep,
    worker_count,
)
from solar_flow.utils import utils


class RunExperimentTest(unittest.TestCase):
    """Tests single runs of each family."""

    def setUp(self):
        """Temporary output folder"""
        self.folder = tempfile.TemporaryDirectory()
        self.out = Path(self.folder.name)

    def tearDown(self):
        """Removes the output folder"""
        self.folder.cleanup()

    def test_constant_run(self):
        """
        Constant data completes and writes every artifact
        """
        experiment = Experiment(
            {
                "initial": {"preset": "constant"},
                "run": {"n": 32, "dt": 0.01, "t_end": 0.1},
            },
            output_dir=self.out,
        )
        self.assertEqual(run_experiment(experiment), EXIT_OK)

        header = self.out.joinpath("series.csv").read_text().splitlines()[0]
        self.assertEqual(header, ",".join(SERIES_COLUMNS))
        report = utils.read_json_as_dict(self.out.joinpath("report.json"))
        self.assertEqual(report["schema_version"], SCHEMA_VERSION)
        self.assertEqual(report["exit_code"], EXIT_OK)
        self.assertFalse(report["breakdown"]["occurred"])
        self.assertEqual(report["mckean"]["kind"], "global")
        for name in (
            "snap_0.000000.csv",
            "snap_0.100000.csv",
            "min_x.svg",
            "invariants.svg",
            "x_final.svg",
        ):
            self.assertTrue(self.out.joinpath(name).exists(), name)

    def test_burgers_stops_at_breakdown(self):
        """
        Stop-at-breakdown runs exit with 2 and report T
        """
        experiment = Experiment(
            {
                "initial": {"preset": "burgers"},
                "run": {"n": 64, "dt": 0.01, "t_end": 1.1},
                "monitors": {"plots": False},
            },
            output_dir=self.out,
        )
        self.assertEqual(run_experiment(experiment), EXIT_BREAKDOWN)
        report = utils.read_json_as_dict(self.out.joinpath("report.json"))
        self.assertTrue(report["breakdown"]["occurred"])
        self.assertAlmostEqual(report["breakdown"]["T"], 1.0, delta=1e-4)
        self.assertAlmostEqual(report["oracle"]["closed_form_T"], 1.0)
        self.assertGreater(report["pressure"]["windows_checked"], 0)
        self.assertLess(report["pressure"]["field_residual"], 1e-8)
        self.assertFalse(report["lemmas"]["applicable"])
        self.assertFalse(self.out.joinpath("min_x.svg").exists())

    def test_failed_run(self):
        """
        Errors during the run give exit 1 and are recorded
        """
        experiment = Experiment(
            {
                "initial": {"preset": "mckean-global"},
                "model": {"lam": 4.0},
                "run": {"n": 32, "t_end": 0.01, "continuation": True},
            },
            output_dir=self.out,
        )
        self.assertEqual(run_experiment(experiment), EXIT_ERROR)
        report = utils.read_json_as_dict(self.out.joinpath("report.json"))
        self.assertTrue(
            report["error"].startswith("StateOutsideManifoldError")
        )

    def test_failed_run_keeps_partial_series(self):
        """
        A run failing mid-way still writes the series sampled so far
        """
        step_rk4 = integration.step_rk4
        calls = []

        def failing_step(*args, **kwargs):
            """Real step for 50 calls, then a non-finite failure"""
            calls.append(1)
            if len(calls) > 50:
                raise RuntimeError("Non-finite state")
            return step_rk4(*args, **kwargs)

        experiment = Experiment(
            {
                "initial": {"preset": "constant"},
                "run": {"n": 32, "dt": 0.01, "t_end": 1.0},
                "monitors": {"plots": False},
            },
            output_dir=self.out,
        )
        with mock.patch(
            "solar_flow.integration.step_rk4", side_effect=failing_step
        ):
            self.assertEqual(run_experiment(experiment), EXIT_ERROR)

        lines = self.out.joinpath("series.csv").read_text().splitlines()
        self.assertEqual(lines[0], ",".join(SERIES_COLUMNS))
        # t = 0 and every tenth step up to the failure
        self.assertEqual(len(lines), 7)
        report = utils.read_json_as_dict(self.out.joinpath("report.json"))
        self.assertTrue(report["error"].startswith("RuntimeError"))

    def test_osw_run(self):
        """
        De Gregorio runs complete with the bound monitor
        """
        experiment = Experiment(
            {
                "family": "osw",
                "initial": {"preset": "sine"},
                "run": {"n": 32, "dt": 0.01, "t_end": 0.1},
            },
            output_dir=self.out,
        )
        self.assertEqual(run_experiment(experiment), EXIT_OK)
        report = utils.read_json_as_dict(self.out.joinpath("report.json"))
        self.assertFalse(report["stopped_early"])
        self.assertTrue(report["degregorio_bound"]["passed"])

    def test_particle_run(self):
        """
        The harmonic orbit crosses x = 0 at pi / 2
        """
        experiment = Experiment(
            {
                "family": "particle",
                "particle": {"value": -1.0, "p0": [1.0, 0.0, 0.0, 1.0]},
                "run": {"t_end": 2.0, "dt": 0.01},
            },
            output_dir=self.out,
        )
        self.assertEqual(run_experiment(experiment), EXIT_OK)
        report = utils.read_json_as_dict(self.out.joinpath("report.json"))
        self.assertEqual(len(report["x_crossings"]), 1)
        self.assertAlmostEqual(report["x_crossings"][0], 1.5707963, places=6)
        self.assertTrue(self.out.joinpath("orbit.svg").exists())


class SweepTest(unittest.TestCase):
    """Tests sweeps and the worker setting."""

    def test_sweep_folders(self):
        """
        Every sweep member writes its own report
        """
        with tempfile.TemporaryDirectory() as folder:
            experiment = Experiment(
                {
                    "initial": {"preset": "constant"},
                    "run": {"n": 32, "dt": 0.01},
                    "monitors": {"plots": False, "snapshots": False},
                    "sweep": {"key": "run.t_end", "values": [0.05, 0.1]},
                },
                output_dir=folder,
            )
            self.assertEqual(run_sweep(experiment, workers=1), EXIT_OK)
            for name in ("run.t_end=0.05", "run.t_end=0.1"):
                path = Path(folder).joinpath(name, "report.json")
                self.assertTrue(path.exists(), name)

    def test_worker_count(self):
        """
        SOLAR_FLOW_WORKERS sets the pool size
        """
        with mock.patch.dict(os.environ, {WORKERS_VARIABLE: "3"}):
            self.assertEqual(worker_count(), 3)
        with mock.patch.dict(os.environ, {WORKERS_VARIABLE: "0"}):
            with self.assertRaises(ValueError):
                worker_count()


if __name__ == "__main__":
    unittest.main()
