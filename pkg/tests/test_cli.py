"""Tests the command line entry point"""
import tempfile
import unittest
from pathlib import Path

import xmltodict

from solar_flow.cli import main, parse_arguments


class CliTest(unittest.TestCase):
    """Tests the run and verify commands."""

    def test_parse_arguments(self):
        """
        Overrides are parsed with their types
        """
        arguments = parse_arguments(
            ["run", "exp.yaml", "--n", "64", "--t-end", "0.5"]
        )
        self.assertEqual(arguments.command, "run")
        self.assertEqual(arguments.n, 64)
        self.assertEqual(arguments.t_end, 0.5)
        self.assertIsNone(arguments.dt)
        with self.assertRaises(SystemExit):
            parse_arguments([])

    def test_run(self):
        """
        A yaml experiment runs with command-line overrides
        """
        with tempfile.TemporaryDirectory() as folder:
            path = Path(folder).joinpath("constant.yaml")
            path.write_text("initial:\n  preset: constant\n")
            out = Path(folder).joinpath("out")
            code = main(
                [
                    "run",
                    str(path),
                    "--n",
                    "32",
                    "--dt",
                    "0.01",
                    "--t-end",
                    "0.05",
                    "--out",
                    str(out),
                ]
            )
            self.assertEqual(code, 0)
            self.assertTrue(out.joinpath("report.json").exists())

    def test_missing_file(self):
        """
        Unreadable experiments exit with 1
        """
        with tempfile.TemporaryDirectory() as folder:
            missing = str(Path(folder).joinpath("missing.yaml"))
            self.assertEqual(main(["run", missing]), 1)

    def test_invalid_experiment(self):
        """
        lambda = 1 is rejected with exit 1
        """
        with tempfile.TemporaryDirectory() as folder:
            path = Path(folder).joinpath("bad.yaml")
            path.write_text("model:\n  lam: 1.0\n")
            self.assertEqual(main(["run", str(path)]), 1)

    def test_unknown_suite(self):
        """
        Unknown suites exit with 1
        """
        with tempfile.TemporaryDirectory() as folder:
            self.assertEqual(main(["verify", "missing", "--out", folder]), 1)

    def test_particle_suite(self):
        """
        The particle suite passes and writes a junit file
        """
        with tempfile.TemporaryDirectory() as folder:
            self.assertEqual(main(["verify", "particle", "--out", folder]), 0)
            path = Path(folder).joinpath("verify_particle.xml")
            document = xmltodict.parse(path.read_text())
            self.assertEqual(document["testsuite"]["@failures"], "0")


if __name__ == "__main__":
    unittest.main()
