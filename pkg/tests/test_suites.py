"""Tests the acceptance suites behind solar-flow verify"""
import unittest

import xmltodict

from solar_flow.suites import (
    CriterionResult,
    junit_document,
    osw_suite,
    residual_suite,
)


class JunitDocumentTest(unittest.TestCase):
    """Tests the junit-style results document."""

    def test_failures_are_counted(self):
        """
        Failed criteria appear as failures with their measured value
        """
        results = [
            CriterionResult("demo", "small", 1e-9, 1e-8, True),
            CriterionResult("demo", "large", 1.0, 1e-8, False, "detail"),
        ]
        document = xmltodict.parse(junit_document("demo", results))
        suite = document["testsuite"]
        self.assertEqual(suite["@tests"], "2")
        self.assertEqual(suite["@failures"], "1")
        self.assertNotIn("failure", suite["testcase"][0])
        self.assertIn("failure", suite["testcase"][1])


class ResidualSuiteTest(unittest.TestCase):
    """Tests the PDE residual suite at acceptance resolution."""

    def test_all_criteria_pass(self):
        """
        Burgers, Hunter-Saxton and McKean runs solve the integrated PDE
        """
        results = residual_suite()
        self.assertEqual(len(results), 9)
        failed = [
            (result.name, result.measured)
            for result in results
            if not result.passed
        ]
        self.assertEqual(failed, [])


class OswSuiteTest(unittest.TestCase):
    """Tests the OSW suite at acceptance resolution."""

    def test_all_criteria_pass(self):
        """
        Force positivity, lambda = 1 collapse and the De Gregorio checks
        hold to t = 5
        """
        results = osw_suite()
        names = [result.name for result in results]
        self.assertIn("degregorio_angular_momentum_drift", names)
        self.assertIn("degregorio_linear_residual", names)
        failed = [
            (result.name, result.measured)
            for result in results
            if not result.passed
        ]
        self.assertEqual(failed, [])


if __name__ == "__main__":
    unittest.main()
