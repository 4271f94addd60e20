"""
Package for the central-force formulation of one-dimensional
Euler-Arnold equations on the circle
"""
__version__ = "0.1.0"

# flake8: noqa: F401
from solar_flow.calculus import Field, PeriodicGrid
from solar_flow.experiment import Experiment, InitialCondition
from solar_flow.integration import RunConfig, integrate
from solar_flow.osw import OswRunConfig, osw_integrate
from solar_flow.solar_model import ModelParams, SolarState
