"""
Segregation solver package: projected finite-difference iteration for two segregated densities.
"""

from .cli import main
from .grid import GridSpec, ScalarField
from .presets import preset
from .problem import ProblemSpec, load_problem
from .solver import SolverConfig, solve

__version__ = "1.0.0"
