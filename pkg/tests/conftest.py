import functools

import pytest

from segregation_solver.presets import preset
from segregation_solver.solver import SolverConfig, solve


@functools.lru_cache(maxsize=None)
def _solved(name, n, tol=1e-10, record_energy=False, record_jp=False):
    problem = preset(name, n)
    config = SolverConfig(tol=tol, record_energy=record_energy, record_jp=record_jp)
    return problem, solve(problem, config)


@pytest.fixture
def solved():
    """(problem, report) of a preset solve, computed once per session per argument set."""
    return _solved


@pytest.fixture
def isolated_cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path
