import numpy as np
import pytest

from segregation_solver.grid import GridSpec, ScalarField
from segregation_solver.membrane import (
    NodeClass,
    NotConvergedError,
    complementarity,
    complementarity_residuals,
    error_vs_reference,
    free_boundary,
)
from segregation_solver.oracle import analytic_1d_constant
from segregation_solver.presets import PRESET_NAMES, preset
from segregation_solver.problem import BoundaryTrace, DynamicsField, ProblemSpec
from segregation_solver.solver import SolverState, initialize, state_from_difference


def _state_from(values):
    grid = GridSpec.interval(0.0, 1.0, len(values) - 1)
    return state_from_difference(ScalarField(grid, values))


class TestComplementarity:
    @pytest.mark.parametrize("n", [8, 16, 64])
    def test_fig1a_residuals_are_tiny(self, solved, n):
        problem, report = solved("fig1a", n)
        comp = complementarity(report.state, problem, tol=report.tol)
        assert comp.max_residual() <= 10 * report.tol / problem.grid.h**2

    @pytest.mark.parametrize("name", ["fig1b", "fig1c", "fig1d"])
    def test_constant_dynamics_phase_residuals(self, solved, name):
        problem, report = solved(name, 64)
        comp = complementarity(report.state, problem, tol=report.tol)
        limit = 10 * report.tol / problem.grid.h**2
        assert comp.max_residual(NodeClass.POSITIVE) <= limit
        assert comp.max_residual(NodeClass.NEGATIVE) <= limit

    @pytest.mark.parametrize("name", PRESET_NAMES)
    def test_fixed_point_implies_complementarity(self, solved, name):
        n = 32 if name.startswith("fig1") else 16
        problem, report = solved(name, n)
        comp = complementarity(report.state, problem, tol=report.tol)
        assert comp.satisfied
        counts = comp.counts()
        assert sum(counts.values()) == (n - 1) ** problem.grid.dim

    def test_all_zero_state_is_in_the_zero_class(self):
        grid = GridSpec.interval(0.0, 1.0, 6)
        problem = ProblemSpec(
            grid,
            DynamicsField.constant(grid, 1.0),
            DynamicsField.constant(grid, 1.0),
            BoundaryTrace.constant(grid, 0.0),
            BoundaryTrace.constant(grid, 0.0),
        )
        comp = complementarity(initialize(problem), problem)
        assert comp.counts() == {"positive": 0, "negative": 0, "zero": 5}
        assert comp.max_residual() == 0.0
        assert comp.classification(3) == NodeClass.ZERO

    def test_unconverged_state_is_refused(self):
        problem = preset("fig1c", 16)
        with pytest.raises(NotConvergedError):
            complementarity(initialize(problem), problem)

    def test_worst_nodes_are_reported_per_class(self, solved):
        problem, report = solved("fig1c", 32)
        worst = complementarity(report.state, problem, tol=report.tol).worst()
        assert set(worst) == {"positive", "negative", "zero"}
        node, residual = worst["positive"]
        assert report.state.v[node] > 0
        assert residual >= 0.0


class TestFreeBoundary:
    def test_sign_pattern_with_one_zero_node(self):
        fb = free_boundary(_state_from([1.0, 2.0, 0.0, -1.0, -3.0]))
        assert fb.zero_nodes == (2,)
        assert fb.edges == ((1, 2), (2, 3))
        assert fb.zero_area == pytest.approx(0.25)
        assert [c for _, c in fb.nodes] == [NodeClass.POSITIVE, NodeClass.ZERO, NodeClass.NEGATIVE]

    def test_direct_sign_change_has_no_zero_set(self):
        fb = free_boundary(_state_from([1.0, 0.5, -0.5, -1.0]))
        assert fb.edges == ((1, 2),)
        assert fb.zero_nodes == ()
        assert fb.zero_area == 0.0

    def test_invariant_under_positive_scaling(self):
        state = _state_from([1.0, 2.0, 0.0, 0.0, -1.0, -3.0, 0.0])
        scaled = SolverState(3.5 * state.u1, 3.5 * state.u2)
        assert free_boundary(scaled) == free_boundary(state)

    def test_fig1a_free_boundary_at_midpoint(self, solved):
        problem, report = solved("fig1a", 16)
        fb = free_boundary(report.state)
        h = problem.grid.h
        assert fb.zero_area <= h
        x = problem.grid.coordinates()
        touched = {i for edge in fb.edges for i in edge}
        assert all(abs(x[i]) <= h + 1e-12 for i in touched)

    def test_touching_phases_leave_at_most_a_grid_layer(self, solved):
        # node 11 (x = 0.375) is the nearest node to the contact point;
        # the discrete solution is linear up to it and quadratic after it
        problem, report = solved("fig1b", 16)
        fb = free_boundary(report.state)
        assert fb.zero_nodes == (11,)
        assert fb.edges == ((10, 11), (11, 12))

    def test_fig3_zero_set_dwarfs_fig2(self, solved):
        _, touching = solved("fig2", 128)
        _, separated = solved("fig3", 128)
        assert separated.converged and touching.converged
        fig3_area = free_boundary(separated.state).zero_area
        assert fig3_area > 0.01
        assert free_boundary(touching.state).zero_area < 0.25 * fig3_area

    def test_2d_edges_cover_both_axes(self, solved):
        problem, report = solved("fig2", 16)
        edges = free_boundary(report.state).edges
        assert edges
        assert any(a[0] != b[0] for a, b in edges)
        assert any(a[1] != b[1] for a, b in edges)


class TestErrorVsReference:
    def test_reference_equal_to_state(self, solved):
        problem, report = solved("fig1c", 16)
        errors = error_vs_reference(report.state, (report.state.u1, report.state.u2))
        assert errors.worst == 0.0
        assert errors.err_sum == 0.0
        assert errors.combination_holds

    def test_fig1a_matches_the_analytic_solution(self, solved):
        problem, report = solved("fig1a", 16)
        errors = error_vs_reference(report.state, analytic_1d_constant(problem))
        assert errors.err_u1 <= 1e-8
        assert errors.err_u2 <= 1e-8
        assert errors.err_v <= 1e-8

    @pytest.mark.parametrize("name", ["fig1b", "fig1c", "fig1d"])
    def test_combination_inequality(self, solved, name):
        problem, report = solved(name, 32)
        errors = error_vs_reference(report.state, analytic_1d_constant(problem))
        assert errors.combination_holds is True


def test_residual_codes_follow_the_sign_of_v():
    grid = GridSpec.interval(0.0, 1.0, 4)
    problem = ProblemSpec(
        grid,
        DynamicsField.constant(grid, 0.0),
        DynamicsField.constant(grid, 0.0),
        BoundaryTrace.table(grid, [1.0, 0.0]),
        BoundaryTrace.table(grid, [0.0, 1.0]),
    )
    state = _state_from([1.0, 0.5, 0.0, -0.5, -1.0])
    codes, residuals = complementarity_residuals(state.u1.values, state.u2.values, problem)
    assert list(codes) == [1, 0, -1]
    np.testing.assert_allclose(residuals, 0.0, atol=1e-12)
