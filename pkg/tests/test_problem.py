import json

import numpy as np
import pytest

from segregation_solver.grid import GridSpec
from segregation_solver.presets import preset
from segregation_solver.problem import (
    BoundaryTrace,
    DynamicsField,
    ProblemFileError,
    ProblemSpec,
    boundary_arc,
    load_problem,
    modified_dynamics,
    parse_problem,
    problem_to_dict,
    validate,
)

PROBLEM_1D = """{
  "name": "bar",
  "dim": 1,
  "origin": [-1.0],
  "extent": [2.0],
  "n": 8,
  "f1": {"constant": 1.0},
  "f2": {"constant": 8.0},
  "phi1": {"table": [1.0, 0.0]},
  "phi2": {"table": [0.0, 1.0]}
}
"""


def _problem_1d(phi1=(1.0, 0.0), phi2=(0.0, 1.0), f1=0.0, f2=0.0, n=8):
    grid = GridSpec.interval(-1.0, 1.0, n)
    return ProblemSpec(
        grid,
        DynamicsField.constant(grid, f1),
        DynamicsField.constant(grid, f2),
        BoundaryTrace.table(grid, list(phi1)),
        BoundaryTrace.table(grid, list(phi2)),
    )


class TestValidate:
    def test_admissible_problem_has_no_violations(self):
        assert validate(_problem_1d()) == []

    def test_overlapping_traces_are_flagged(self):
        violations = validate(_problem_1d(phi1=(1.0, 0.0), phi2=(0.5, 1.0)))
        assert len(violations) == 1
        assert violations[0].condition == "product nonzero at node"
        assert violations[0].node == 0

    def test_negative_dynamics_flagged_per_node(self):
        violations = validate(_problem_1d(f1=-1.0, n=4))
        assert len(violations) == 5
        assert all(v.condition == "negative dynamics f1" for v in violations)

    def test_negative_trace_flagged(self):
        violations = validate(_problem_1d(phi1=(-0.1, 0.0)))
        assert [v.condition for v in violations] == ["negative boundary trace phi1"]


def test_non_finite_data_cannot_be_constructed():
    grid = GridSpec.interval(0.0, 1.0, 4)
    with pytest.raises(ValueError, match="finite"):
        DynamicsField.constant(grid, float("nan"))
    with pytest.raises(ValueError, match="finite"):
        DynamicsField.table(grid, [0.0, 1.0, float("inf"), 0.0, 0.0])
    with pytest.raises(ValueError, match="finite"):
        BoundaryTrace.table(grid, [float("inf"), 0.0])
    with pytest.raises(ValueError, match="finite"):
        BoundaryTrace.constant(grid, float("nan"))
    with pytest.raises(ValueError, match="pairs"):
        BoundaryTrace.piecewise_linear(grid, [[0.0]])


def test_modified_dynamics_absorbs_boundary_term():
    problem = _problem_1d(f1=1.0, f2=8.0, n=4)
    md = modified_dynamics(problem)
    h2 = problem.grid.h ** 2
    # g = 1 at x=-1 and -1 at x=1; only the end interior nodes see it
    np.testing.assert_allclose(md.f1_tilde, [1.0 - 1.0 / h2, 1.0, 1.0 + 1.0 / h2])
    np.testing.assert_allclose(md.f2_tilde, [8.0 - 1.0 / h2, 8.0, 8.0 + 1.0 / h2])


def test_modified_dynamics_worked_1d_example():
    grid = GridSpec.interval(0.0, 2.0, 4)
    problem = ProblemSpec(
        grid,
        DynamicsField.constant(grid, 2.0),
        DynamicsField.constant(grid, 0.0),
        BoundaryTrace.table(grid, [1.0, 0.0]),
        BoundaryTrace.table(grid, [0.0, 1.0]),
    )
    assert list(modified_dynamics(problem).f1_tilde) == [-2.0, 2.0, 6.0]


def test_modified_dynamics_corner_node_sees_both_boundary_neighbors():
    grid = GridSpec.square(0.0, 0.0, 1.0, 4)
    phi1 = np.zeros(grid.shape)
    phi1[1, 0], phi1[0, 1] = 0.5, 0.25
    problem = ProblemSpec(
        grid,
        DynamicsField.constant(grid, 3.0),
        DynamicsField.constant(grid, 1.0),
        BoundaryTrace(grid, phi1),
        BoundaryTrace.constant(grid, 0.0),
    )
    md = modified_dynamics(problem)
    # L_h g at (1, 1) = (0.5 + 0.25) / h² = 12
    expected = np.full((3, 3), 3.0)
    expected[0, 0] = -9.0
    np.testing.assert_array_equal(md.f1_tilde, expected)
    assert md.f2_tilde[0, 0] == -11.0
    assert np.all(md.f2_tilde.ravel()[1:] == 1.0)


def test_modified_dynamics_is_linear_in_the_boundary_data():
    base = preset("fig3", 8)
    doubled = ProblemSpec(
        base.grid,
        base.f1,
        base.f2,
        BoundaryTrace(base.grid, 2.0 * base.phi1.values),
        BoundaryTrace(base.grid, 2.0 * base.phi2.values),
    )
    f1 = base.f1.values[1:-1, 1:-1]
    correction = modified_dynamics(base).f1_tilde - f1
    assert np.any(correction != 0.0)
    np.testing.assert_allclose(modified_dynamics(doubled).f1_tilde - f1, 2.0 * correction, rtol=1e-14, atol=1e-12)


@pytest.mark.parametrize("name", ["fig2", "fig3"])
@pytest.mark.parametrize("n", [16, 64])
def test_square_preset_traces_are_continuous_along_the_boundary(name, n):
    problem = preset(name, n)
    max_slope = 2.5
    for trace in (problem.phi1, problem.phi2):
        values = np.array(trace.arc_values())
        # close the loop at the origin corner
        jumps = np.abs(np.diff(np.append(values, values[0])))
        assert np.max(jumps) <= max_slope * problem.grid.h + 1e-12


def test_boundary_arc_is_counterclockwise_and_lists_corners_once():
    grid = GridSpec.square(0.0, 0.0, 1.0, 2)
    arc = boundary_arc(grid)
    nodes = [idx for idx, _ in arc]
    assert nodes == [(0, 0), (1, 0), (2, 0), (2, 1), (2, 2), (1, 2), (0, 2), (0, 1)]
    ts = [t for _, t in arc]
    assert ts == sorted(ts)
    assert ts[-1] == pytest.approx(3.5)


def test_piecewise_linear_trace_interpolates_along_the_arc():
    grid = GridSpec.square(0.0, 0.0, 1.0, 4)
    trace = BoundaryTrace.piecewise_linear(grid, [[0.0, 1.0], [1.0, 0.0], [4.0, 0.0]])
    assert trace.values[0, 0] == 1.0
    assert trace.values[2, 0] == pytest.approx(0.5)
    assert trace.values[4, 2] == 0.0
    assert trace.values[2, 2] == 0.0


def test_parse_problem_reads_all_fields():
    problem = parse_problem(PROBLEM_1D, "bar.json")
    assert problem.name == "bar"
    assert problem.grid.n == 8
    assert problem.f2.constant_value() == 8.0
    assert problem.phi1.values[0] == 1.0
    assert problem.phi2.values[8] == 1.0


def test_load_problem_from_file(tmp_path):
    path = tmp_path / "bar.json"
    path.write_text(PROBLEM_1D)
    assert load_problem(str(path)).grid.h == 0.25


class TestProblemFileErrors:
    def test_syntax_error_reports_position(self):
        text = PROBLEM_1D.replace('"n": 8,', '"n": 8')
        with pytest.raises(ProblemFileError) as exc:
            parse_problem(text, "bad.json")
        assert exc.value.line == 7
        assert str(exc.value).startswith("bad.json:7:")

    def test_unknown_key_is_anchored_at_its_line(self):
        text = PROBLEM_1D.replace('"n": 8,', '"n": 8,\n  "colour": "red",')
        with pytest.raises(ProblemFileError) as exc:
            parse_problem(text, "bad.json")
        assert exc.value.line == 7
        assert "colour" in exc.value.message

    def test_unknown_trace_kind_is_anchored(self):
        text = PROBLEM_1D.replace('"phi2": {"table": [0.0, 1.0]}', '"phi2": {"spline": [0.0, 1.0]}')
        with pytest.raises(ProblemFileError) as exc:
            parse_problem(text, "bad.json")
        assert exc.value.line == 10

    def test_wrong_table_length(self):
        text = PROBLEM_1D.replace('"phi1": {"table": [1.0, 0.0]}', '"phi1": {"table": [1.0, 0.0, 0.0]}')
        with pytest.raises(ProblemFileError) as exc:
            parse_problem(text, "bad.json")
        assert exc.value.line == 9
        assert "2 values" in exc.value.message

    @pytest.mark.parametrize(
        "old,new,line",
        [
            ('"constant": 1.0', '"constant": NaN', 7),
            ('"table": [1.0, 0.0]', '"table": [Infinity, 0.0]', 9),
            ('"origin": [-1.0]', '"origin": [-Infinity]', 4),
            ('"constant": 8.0', '"table": [8, 8, 8, 8, NaN, 8, 8, 8, 8]', 8),
        ],
    )
    def test_non_finite_numbers_are_rejected(self, old, new, line):
        with pytest.raises(ProblemFileError) as exc:
            parse_problem(PROBLEM_1D.replace(old, new), "bad.json")
        assert exc.value.line == line
        assert "non-finite value" in exc.value.message

    @pytest.mark.parametrize("knots", ["[[0.0]]", "[[0.0, 1.0, 2.0]]", "[]", "[0.0, 1.0]", "[[0.0, NaN]]"])
    def test_malformed_knots_are_anchored(self, knots):
        text = PROBLEM_1D.replace('"phi1": {"table": [1.0, 0.0]}', '"phi1": {"piecewise_linear": %s}' % knots)
        with pytest.raises(ProblemFileError) as exc:
            parse_problem(text, "bad.json")
        assert exc.value.line == 9
        assert "piecewise_linear" in exc.value.message

    def test_missing_key(self):
        doc = json.loads(PROBLEM_1D)
        del doc["f1"]
        with pytest.raises(ProblemFileError, match="missing required key 'f1'"):
            parse_problem(json.dumps(doc))


def test_preset_round_trips_through_problem_schema():
    original = preset("fig2", 8)
    reparsed = parse_problem(json.dumps(problem_to_dict(original)))
    np.testing.assert_array_equal(reparsed.phi1.values, original.phi1.values)
    np.testing.assert_array_equal(reparsed.phi2.values, original.phi2.values)
    np.testing.assert_array_equal(reparsed.f2.values, original.f2.values)
    assert reparsed.name == "fig2"


def test_table_dynamics_use_file_order():
    grid = GridSpec.square(0.0, 0.0, 1.0, 1)
    dyn = DynamicsField.table(grid, [1.0, 2.0, 3.0, 4.0])
    assert dyn.values[1, 0] == 2.0
    assert dyn.values[0, 1] == 3.0
    assert dyn.constant_value() is None
