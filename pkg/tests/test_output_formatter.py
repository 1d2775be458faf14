import csv
import json

from rich.console import Console

from segregation_solver.grid import GridSpec, ScalarField
from segregation_solver.membrane import complementarity, free_boundary
from segregation_solver.output_formatter import (
    REPORT_SCHEMA,
    build_solve_report,
    field_rows,
    format_json,
    format_number,
    format_presets_json,
    format_solve_console,
    format_study_console,
    write_field_csv,
    write_rates_csv,
)
from segregation_solver.presets import describe_presets, preset
from segregation_solver.solver import SolverConfig, solve
from segregation_solver.study import StudyResult, StudyRow


def _rows(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


def _study_result(failures=()):
    rows = [
        StudyRow(16, 0.125, 1e-3, 2e-4, 1e-3, None, False, 100, True),
        StudyRow(32, 0.0625, 4e-4, 1e-4, 4e-4, 1.3219280948873624, False, 400, True),
        StudyRow(64, 0.03125, 1e-12, 1e-12, 1e-12, None, True, 1600, True),
    ]
    return StudyResult("fig1c", rows, 2e-3, 1.8e-3, list(failures))


def test_format_number_round_trips():
    assert float(format_number(0.1)) == 0.1
    assert format_number(-1.0) == "-1"
    assert format_number(1 / 3, 6) == "0.333333"


def test_field_csv_1d(tmp_path):
    field = ScalarField(GridSpec.interval(-1.0, 1.0, 2), [1.0, 0.0, -1.0])
    rows = _rows(write_field_csv(str(tmp_path / "v.csv"), field))
    assert rows == [["x", "value"], ["-1", "1"], ["0", "0"], ["1", "-1"]]


def test_field_rows_2d_run_x_fastest():
    grid = GridSpec.square(0.0, 0.0, 1.0, 2)
    field = ScalarField.sample(grid, lambda x, y: x + 10 * y)
    rows = field_rows(field)
    assert len(rows) == 9
    assert rows[:3] == [["0", "0", "0"], ["0.5", "0", "0.5"], ["1", "0", "1"]]
    assert rows[-1] == ["1", "1", "11"]


def test_rates_csv_marks_saturated_rows(tmp_path):
    rows = _rows(write_rates_csv(str(tmp_path / "rates.csv"), _study_result(), digits=6))
    assert rows[0] == ["n", "h", "err_u1", "err_u2", "err_v", "observed_order"]
    assert rows[1][-1] == ""
    assert rows[2][-1] == "1.32193"
    assert rows[3][-1] == "saturated"


class TestSolveReport:
    def test_keys_and_json_safety(self):
        problem = preset("fig1a", 8)
        report = solve(problem, SolverConfig(record_energy=True))
        fb = free_boundary(report.state)
        comp = complementarity(report.state, problem, report.tol)
        summary = build_solve_report(problem, report, fb, comp)
        assert summary["schema"] == REPORT_SCHEMA
        assert summary["energy"]["final"] <= summary["energy"]["initial"]
        assert set(summary["residuals"]["worst"]) == {"positive", "negative", "zero"}
        assert "reference_errors" not in summary
        text = format_json(summary)
        assert json.loads(text)["zero_set"]["nodes"] == 1
        assert text.index('"converged"') < text.index('"criterion"')

    def test_2d_worst_nodes_serialize_as_pairs(self):
        problem = preset("fig3", 8)
        report = solve(problem)
        comp = complementarity(report.state, problem, report.tol)
        summary = json.loads(format_json(build_solve_report(problem, report, free_boundary(report.state), comp)))
        node = summary["residuals"]["worst"]["positive"]["node"]
        assert isinstance(node, list) and len(node) == 2


def test_solve_console_panel():
    problem = preset("fig1a", 4)
    report = solve(problem)
    console = Console(record=True, width=120)
    format_solve_console(build_solve_report(problem, report, free_boundary(report.state)), 0.5, console)
    text = console.export_text()
    assert "fig1a" in text
    assert "converged" in text


def test_study_console_lists_failures():
    console = Console(record=True, width=120)
    format_study_console(_study_result(["error grew from n=32 to n=64"]), console)
    text = console.export_text()
    assert "FAIL" in text
    assert "error grew" in text
    assert "saturated" in text


def test_presets_json():
    listing = json.loads(format_presets_json(describe_presets()))
    assert len(listing) == 6
    assert listing[0]["domain"] == "[-1, 1]"
