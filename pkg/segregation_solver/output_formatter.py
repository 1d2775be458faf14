import csv
import json
import os
from typing import Any, Dict, Iterable, List, Optional, Sequence

from rich.box import ROUNDED
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from .functional import EnergyBreakdown, JpStep
from .grid import ScalarField
from .membrane import ComplementarityReport, ErrorReport, FreeBoundarySet
from .problem import ProblemSpec
from .solver import SolveReport
from .study import StudyResult

REPORT_SCHEMA = 1


def format_number(value: float, digits: int = 17) -> str:
    return format(float(value), f".{digits}g")


def _write_rows(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def field_rows(field: ScalarField, digits: int = 17) -> List[List[str]]:
    """Node coordinates and value per row, j outer and i inner in 2D."""
    grid = field.grid
    axes = [grid.coordinates(a) for a in range(grid.dim)]
    rows = []
    for idx in grid.iter_nodes():
        t = (idx,) if grid.dim == 1 else idx
        coords = [format_number(axes[a][t[a]], digits) for a in range(grid.dim)]
        rows.append(coords + [format_number(field[idx], digits)])
    return rows


def write_field_csv(path: str, field: ScalarField, digits: int = 17) -> str:
    header = ["x", "value"] if field.grid.dim == 1 else ["x", "y", "value"]
    return _write_rows(path, header, field_rows(field, digits))


def write_energy_csv(path: str, energies: Sequence[EnergyBreakdown], digits: int = 17) -> str:
    rows = (
        [k] + [format_number(term, digits) for term in e.as_row()] for k, e in enumerate(energies)
    )
    return _write_rows(path, ["sweep", "total", "quadratic", "drive1", "drive2", "boundary"], rows)


def write_jp_csv(path: str, jp: Sequence[float], steps: Sequence[JpStep], digits: int = 17) -> str:
    """One row per p; the drop/bound columns describe the step p -> p+1 (empty on the last row)."""
    by_p = {s.p: s for s in steps}
    rows = []
    for p, value in enumerate(jp, start=1):
        step = by_p.get(p)
        tail = [step.coordinate, format_number(step.drop, digits), format_number(step.bound, digits)] if step else ["", "", ""]
        rows.append([p, format_number(value, digits)] + tail)
    return _write_rows(path, ["p", "jp", "coordinate", "drop", "bound"], rows)


def write_free_boundary_csv(path: str, fb: FreeBoundarySet, digits: int = 17) -> str:
    grid = fb.grid
    axes = [grid.coordinates(a) for a in range(grid.dim)]
    zero = set(fb.zero_nodes)
    header = ["i", "x", "class", "in_zero_set"] if grid.dim == 1 else ["i", "j", "x", "y", "class", "in_zero_set"]
    rows = []
    for idx, node_class in fb.nodes:
        t = (idx,) if grid.dim == 1 else idx
        coords = [format_number(axes[a][t[a]], digits) for a in range(grid.dim)]
        rows.append(list(t) + coords + [node_class.value, int(idx in zero)])
    return _write_rows(path, header, rows)


def write_rates_csv(path: str, result: StudyResult, digits: int = 17) -> str:
    def order(row) -> str:
        if row.order is not None:
            return format_number(row.order, digits)
        return "saturated" if row.saturated else ""

    rows = (
        [row.n, format_number(row.h, digits), format_number(row.err_u1, digits),
         format_number(row.err_u2, digits), format_number(row.err_v, digits), order(row)]
        for row in result.rows
    )
    return _write_rows(path, ["n", "h", "err_u1", "err_u2", "err_v", "observed_order"], rows)


def build_solve_report(
    problem: ProblemSpec,
    report: SolveReport,
    fb: FreeBoundarySet,
    comp: Optional[ComplementarityReport] = None,
    errors: Optional[ErrorReport] = None,
) -> Dict[str, Any]:
    """Summary written to report.json; holds no timings, so reruns match byte for byte."""
    grid = problem.grid
    summary: Dict[str, Any] = {
        "schema": REPORT_SCHEMA,
        "problem": problem.name,
        "dim": grid.dim,
        "n": grid.n,
        "h": grid.h,
        "iterations": report.iterations,
        "converged": report.converged,
        "criterion": report.criterion,
        "tol": report.tol,
        "last_change": report.last_change,
        "zero_set": {"nodes": len(fb.zero_nodes), "area": fb.zero_area},
        "free_boundary_edges": len(fb.edges),
    }
    if report.energy:
        summary["energy"] = {"initial": report.energy[0].total, "final": report.energy[-1].total}
    if comp is not None:
        summary["residuals"] = {
            "bound": comp.bound,
            "max": comp.max_residual(),
            "counts": comp.counts(),
            "worst": {k: {"node": node, "residual": r} for k, (node, r) in comp.worst().items()},
        }
    if errors is not None:
        summary["reference_errors"] = {
            "err_u1": errors.err_u1,
            "err_u2": errors.err_u2,
            "err_v": errors.err_v,
            "err_sum": errors.err_sum,
        }
    return summary


def format_json(summary: Dict[str, Any]) -> str:
    return json.dumps(summary, indent=2, sort_keys=True)


def write_report_json(path: str, summary: Dict[str, Any]) -> str:
    with open(path, "w", encoding="utf-8") as f:
        f.write(format_json(summary) + "\n")
    return path


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def format_solve_console(summary: Dict[str, Any], wall_time: float, console: Optional[Console] = None):
    console = console or Console()
    status = "[green]converged[/green]" if summary["converged"] else "[yellow]max_iters reached[/yellow]"
    text = (
        f"[bold]{summary['problem']}[/bold]  dim={summary['dim']}  n={summary['n']}  h={summary['h']:.6g}\n"
        f"Status: {status} after {summary['iterations']} sweeps ({wall_time:.2f}s)\n"
        f"Last change: {summary['last_change']:.3e}  (tol {summary['tol']:.1e}, {summary['criterion']})\n"
        f"Zero set: {summary['zero_set']['nodes']} nodes, area {summary['zero_set']['area']:.6g}"
    )
    if "residuals" in summary:
        res = summary["residuals"]
        text += f"\nMax complementarity residual: {res['max']:.3e} (bound {res['bound']:.3e})"
    if "energy" in summary:
        text += f"\nJ_h: {summary['energy']['initial']:.10g} -> {summary['energy']['final']:.10g}"
    style = "bold green" if summary["converged"] else "bold yellow"
    console.print(Panel(text, title="Solve", box=ROUNDED, style=style))


def format_study_console(result: StudyResult, console: Optional[Console] = None):
    console = console or Console()
    table = Table(title=f"Refinement study: {result.problem_name}", box=ROUNDED)
    for column in ("n", "h", "err_u1", "err_u2", "err_v", "order"):
        table.add_column(column, justify="right")
    for row in result.rows:
        order = f"{row.order:.3f}" if row.order is not None else ("saturated" if row.saturated else "-")
        table.add_row(
            str(row.n), f"{row.h:.4g}", f"{row.err_u1:.3e}", f"{row.err_u2:.3e}", f"{row.err_v:.3e}", order
        )
    console.print(table)
    verdict = "[green]PASS[/green]" if result.passed else "[red]FAIL[/red]"
    text = f"fitted M = {result.fitted_m:.4g}   M_coarsest = {result.coarsest_m:.4g}   {verdict}"
    for failure in result.failures:
        text += f"\n- {failure}"
    console.print(Panel(text, title="h^(2/7) envelope", box=ROUNDED, style="bold blue"))


def format_presets_console(descriptors: Sequence[Dict[str, Any]], console: Optional[Console] = None):
    console = console or Console()
    table = Table(title="Presets", box=ROUNDED)
    for column in ("name", "dim", "domain", "f1", "f2", "boundary"):
        table.add_column(column)
    for d in descriptors:
        table.add_row(d["name"], str(d["dim"]), d["domain"], f"{d['f1']:g}", f"{d['f2']:g}", d["boundary"])
    console.print(table)


def format_presets_json(descriptors: Sequence[Dict[str, Any]]) -> str:
    return json.dumps(list(descriptors), indent=2)
