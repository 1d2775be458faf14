import logging
import os
import sys

import click
from rich import print
from rich.logging import RichHandler
from rich.markup import escape

from .config import Config, ConfigError
from .membrane import NotConvergedError, complementarity, error_vs_reference, free_boundary
from .oracle import UnsupportedProblemError, analytic_1d_constant
from .output_formatter import (
    build_solve_report,
    ensure_dir,
    format_presets_console,
    format_presets_json,
    format_solve_console,
    format_study_console,
    write_energy_csv,
    write_field_csv,
    write_free_boundary_csv,
    write_jp_csv,
    write_rates_csv,
    write_report_json,
)
from .presets import UnknownPresetError, describe_presets, preset
from .problem import ProblemFileError, load_problem, validate
from .solver import CRITERIA, SolverConfig, solve
from .study import regrid, run_study

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_MAX_ITERS = 2


def _fail(message):
    print(f"[bold red]Error:[/bold red] {escape(str(message))}")
    raise click.exceptions.Exit(EXIT_INPUT)


def _load_config(config_path):
    try:
        return Config(config_path)
    except ConfigError as e:
        _fail(str(e))


def _setup_logging(config, verbose):
    level = "DEBUG" if verbose else str(config.get("logging.level", "WARNING")).upper()
    logging.basicConfig(
        level=level, format="%(message)s", handlers=[RichHandler(show_path=False)], force=True
    )


def _load(preset_name, problem_path, n, phi1_top_full_span=False):
    if (preset_name is None) == (problem_path is None):
        _fail("give exactly one of --preset or --problem")
    try:
        if preset_name is not None:
            if n is None:
                _fail("--preset needs --n")
            return preset(preset_name, n, phi1_top_full_span=phi1_top_full_span)
        if n is not None:
            _fail("--n applies to presets; a problem file fixes its own n")
        problem = load_problem(problem_path)
    except (ProblemFileError, UnknownPresetError, ValueError, OSError) as e:
        _fail(str(e))
    violations = validate(problem)
    if violations:
        listed = "; ".join(str(v) for v in violations[:5])
        _fail(f"{problem_path}: data outside the admissible set ({len(violations)} violations): {listed}")
    return problem


def _common_options(func):
    for option in reversed(
        [
            click.option("--preset", "preset_name", default=None, help="Preset problem name (see `presets`)"),
            click.option("--problem", "problem_path", default=None, help="Path to a problem JSON file"),
            click.option("--tol", type=float, default=None, help="Stopping tolerance (overrides config)"),
            click.option("--max-iters", type=int, default=None, help="Sweep budget (default 50*n^2)"),
            click.option("--out", "out_dir", default=None, help="Output directory"),
            click.option("--config", "-c", "config_path", default=None, help="Path to configuration YAML file"),
            click.option("--verbose", "-v", is_flag=True, help="Debug logging"),
        ]
    ):
        func = option(func)
    return func


@click.group()
def cli():
    """Two-density segregation: projected finite-difference solver and convergence studies."""
    pass


@cli.command("solve")
@_common_options
@click.option("--n", type=int, default=None, help="Subdivisions per axis (presets only)")
@click.option("--criterion", type=click.Choice(CRITERIA), default=None, help="Stopping rule")
@click.option("--record-energy", is_flag=True, help="Write the discrete energy of every sweep")
@click.option("--record-jp", is_flag=True, help="Write the interleaved descent sequence (1D)")
@click.option("--phi1-top-full-span", is_flag=True, help="Read the fig2/fig3 top trace of phi1 as one line")
def solve_cmd(
    preset_name, problem_path, tol, max_iters, out_dir, config_path, verbose,
    n, criterion, record_energy, record_jp, phi1_top_full_span,
):
    """Solve one problem and write fields, energies and the free boundary."""
    config = _load_config(config_path)
    _setup_logging(config, verbose)
    problem = _load(preset_name, problem_path, n, phi1_top_full_span)
    if record_jp and problem.grid.dim != 1:
        _fail("--record-jp is only available for 1D problems")
    try:
        solver_config = SolverConfig.from_config(
            config,
            tol=tol,
            max_iters=max_iters,
            criterion=criterion,
            record_energy=record_energy or None,
            record_jp=record_jp or None,
        )
    except ValueError as e:
        _fail(str(e))

    report = solve(problem, solver_config)
    fb = free_boundary(report.state)
    comp = None
    if report.converged:
        try:
            comp = complementarity(
                report.state, problem, report.tol, config.get_float("membrane.residual_safety", 10.0)
            )
        except NotConvergedError as e:
            logger.warning(f"Skipping complementarity check: {e}")
    errors = None
    if problem.grid.dim == 1:
        try:
            reference = analytic_1d_constant(problem, xtol=config.get_float("analytic.xtol", 1e-13))
            errors = error_vs_reference(report.state, reference)
        except UnsupportedProblemError as e:
            logger.info(f"No closed-form reference: {e}")

    summary = build_solve_report(problem, report, fb, comp, errors)
    digits = config.get_int("output.float_digits", 17)
    out_dir = out_dir or config.get("output.dir", "results")
    try:
        ensure_dir(out_dir)
        write_field_csv(os.path.join(out_dir, "u1.csv"), report.state.u1, digits)
        write_field_csv(os.path.join(out_dir, "u2.csv"), report.state.u2, digits)
        write_field_csv(os.path.join(out_dir, "v.csv"), report.state.v, digits)
        if report.energy:
            write_energy_csv(os.path.join(out_dir, "energy.csv"), report.energy, digits)
        if report.jp:
            write_jp_csv(os.path.join(out_dir, "jp.csv"), report.jp, report.jp_steps, digits)
        write_free_boundary_csv(os.path.join(out_dir, "freeboundary.csv"), fb, digits)
        write_report_json(os.path.join(out_dir, "report.json"), summary)
    except OSError as e:
        _fail(f"cannot write results to {out_dir}: {e}")

    format_solve_console(summary, report.wall_time)
    print(f"[bold green]Results written to {out_dir}[/bold green]")
    raise click.exceptions.Exit(EXIT_OK if report.converged else EXIT_MAX_ITERS)


def _parse_n_list(raw):
    try:
        return [int(part) for part in raw.split(",") if part.strip()]
    except ValueError:
        _fail(f"--n-list must be comma-separated integers, got {raw!r}")


@cli.command("study")
@_common_options
@click.option("--n-list", "n_list", default=None, help="Comma-separated resolutions, e.g. 16,32,64,128")
@click.option("--reference", default=None, help="Reference solution (analytic)")
def study_cmd(preset_name, problem_path, tol, max_iters, out_dir, config_path, verbose, n_list, reference):
    """Refinement study against the closed-form 1D profile."""
    config = _load_config(config_path)
    _setup_logging(config, verbose)
    n_values = _parse_n_list(n_list) if n_list else list(config.get("study.n_list", [16, 32, 64, 128]))
    if (preset_name is None) == (problem_path is None):
        _fail("give exactly one of --preset or --problem")
    try:
        if preset_name is not None:
            name = preset_name

            def factory(n):
                return preset(name, n)

        else:
            factory = regrid(load_problem(problem_path))
        solver_config = SolverConfig.from_config(
            config, tol=tol if tol is not None else config.get_float("study.tol", 1e-13), max_iters=max_iters
        )
        result = run_study(
            factory,
            n_values,
            solver_config,
            reference=reference or config.get("study.reference", "analytic"),
            saturation_floor=config.get_float("study.saturation_floor", 1e-8),
            xtol=config.get_float("analytic.xtol", 1e-13),
        )
    except (ProblemFileError, UnknownPresetError, UnsupportedProblemError, ValueError, OSError) as e:
        _fail(str(e))

    out_dir = out_dir or config.get("output.dir", "results")
    try:
        ensure_dir(out_dir)
        write_rates_csv(os.path.join(out_dir, "rates.csv"), result, config.get_int("output.float_digits", 17))
    except OSError as e:
        _fail(f"cannot write results to {out_dir}: {e}")

    format_study_console(result)
    raise click.exceptions.Exit(EXIT_OK if result.passed else EXIT_INPUT)


@cli.command("presets")
@click.option("--json", "as_json", is_flag=True, help="Print the catalog as JSON")
def presets_cmd(as_json):
    """List the built-in reference problems."""
    descriptors = describe_presets()
    if as_json:
        click.echo(format_presets_json(descriptors))
    else:
        format_presets_console(descriptors)


def main(argv=None):
    """Console entry point; usage errors exit 1, an exhausted sweep budget exits 2."""
    try:
        rv = cli.main(args=argv, prog_name="segregation", standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(EXIT_INPUT)
    except click.ClickException as e:
        e.show()
        sys.exit(EXIT_INPUT)
    except ConfigError as e:
        print(f"[bold red]Error:[/bold red] {escape(str(e))}")
        sys.exit(EXIT_INPUT)
    sys.exit(rv or EXIT_OK)


if __name__ == "__main__":
    main()
