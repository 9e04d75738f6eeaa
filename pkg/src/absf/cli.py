"""Command-line entry points.

Exit codes: 0 success, 1 stage failure (stage named on stderr), 2 missing
or unreadable input file, 3 no feasible plan.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .errors import AbsfError, NoFeasiblePlanError
from .formats import dump_json, load_json, load_plan, save_fill_csv, save_plan, save_trace_csv
from .geometry import BridgePlan
from .planner import check_constraints, check_fps_fit, solve_bridge
from .scenario import Scenario, bundled_scenarios, load_scenario

_SCENARIO_HELP = f"Bundled scenario name ({', '.join(bundled_scenarios())}) or a scenario file path."


def _load_scenario_or_die(name: str) -> Scenario:
    try:
        return load_scenario(name)
    except FileNotFoundError as exc:
        click.echo(f"load: {exc}", err=True)
        sys.exit(2)
    except (ValueError, AbsfError) as exc:
        click.echo(f"load: {exc}", err=True)
        sys.exit(2)


def _load_plan_or_die(path: str) -> BridgePlan:
    try:
        return load_plan(path)
    except FileNotFoundError as exc:
        click.echo(f"load: {exc}", err=True)
        sys.exit(2)
    except (ValueError, AbsfError) as exc:
        click.echo(f"load: {exc}", err=True)
        sys.exit(2)


def _stage(name: str):
    """Convert stage exceptions into the documented exit codes."""

    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is None:
                return False
            if isinstance(exc, FileNotFoundError):
                click.echo(f"{name}: {exc}", err=True)
                sys.exit(2)
            if isinstance(exc, NoFeasiblePlanError):
                click.echo(f"{name}: {exc}", err=True)
                sys.exit(3)
            if isinstance(exc, (AbsfError, ValueError)):
                click.echo(f"{name}: {exc}", err=True)
                sys.exit(1)
            return False

    return _Ctx()


@click.group()
def main():
    """Planning, simulation, and metrology for bridged drilling trajectories."""


@main.command()
@click.option("--scenario", "scenario_name", required=True, help=_SCENARIO_HELP)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out-dir", type=click.Path(), default=None, help="Write plan.json here.")
def plan(scenario_name, seed, out_dir):
    """Solve the bridge meeting problem for a scenario."""
    sc = _load_scenario_or_die(scenario_name)
    with _stage("solve"):
        result = solve_bridge(
            sc.model, sc.grid, sc.left_spec, sc.right_spec, sc.planner, sc.tool, seed=seed
        )
    click.echo(
        f"plan: gap {result.tip_gap:.3f} mm, meeting angle {result.theta_deg:.2f} deg"
    )
    if out_dir:
        path = save_plan(result, Path(out_dir) / "plan.json")
        click.echo(f"wrote {path}")


@main.command()
@click.option("--scenario", "scenario_name", required=True, help=_SCENARIO_HELP)
@click.option("--plan", "plan_path", required=True, type=click.Path(), help="Plan file to check.")
def check(scenario_name, plan_path):
    """Re-check a plan file against the scenario constraints."""
    sc = _load_scenario_or_die(scenario_name)
    plan_obj = _load_plan_or_die(plan_path)
    with _stage("check"):
        report = check_constraints(sc.model, sc.grid, plan_obj, sc.tool, sc.planner)
        fit = check_fps_fit(
            plan_obj, sc.fps, corridor_diameter=2.0 * min(c.radius for c in sc.model.corridors)
        )
    for name, margin in report.details:
        shown = "n/a" if margin is None else f"{margin:+.3f}"
        click.echo(f"{name:12s} margin {shown}")
    click.echo(f"screw fit ok: {fit.ok}")
    click.echo("feasible" if report.feasible else "infeasible")
    if not report.feasible:
        sys.exit(1)


@main.command()
@click.option("--scenario", "scenario_name", required=True, help=_SCENARIO_HELP)
@click.option("--plan", "plan_path", default=None, type=click.Path(),
              help="Plan file; solved from the scenario when omitted.")
@click.option("--params", "params_path", default=None, type=click.Path(),
              help="JSON file with explicit side parameter values.")
@click.option("--out-dir", type=click.Path(), default=None)
def evaluate(scenario_name, plan_path, params_path, out_dir):
    """Evaluate meeting metrics and constraints for explicit parameters."""
    sc = _load_scenario_or_die(scenario_name)
    from .planner import entry_pose_on_corridor
    from .geometry import SideParams

    if plan_path is not None:
        plan_obj = _load_plan_or_die(plan_path)
    elif params_path is not None:
        try:
            doc = load_json(params_path)
        except FileNotFoundError as exc:
            click.echo(f"load: {exc}", err=True)
            sys.exit(2)
        sides = {}
        with _stage("evaluate"):
            for side in ("left", "right"):
                d = doc["sides"][side]
                entry = entry_pose_on_corridor(
                    sc.model, int(d.get("corridor", 0 if side == "left" else 1)),
                    float(d.get("slide", 0.0)), float(d["alpha_deg"]),
                    float(d.get("bend_roll_deg", 0.0)),
                )
                sides[side] = (entry, SideParams(
                    d["kind"], entry.axial_angle_deg(), float(d["l_ot"]),
                    float(d.get("l_it", 0.0)), float(d.get("r", 0.0)),
                ))
            plan_obj = BridgePlan(left=sides["left"], right=sides["right"])
    else:
        click.echo("evaluate: pass --plan or --params", err=True)
        sys.exit(2)

    with _stage("evaluate"):
        report = check_constraints(sc.model, sc.grid, plan_obj, sc.tool, sc.planner)
    click.echo(
        f"gap {plan_obj.tip_gap:.3f} mm, meeting angle {plan_obj.theta_deg:.2f} deg, "
        f"feasible {report.feasible}"
    )
    if out_dir:
        doc = plan_obj.to_dict()
        doc["constraints"] = report.to_dict()
        path = dump_json(doc, Path(out_dir) / "evaluation.json")
        click.echo(f"wrote {path}")


@main.command()
@click.option("--scenario", "scenario_name", required=True, help=_SCENARIO_HELP)
@click.option("--plan", "plan_path", default=None, type=click.Path())
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out-dir", type=click.Path(), required=True)
def simulate(scenario_name, plan_path, seed, out_dir):
    """Simulate drilling (three repeats per side) and write trace CSVs."""
    sc = _load_scenario_or_die(scenario_name)
    if plan_path is not None:
        plan_obj = _load_plan_or_die(plan_path)
    else:
        with _stage("solve"):
            plan_obj = solve_bridge(
                sc.model, sc.grid, sc.left_spec, sc.right_spec, sc.planner, sc.tool, seed=seed
            )
    from .pipeline import simulate_plan, tracker_offset

    with _stage("simulate"):
        traces = simulate_plan(plan_obj, sc.sim, sc.repeats, seed, offset=tracker_offset(seed))
    out = Path(out_dir)
    for side, runs in traces.items():
        for rep, tr in enumerate(runs, start=1):
            path = save_trace_csv(tr, out / f"trace_{side}_{rep}.csv")
            click.echo(f"wrote {path}")


@main.command()
@click.option("--scenario", "scenario_name", required=True, help=_SCENARIO_HELP)
@click.option("--plan", "plan_path", default=None, type=click.Path())
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out-dir", type=click.Path(), required=True)
def inject(scenario_name, plan_path, seed, out_dir):
    """Run the augmentation fill model and write the fill log."""
    sc = _load_scenario_or_die(scenario_name)
    if plan_path is not None:
        plan_obj = _load_plan_or_die(plan_path)
    else:
        with _stage("solve"):
            plan_obj = solve_bridge(
                sc.model, sc.grid, sc.left_spec, sc.right_spec, sc.planner, sc.tool, seed=seed
            )
    from .cementsim import run_fill

    with _stage("inject"):
        history = run_fill(plan_obj, sc.injection, sc.fill_radius)
    out = Path(out_dir)
    path = save_fill_csv(history, out / "fill.csv")
    final = history[-1][1]
    click.echo(f"wrote {path}")
    click.echo(
        f"bridged: {final.bridged} after {history[-1][0]:.0f} s, "
        f"{final.injected_volume:.0f} mm3 injected"
    )
    if not final.bridged:
        sys.exit(1)


@main.command()
@click.option("--scenario", "scenario_name", required=True, help=_SCENARIO_HELP)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out-dir", type=click.Path(), required=True)
@click.option("--figures/--no-figures", default=True, show_default=True)
def run(scenario_name, seed, out_dir, figures):
    """Full pipeline: solve, check, simulate, register, fit, inject, report."""
    sc = _load_scenario_or_die(scenario_name)
    from .pipeline import run_pipeline

    with _stage("run"):
        result = run_pipeline(sc, seed=seed, out_dir=out_dir, figures=figures)
    rep = result.report_dict()
    click.echo(
        f"{rep['scenario']}: gap {rep['plan']['tip_gap_mm']} mm, "
        f"angle {rep['plan']['theta_deg']} deg, combined rmse {rep['combined_rmse_mm']} mm"
    )
    for side, ps in rep["per_side"].items():
        if ps["fitted_r_mm"] is not None:
            click.echo(
                f"  {side}: bend radius {ps['fitted_r_mm']} mm "
                f"(nominal {ps['ideal_r_mm']}, error {ps['radius_error_pct']}%)"
            )
    click.echo(f"bridged: {rep['fill']['bridged']}")
    for name, path in sorted(result.artifacts.items()):
        click.echo(f"wrote {path}")
    if not result.feasible or not rep["fill"]["bridged"]:
        click.echo("run: pipeline finished infeasible", err=True)
        sys.exit(1)


@main.command()
@click.option("--scenario", "scenario_name", default="S1", show_default=True, help=_SCENARIO_HELP)
@click.option("--port", default=8137, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--static-dir", type=click.Path(), default=None,
              help="Optional built UI directory to serve at /.")
def serve(scenario_name, port, host, static_dir):
    """Run the loopback JSON service."""
    sc = _load_scenario_or_die(scenario_name)
    from .service import serve as run_service

    click.echo(f"serving scenario {sc.name} on http://{host}:{port}")
    run_service(sc, port=port, host=host, static_dir=static_dir)


if __name__ == "__main__":
    main()
