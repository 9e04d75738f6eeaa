"""End-to-end run: solve, check, simulate, register, fit, inject, report.

The measurement stage mirrors the physical protocol: each side is drilled
and measured three times, the tracker samples live in a misaligned
tracker frame (a seeded rigid offset), registration against the
planned-path point set recovers the model frame, and the achieved bend
radius per repeat is fitted on the pooled insertion-plus-retraction arc
samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .cementsim import FillChannel, cavity_volume, run_fill
from .drillsim import Phase, SimConfig, Trace, execute_side
from .formats import dump_json, save_fill_csv, save_trace_csv
from .geometry import BridgePlan, SideKind, sample_path
from .metrology import (
    MetrologyReport,
    RigidTransform,
    fit_radius,
    icp_register,
    radius_error,
    split_straight_curved,
)
from .planner import check_constraints, check_fps_fit, score_plan, solve_bridge
from .scenario import Scenario

__all__ = [
    "PipelineResult",
    "run_pipeline",
    "simulate_plan",
    "tracker_offset",
    "evaluate_traces",
    "arc_window_points",
    "fit_side_radius",
]

REGISTRATION_STEP = 0.25  # mm spacing of the planned-path registration target

THETA_CONVENTION = "directed tip tangents, degrees in [0, 180]"
REGISTRATION_CONVENTION = "trace samples registered against the planned-path point set"


def tracker_offset(seed: int) -> RigidTransform:
    """Seeded rigid misalignment standing in for the tracker mount frame."""
    rng = np.random.default_rng([int(seed), 0x7F4A7])
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    ang = math.radians(rng.uniform(5.0, 15.0))
    k = np.array([
        [0.0, -axis[2], axis[1]],
        [axis[2], 0.0, -axis[0]],
        [-axis[1], axis[0], 0.0],
    ])
    rot = np.eye(3) + math.sin(ang) * k + (1.0 - math.cos(ang)) * (k @ k)
    return RigidTransform(rot, rng.uniform(-10.0, 10.0, 3))


def simulate_plan(
    plan: BridgePlan, sim: SimConfig, repeats: int, seed: int,
    offset: RigidTransform | None = None,
) -> dict[str, list[Trace]]:
    """Drill both sides ``repeats`` times; traces land in the tracker frame
    when an ``offset`` is given."""
    out: dict[str, list[Trace]] = {}
    for s_idx, side in enumerate(("left", "right")):
        entry, params = plan.side(side)
        runs = []
        for rep in range(repeats):
            cfg = replace(sim, seed=int(seed) * 1000 + s_idx * 100 + rep)
            tr = execute_side(entry, params, cfg, side=side)
            if offset is not None:
                tr = tr.transformed(offset.rotation, offset.translation)
            runs.append(tr)
        out[side] = runs
    return out


def arc_window_points(trace: Trace, changeover_index: int) -> np.ndarray:
    """Pooled insertion + retraction samples of the curved window.

    The window runs from the changeover sample to two samples before the
    tip (tip-dwell guard); retraction samples replaying the same stations
    carry independent noise, so pooling them halves the fit variance.
    """
    ins_idx = np.where(trace.phases <= Phase.STATIONARY_DRILLING)[0]
    n_ins = len(ins_idx)
    sel_ins = ins_idx[changeover_index : n_ins - 2]
    ret_idx = np.where(trace.phases == Phase.RETRACTING)[0]
    ks = np.arange(len(ret_idx))
    orig = n_ins - 1 - ks  # retraction sample k replays insertion sample orig
    sel_ret = ret_idx[(orig >= changeover_index) & (orig < n_ins - 2)]
    return np.vstack([trace.positions[sel_ins], trace.positions[sel_ret]])


def fit_side_radius(traces: list[Trace], transform: RigidTransform):
    """Per-repeat changeover + radius fit of registered curved-side traces.

    Returns (mean radius, std, per-repeat radii, first changeover result).
    """
    radii = []
    first_changeover = None
    for tr in traces:
        registered = tr.transformed(transform.rotation, transform.translation)
        res = split_straight_curved(registered.insertion())
        if first_changeover is None:
            first_changeover = res
        pts = arc_window_points(registered, res.index)
        r, _ = fit_radius(pts)
        radii.append(r)
    radii = np.array(radii)
    return float(radii.mean()), float(radii.std()), radii, first_changeover


@dataclass(frozen=True)
class SideEvaluation:
    report: MetrologyReport
    changeover_arclength_mm: float | None
    fitted_r_std_mm: float | None
    repeat_radii: tuple = ()

    def to_dict(self) -> dict:
        d = self.report.to_dict()
        d["changeover_arclength_mm"] = (
            None if self.changeover_arclength_mm is None
            else round(self.changeover_arclength_mm, 3)
        )
        d["fitted_r_std_mm"] = (
            None if self.fitted_r_std_mm is None else round(self.fitted_r_std_mm, 3)
        )
        d["repeat_fitted_r_mm"] = [round(float(r), 3) for r in self.repeat_radii]
        return d


def evaluate_traces(
    plan: BridgePlan, traces: dict[str, list[Trace]]
) -> tuple[dict[str, SideEvaluation], float, RigidTransform]:
    """Register pooled insertion samples onto the planned paths, then fit
    each curved side.  Returns (per-side evaluations, combined rmse,
    recovered transform)."""
    target = np.vstack([
        sample_path(*plan.side(side), REGISTRATION_STEP) for side in ("left", "right")
    ])
    pooled = np.vstack([tr.insertion() for side in ("left", "right") for tr in traces[side]])
    transform, combined_rmse = icp_register(pooled, target)

    tree = cKDTree(target)
    evaluations = {}
    for side in ("left", "right"):
        entry, params = plan.side(side)
        side_pts = transform.apply(np.vstack([tr.insertion() for tr in traces[side]]))
        d, _ = tree.query(side_pts)
        side_rmse = float(np.sqrt(np.mean(d**2)))
        if params.kind is SideKind.CURVED:
            mean_r, std_r, radii, change = fit_side_radius(traces[side], transform)
            report = MetrologyReport(
                transform=transform,
                icp_rmse=side_rmse,
                changeover_index=change.index,
                fitted_r=mean_r,
                ideal_r=params.r,
                radius_error_pct=radius_error(params.r, mean_r),
            )
            evaluations[side] = SideEvaluation(
                report, change.arc_length_mm, std_r, tuple(radii)
            )
        else:
            report = MetrologyReport(
                transform=transform,
                icp_rmse=side_rmse,
                changeover_index=None,
                fitted_r=None,
                ideal_r=None,
                radius_error_pct=None,
            )
            evaluations[side] = SideEvaluation(report, None, None)
    return evaluations, combined_rmse, transform


@dataclass
class PipelineResult:
    scenario: str
    seed: int
    plan: BridgePlan
    constraints: object
    fps_fit: object
    score: float
    traces: dict
    tracker: RigidTransform
    evaluations: dict[str, SideEvaluation]
    combined_rmse: float
    fill_history: list
    artifacts: dict[str, Path] = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.constraints.feasible

    def report_dict(self) -> dict:
        ch = FillChannel.from_plan(self.plan, 2.365)
        hist_t, hist_state = self.fill_history[-1]
        return {
            "format": "absf-report/1",
            "scenario": self.scenario,
            "seed": self.seed,
            "plan": {
                "theta_deg": round(float(self.plan.theta_deg), 3),
                "tip_gap_mm": round(float(self.plan.tip_gap), 4),
                "meeting_point_mm": [round(float(v), 3) for v in self.plan.meeting_point],
                "score": round(float(self.score), 4),
            },
            "constraints": self.constraints.to_dict(),
            "fps_fit": self.fps_fit.to_dict(),
            "per_side": {s: e.to_dict() for s, e in self.evaluations.items()},
            "combined_rmse_mm": round(float(self.combined_rmse), 4),
            "fill": {
                "bridged": bool(hist_state.bridged),
                "completion_time_s": round(float(hist_t), 3),
                "injected_volume_mm3": round(float(hist_state.injected_volume), 2),
            },
            "conventions": {
                "meeting_angle": THETA_CONVENTION,
                "registration": REGISTRATION_CONVENTION,
            },
        }


def run_pipeline(
    scenario: Scenario,
    seed: int = 0,
    out_dir: str | Path | None = None,
    figures: bool = True,
) -> PipelineResult:
    """Execute the full scenario and optionally write all artifacts.

    Artifacts: ``plan.json``, per-repeat trace CSVs, ``report.json``,
    ``fill.csv``, and rendered overview figures.
    """
    sc = scenario.with_seed(seed)

    plan = solve_bridge(sc.model, sc.grid, sc.left_spec, sc.right_spec, sc.planner, sc.tool)
    constraints = check_constraints(sc.model, sc.grid, plan, sc.tool, sc.planner)
    corridor_diameter = 2.0 * min(c.radius for c in sc.model.corridors)
    fps_fit = check_fps_fit(plan, sc.fps, corridor_diameter=corridor_diameter)
    score = score_plan(sc.grid, plan, sc.planner.sample_step)

    tracker = tracker_offset(seed)
    traces = simulate_plan(plan, sc.sim, sc.repeats, seed, offset=tracker)
    evaluations, combined_rmse, _ = evaluate_traces(plan, traces)

    fill_history = run_fill(plan, sc.injection, sc.fill_radius)

    result = PipelineResult(
        scenario=sc.name,
        seed=seed,
        plan=plan,
        constraints=constraints,
        fps_fit=fps_fit,
        score=score,
        traces=traces,
        tracker=tracker,
        evaluations=evaluations,
        combined_rmse=combined_rmse,
        fill_history=fill_history,
    )

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        result.artifacts["plan"] = dump_json(plan.to_dict(), out / "plan.json")
        result.artifacts["report"] = dump_json(result.report_dict(), out / "report.json")
        for side, runs in traces.items():
            for rep, tr in enumerate(runs, start=1):
                key = f"trace_{side}_{rep}"
                result.artifacts[key] = save_trace_csv(tr, out / f"{key}.csv")
        result.artifacts["fill"] = save_fill_csv(fill_history, out / "fill.csv")
        if figures:
            from . import figures as figmod

            result.artifacts.update(figmod.render_run_figures(result, sc, out))
    return result
