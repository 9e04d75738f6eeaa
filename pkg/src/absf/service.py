"""Loopback JSON service exposing planning, simulation, and metrology.

The service is stateless: the scenario (model, density field, specs) is
loaded once at startup and every request carries its own inputs.  All
responses carry the relevant format-version tags; malformed bodies get a
400 with a field-level message.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from fastapi import Body, FastAPI, HTTPException
from fastapi.exceptions import RequestValidationError
from starlette.exceptions import HTTPException as StarletteHTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .cementsim import FillChannel, InjectionConfig, run_fill
from .drillsim import Phase, SimConfig, Trace, phase_from_name, phase_name
from .errors import AbsfError, NoFeasiblePlanError
from .formats import _jsonable
from .geometry import BridgePlan, SideKind, SideParams, sample_path, tip_pose
from .pipeline import evaluate_traces, simulate_plan
from .planner import (
    PlannerConfig,
    SideSpec,
    check_constraints,
    entry_pose_on_corridor,
    solve_bridge,
)
from .scenario import Scenario

__all__ = ["build_app", "serve"]

DEFAULT_PORT = 8137
POLYLINE_STEP = 1.0  # mm, rendering resolution of returned paths


def _bad_request(field: str, message: str):
    raise HTTPException(status_code=400, detail={"field": field, "message": message})


def _require(body: dict, field: str):
    node = body
    for part in field.split("."):
        if not isinstance(node, dict) or part not in node:
            _bad_request(field, "missing required field")
        node = node[part]
    return node


def _side_params_from_body(scenario: Scenario, side: str, d: dict):
    if not isinstance(d, dict):
        _bad_request(f"sides.{side}", "must be an object")
    try:
        kind = SideKind(str(d.get("kind", "curved")))
        corridor = int(d.get("corridor", 0 if side == "left" else 1))
        alpha = float(_require({"sides": {side: d}}, f"sides.{side}.alpha_deg"))
        slide = float(d.get("slide", 0.0))
        roll = float(d.get("bend_roll_deg", 0.0))
        l_ot = float(_require({"sides": {side: d}}, f"sides.{side}.l_ot"))
        l_it = float(d.get("l_it", 0.0))
        r = float(d.get("r", 0.0))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, HTTPException):
            raise
        _bad_request(f"sides.{side}", f"bad value: {exc}")
    if corridor < 0 or corridor >= len(scenario.model.corridors):
        _bad_request(f"sides.{side}.corridor", "no such corridor")
    entry = entry_pose_on_corridor(scenario.model, corridor, slide, alpha, roll)
    try:
        params = SideParams(kind, entry.axial_angle_deg(), l_ot, l_it, r)
    except ValueError as exc:
        _bad_request(f"sides.{side}", str(exc))
    return entry, params


def _geometry_payload(plan: BridgePlan) -> dict:
    sides = {}
    for side in ("left", "right"):
        entry, params = plan.side(side)
        pos, tan = tip_pose(entry, params)
        sides[side] = {
            "tip": [float(v) for v in pos],
            "tangent": [float(v) for v in tan],
            "polyline": sample_path(entry, params, POLYLINE_STEP).tolist(),
        }
    return sides


def _traces_payload(traces: dict[str, list[Trace]]) -> list[dict]:
    out = []
    for side, runs in traces.items():
        for tr in runs:
            out.append({
                "side": side,
                "samples": [
                    {
                        "t_s": float(t),
                        "position_mm": [float(v) for v in p],
                        "phase": phase_name(Phase(ph)),
                    }
                    for t, p, ph in zip(tr.t, tr.positions, tr.phases)
                ],
            })
    return out


def _traces_from_body(body) -> dict[str, list[Trace]]:
    traces: dict[str, list[Trace]] = {"left": [], "right": []}
    if not isinstance(body, list) or not body:
        _bad_request("traces", "must be a non-empty list")
    for i, item in enumerate(body):
        side = item.get("side")
        if side not in ("left", "right"):
            _bad_request(f"traces[{i}].side", "must be 'left' or 'right'")
        samples = item.get("samples")
        if not isinstance(samples, list) or len(samples) < 12:
            _bad_request(f"traces[{i}].samples", "needs >= 12 samples")
        try:
            t = np.array([s["t_s"] for s in samples], dtype=float)
            pos = np.array([s["position_mm"] for s in samples], dtype=float)
            phases = np.array(
                [int(phase_from_name(s["phase"])) for s in samples], dtype=int
            )
        except (KeyError, ValueError) as exc:
            _bad_request(f"traces[{i}].samples", f"bad sample: {exc}")
        traces[side].append(Trace(t, pos, phases, side))
    if not traces["left"] or not traces["right"]:
        _bad_request("traces", "need at least one trace per side")
    return traces


def build_app(scenario: Scenario, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="bridge-planning service", version="1")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(RequestValidationError)
    async def _validation_to_400(request, exc):
        first = exc.errors()[0] if exc.errors() else {}
        return JSONResponse(
            status_code=400,
            content={
                "field": ".".join(str(p) for p in first.get("loc", [])),
                "message": first.get("msg", "malformed request body"),
            },
        )

    @app.exception_handler(StarletteHTTPException)
    async def _flatten_http_error(request, exc):
        detail = exc.detail
        if isinstance(detail, dict) and "field" in detail:
            return JSONResponse(status_code=exc.status_code, content=detail)
        return JSONResponse(
            status_code=exc.status_code, content={"field": "", "message": str(detail)}
        )

    @app.exception_handler(AbsfError)
    async def _absf_to_400(request, exc):
        return JSONResponse(status_code=400, content={"field": "", "message": str(exc)})

    @app.get("/model")
    def get_model():
        doc = scenario.model.to_dict()
        grid = scenario.grid
        iz = int(round((0.0 - grid.origin[2]) / grid.spacing[2]))
        iz = min(max(iz, 0), grid.values.shape[2] - 1)
        doc["scenario"] = {
            "name": scenario.name,
            "description": scenario.description,
            "sides": {
                "left": scenario.left_spec.to_dict(),
                "right": scenario.right_spec.to_dict(),
            },
            "planner": scenario.planner.to_dict(),
            "sim": scenario.sim.to_dict(),
            "fill_radius_mm": scenario.fill_radius,
        }
        doc["bmd_axial_slice"] = {
            "origin": [float(grid.origin[0]), float(grid.origin[1])],
            "spacing": [float(grid.spacing[0]), float(grid.spacing[1])],
            "values": grid.values[:, :, iz].tolist(),
        }
        return _jsonable(doc)

    @app.post("/evaluate")
    def post_evaluate(body: dict = Body(...)):
        _require(body, "sides")
        left = _side_params_from_body(scenario, "left", _require(body, "sides.left"))
        right = _side_params_from_body(scenario, "right", _require(body, "sides.right"))
        try:
            plan = BridgePlan(left=left, right=right)
        except ValueError as exc:
            _bad_request("sides", str(exc))
        report = check_constraints(
            scenario.model, scenario.grid, plan, scenario.tool, scenario.planner
        )
        payload = {
            "format": "absf-eval/1",
            "theta_deg": float(plan.theta_deg),
            "tip_gap_mm": float(plan.tip_gap),
            "meeting_point_mm": [float(v) for v in plan.meeting_point],
            "plan": plan.to_dict(),
            "geometry": _geometry_payload(plan),
            "constraints": report.to_dict(),
            "feasible": report.feasible and plan.tip_gap <= scenario.planner.eps_meet,
        }
        return _jsonable(payload)

    @app.post("/solve")
    def post_solve(body: dict = Body(default={})):
        left = scenario.left_spec
        right = scenario.right_spec
        if "left" in body:
            try:
                left = SideSpec.from_dict({**left.to_dict(), **body["left"]})
            except (KeyError, TypeError, ValueError) as exc:
                _bad_request("left", f"bad side spec: {exc}")
        if "right" in body:
            try:
                right = SideSpec.from_dict({**right.to_dict(), **body["right"]})
            except (KeyError, TypeError, ValueError) as exc:
                _bad_request("right", f"bad side spec: {exc}")
        planner = scenario.planner
        if "planner" in body:
            try:
                planner = PlannerConfig.from_dict({**planner.to_dict(), **body["planner"]})
            except (TypeError, ValueError) as exc:
                _bad_request("planner", f"bad planner config: {exc}")
        try:
            plan = solve_bridge(
                scenario.model, scenario.grid, left, right, planner, scenario.tool
            )
        except NoFeasiblePlanError as exc:
            best = exc.best_candidate
            payload = {
                "format": "absf-solve/1",
                "feasible": False,
                "message": str(exc),
                "best_candidate": None if best is None else {
                    "plan": best.to_dict(),
                    "geometry": _geometry_payload(best),
                    "theta_deg": float(best.theta_deg),
                    "tip_gap_mm": float(best.tip_gap),
                },
                "constraints": exc.report.to_dict() if exc.report is not None else None,
            }
            return _jsonable(payload)
        report = check_constraints(
            scenario.model, scenario.grid, plan, scenario.tool, planner
        )
        payload = {
            "format": "absf-solve/1",
            "feasible": True,
            "theta_deg": float(plan.theta_deg),
            "tip_gap_mm": float(plan.tip_gap),
            "meeting_point_mm": [float(v) for v in plan.meeting_point],
            "plan": plan.to_dict(),
            "geometry": _geometry_payload(plan),
            "constraints": report.to_dict(),
        }
        return _jsonable(payload)

    @app.post("/simulate")
    def post_simulate(body: dict = Body(...)):
        plan_doc = _require(body, "plan")
        try:
            plan = BridgePlan.from_dict(plan_doc)
        except (KeyError, TypeError, ValueError) as exc:
            _bad_request("plan", f"bad plan document: {exc}")
        sim = scenario.sim
        if "sim" in body:
            try:
                sim = SimConfig.from_dict({**sim.to_dict(), **body["sim"]})
            except (TypeError, ValueError) as exc:
                _bad_request("sim", f"bad sim config: {exc}")
        seed = int(body.get("seed", sim.seed))
        repeats = int(body.get("repeats", 1))
        if repeats < 1 or repeats > 10:
            _bad_request("repeats", "must be between 1 and 10")
        traces = simulate_plan(plan, sim, repeats, seed)
        return _jsonable({"format": "absf-traces/1", "traces": _traces_payload(traces)})

    @app.post("/metrology")
    def post_metrology(body: dict = Body(...)):
        plan_doc = _require(body, "plan")
        try:
            plan = BridgePlan.from_dict(plan_doc)
        except (KeyError, TypeError, ValueError) as exc:
            _bad_request("plan", f"bad plan document: {exc}")
        traces = _traces_from_body(_require(body, "traces"))
        evaluations, combined, _ = evaluate_traces(plan, traces)
        return _jsonable({
            "format": "absf-report/1",
            "per_side": {s: e.to_dict() for s, e in evaluations.items()},
            "combined_rmse_mm": round(float(combined), 4),
            "conventions": {
                "meeting_angle": "directed tip tangents, degrees in [0, 180]",
                "registration": "trace samples registered against the planned-path point set",
            },
        })

    @app.post("/inject")
    def post_inject(body: dict = Body(...)):
        plan_doc = _require(body, "plan")
        try:
            plan = BridgePlan.from_dict(plan_doc)
        except (KeyError, TypeError, ValueError) as exc:
            _bad_request("plan", f"bad plan document: {exc}")
        injection = scenario.injection
        if "injection" in body:
            try:
                injection = InjectionConfig.from_dict(
                    {**injection.to_dict(), **body["injection"]}
                )
            except (KeyError, TypeError, ValueError) as exc:
                _bad_request("injection", f"bad injection config: {exc}")
        fill_radius = float(body.get("fill_radius_mm", scenario.fill_radius))
        dt = float(body.get("dt_s", 1.0))
        if dt <= 0:
            _bad_request("dt_s", "must be positive")
        history = run_fill(plan, injection, fill_radius, dt=dt)
        channel = history[0][1].channel

        # map channel coordinates to 3-d front points along the paths
        left_pts = sample_path(*plan.side("left"), 0.5)
        right_pts = sample_path(*plan.side("right"), 0.5)

        def point_at(s: float):
            l_left = plan.left[1].total_length
            gap = plan.tip_gap
            if s <= l_left:
                return _interp_along(left_pts, s)
            if s >= l_left + gap:
                return _interp_along(right_pts, channel.length - s)
            tips = plan.tips()
            f = (s - l_left) / gap if gap > 0 else 0.5
            return (1 - f) * tips["left"][0] + f * tips["right"][0]

        timeline = [
            {
                "t_s": float(t),
                "s_lo_mm": float(st.s_lo),
                "s_hi_mm": float(st.s_hi),
                "lo_point_mm": [float(v) for v in point_at(st.s_lo)],
                "hi_point_mm": [float(v) for v in point_at(st.s_hi)],
                "volume_mm3": float(st.injected_volume),
                "bridged": bool(st.bridged),
            }
            for t, st in history
        ]
        return _jsonable({
            "format": "absf-fill/1",
            "bridge_span_mm": list(channel.bridge_span),
            "channel_length_mm": channel.length,
            "flow_rate_mm3_s": injection.flow_rate(),
            "timeline": timeline,
        })

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    return app


def _interp_along(polyline: np.ndarray, s: float) -> np.ndarray:
    seg = np.linalg.norm(np.diff(polyline, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    s = min(max(s, 0.0), cum[-1])
    out = np.empty(3)
    for k in range(3):
        out[k] = np.interp(s, cum, polyline[:, k])
    return out


def serve(scenario: Scenario, port: int = DEFAULT_PORT, host: str = "127.0.0.1",
          static_dir=None):
    """Run the service on a loopback-bound port (blocking)."""
    import uvicorn

    app = build_app(scenario, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
