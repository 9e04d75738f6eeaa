"""Two-sided bridge solving and constraint checking.

Entry poses slide along the phantom's pedicle corridor axes; the solver
searches insertion angle, entry slide, and any unpinned tunnel lengths
for the feasible configuration with the smallest tip gap.  Constraint
handling is penalty-based during the search with a hard re-check on the
final candidates, and ties among feasible plans break by density score,
then gap, then lexicographic parameter order so results are reproducible.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize

from .anatomy import BmdGrid, VertebraModel, path_bmd_profile
from .errors import FrameError, NoFeasiblePlanError, OutOfFieldError
from .geometry import (
    BridgePlan,
    EntryPose,
    SideKind,
    SideParams,
    ToolSpec,
    bridge_metrics,
    sample_path,
    tip_pose,
)

__all__ = [
    "PlannerConfig",
    "SideSpec",
    "ConstraintReport",
    "FpsSpec",
    "FitReport",
    "entry_pose_on_corridor",
    "check_constraints",
    "solve_bridge",
    "score_plan",
    "check_fps_fit",
]


def _bound(v) -> tuple[float, float]:
    if np.isscalar(v):
        return (float(v), float(v))
    lo, hi = float(v[0]), float(v[1])
    if hi < lo:
        raise ValueError(f"bound ({lo}, {hi}) has hi < lo")
    return (lo, hi)


@dataclass(frozen=True)
class PlannerConfig:
    """Global solver tolerances and constraint thresholds."""

    eps_meet: float = 1.0                        # mm tip-gap tolerance
    theta_band: tuple[float, float] = (0.0, 180.0)
    r_min: float = 10.0                          # mm, manufacturing limit
    bmd_min: float = 0.0
    sample_step: float = 1.0                     # mm, hard-check sampling

    def __post_init__(self):
        if self.eps_meet <= 0:
            raise ValueError("eps_meet must be > 0")
        if self.r_min <= 0:
            raise ValueError("r_min must be > 0")
        lo, hi = self.theta_band
        if not (0.0 <= lo <= hi <= 180.0):
            raise ValueError("theta_band must lie within [0, 180]")

    def to_dict(self) -> dict:
        return {
            "eps_meet_mm": self.eps_meet,
            "theta_band_deg": list(self.theta_band),
            "r_min_mm": self.r_min,
            "bmd_min": self.bmd_min,
            "sample_step_mm": self.sample_step,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PlannerConfig":
        return cls(
            eps_meet=float(d.get("eps_meet_mm", 1.0)),
            theta_band=tuple(d.get("theta_band_deg", (0.0, 180.0))),
            r_min=float(d.get("r_min_mm", 10.0)),
            bmd_min=float(d.get("bmd_min", 0.0)),
            sample_step=float(d.get("sample_step_mm", 1.0)),
        )


@dataclass(frozen=True)
class SideSpec:
    """Search space of one side: kind, corridor, and parameter bounds.

    Bounds are (lo, hi) pairs; a scalar pins the value.  ``alpha_deg`` is
    medial-positive (toward the opposite pedicle) regardless of side, so
    mirrored problems are numerically identical.  ``bend_roll_deg`` tilts
    the bend plane about the entry direction, 0 keeping it axial and
    positive values steering the arc inferiorly.
    """

    kind: SideKind
    corridor: int
    alpha_deg: tuple[float, float]
    l_ot: tuple[float, float]
    l_it: tuple[float, float] = (0.0, 0.0)
    r: tuple[float, float] = (0.0, 0.0)
    slide: tuple[float, float] = (0.0, 0.0)
    bend_roll_deg: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", SideKind(self.kind))
        for name in ("alpha_deg", "l_ot", "l_it", "r", "slide"):
            object.__setattr__(self, name, _bound(getattr(self, name)))

    def to_dict(self) -> dict:
        def b(v):
            return v[0] if v[0] == v[1] else list(v)

        return {
            "kind": self.kind.value,
            "corridor": self.corridor,
            "alpha_deg": b(self.alpha_deg),
            "l_ot": b(self.l_ot),
            "l_it": b(self.l_it),
            "r": b(self.r),
            "slide": b(self.slide),
            "bend_roll_deg": self.bend_roll_deg,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SideSpec":
        return cls(
            kind=SideKind(d["kind"]),
            corridor=int(d["corridor"]),
            alpha_deg=d["alpha_deg"],
            l_ot=d["l_ot"],
            l_it=d.get("l_it", 0.0),
            r=d.get("r", 0.0),
            slide=d.get("slide", 0.0),
            bend_roll_deg=float(d.get("bend_roll_deg", 0.0)),
        )


@dataclass(frozen=True)
class ConstraintReport:
    """Pass/fail flags with the worst-case margin behind each one (mm for
    geometric constraints, degrees for the meeting angle, density units
    for the BMD floor; positive means satisfied)."""

    containment_ok: bool
    corridor_ok: bool
    curvature_ok: bool
    bmd_ok: bool
    theta_ok: bool
    details: tuple = ()

    @property
    def feasible(self) -> bool:
        return (
            self.containment_ok
            and self.corridor_ok
            and self.curvature_ok
            and self.bmd_ok
            and self.theta_ok
        )

    def to_dict(self) -> dict:
        return {
            "containment_ok": self.containment_ok,
            "corridor_ok": self.corridor_ok,
            "curvature_ok": self.curvature_ok,
            "bmd_ok": self.bmd_ok,
            "theta_ok": self.theta_ok,
            "feasible": self.feasible,
            "details": [
                {
                    "constraint": name,
                    "margin": (
                        None if m is None or not math.isfinite(m) else round(float(m), 4)
                    ),
                }
                for name, m in self.details
            ],
        }


def _medial_sign(model: VertebraModel, corridor_idx: int) -> float:
    entry_x = model.corridors[corridor_idx].entry[0]
    return 1.0 if entry_x <= model.centroid()[0] else -1.0


def _corridor_passage_margin(model: VertebraModel, entry_pos, straight_pts) -> float:
    """Clearance of the straight segment while it crosses its corridor.

    Only samples whose projection onto the corridor axis falls within the
    corridor span are held to the capsule radius; past the corridor mouth
    the body containment check takes over.
    """
    if not model.corridors:
        return -math.inf
    dists = [c.distance_to_axis(np.atleast_2d(entry_pos))[0] for c in model.corridors]
    corridor = model.corridors[int(np.argmin(dists))]
    rel = np.atleast_2d(straight_pts) - corridor.entry[None, :]
    proj = rel @ corridor.axis
    in_span = (proj >= -1e-9) & (proj <= corridor.length + 1e-9)
    if not np.any(in_span):
        return math.inf
    pts = np.atleast_2d(straight_pts)[in_span]
    return float((corridor.radius - corridor.distance_to_axis(pts)).min())


def entry_pose_on_corridor(
    model: VertebraModel,
    corridor_idx: int,
    slide: float,
    alpha_deg: float,
    bend_roll_deg: float = 0.0,
) -> EntryPose:
    """Entry pose sliding along a corridor axis at a medial-positive axial
    insertion angle, with the bend plane rolled about the direction."""
    corridor = model.corridors[corridor_idx]
    sign = _medial_sign(model, corridor_idx)
    a = math.radians(alpha_deg)
    b = math.radians(bend_roll_deg)
    direction = np.array([sign * math.sin(a), math.cos(a), 0.0])
    n_medial = np.array([sign * math.cos(a), -math.sin(a), 0.0])
    normal = math.cos(b) * n_medial + math.sin(b) * np.array([0.0, 0.0, -1.0])
    return EntryPose(corridor.point_at(slide), direction, normal)


def _side_geometry(model, spec: SideSpec, slide, alpha, l_ot, l_it, r):
    sign = _medial_sign(model, spec.corridor)
    entry = entry_pose_on_corridor(model, spec.corridor, slide, alpha, spec.bend_roll_deg)
    if spec.kind is SideKind.STRAIGHT:
        params = SideParams(SideKind.STRAIGHT, sign * alpha, l_ot)
    else:
        params = SideParams(SideKind.CURVED, sign * alpha, l_ot, l_it, r)
    return entry, params


def check_constraints(
    model: VertebraModel,
    grid: BmdGrid,
    plan: BridgePlan,
    tool: ToolSpec,
    cfg: PlannerConfig,
) -> ConstraintReport:
    """Evaluate the four planning constraints plus the meeting-angle band.

    Containment samples each path and requires every sample to clear the
    eroded body or sit inside a corridor; the corridor check applies to
    the straight segment only; the BMD floor applies to the curved (or,
    for straight sides, distal-half) portion where fixation happens.
    """
    step = cfg.sample_step
    inflate = tool.drill_radius
    lo_b, hi_b = model.bounds()

    sampled = {
        name: sample_path(*plan.side(name), step) for name in ("left", "right")
    }
    any_near = any(
        np.any(np.all((pts > lo_b - 10.0) & (pts < hi_b + 10.0), axis=1))
        for pts in sampled.values()
    )
    if not any_near:
        raise FrameError("no path sample near the model bounds; frame mismatch?")

    containment_margin = math.inf
    corridor_margin = math.inf
    bmd_margin = math.inf
    curvature_margin = None

    for name in ("left", "right"):
        entry, params = plan.side(name)
        pts = sampled[name]

        body = model.signed_clearance(pts) - inflate
        corr = model.corridor_clearance(pts)
        containment_margin = min(containment_margin, float(np.maximum(body, corr).min()))

        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        s = np.concatenate([[0.0], np.cumsum(seg)])
        straight = pts[s <= params.l_ot + 1e-9]
        corridor_margin = min(
            corridor_margin, _corridor_passage_margin(model, entry.position, straight)
        )

        if params.kind is SideKind.CURVED:
            m = params.r - cfg.r_min
            curvature_margin = m if curvature_margin is None else min(curvature_margin, m)
            fix_zone = pts[s >= params.l_ot - 1e-9]
        else:
            fix_zone = pts[s >= 0.5 * params.l_ot - 1e-9]
        try:
            profile = path_bmd_profile(grid, fix_zone, step)
            bmd_margin = min(bmd_margin, profile.minimum - cfg.bmd_min)
        except OutOfFieldError:
            # fixation zone leaves the density field: density unverifiable
            bmd_margin = -math.inf

    theta_margin = min(
        plan.theta_deg - cfg.theta_band[0], cfg.theta_band[1] - plan.theta_deg
    )

    details = (
        ("containment", containment_margin),
        ("corridor", corridor_margin),
        ("curvature", curvature_margin),
        ("bmd", bmd_margin),
        ("theta", theta_margin),
    )
    return ConstraintReport(
        containment_ok=containment_margin >= 0.0,
        corridor_ok=corridor_margin >= 0.0,
        curvature_ok=curvature_margin is None or curvature_margin >= 0.0,
        bmd_ok=bmd_margin >= 0.0,
        theta_ok=theta_margin >= 0.0,
        details=details,
    )


def score_plan(grid: BmdGrid, plan: BridgePlan, step: float = 1.0) -> float:
    """Mean density along both paths; a stand-in fixation-quality proxy
    (higher is better), not a stress analysis."""
    samples = []
    for name in ("left", "right"):
        entry, params = plan.side(name)
        profile = path_bmd_profile(grid, sample_path(entry, params, step), step)
        samples.append(profile.samples)
    return float(np.concatenate(samples).mean())


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------

_VAR_ORDER = ("slide", "alpha_deg", "l_ot", "l_it", "r")


def _free_vars(spec: SideSpec) -> list[tuple[str, tuple[float, float]]]:
    out = []
    for name in _VAR_ORDER:
        lo, hi = getattr(spec, name)
        if name in ("l_it", "r") and spec.kind is SideKind.STRAIGHT:
            continue
        if hi > lo:
            out.append((name, (lo, hi)))
    return out


class _Problem:
    def __init__(self, model, grid, left_spec, right_spec, cfg, tool):
        self.model = model
        self.grid = grid
        self.specs = {"left": left_spec, "right": right_spec}
        self.cfg = cfg
        self.tool = tool
        self.layout = []  # (side, var name, (lo, hi))
        for side in ("left", "right"):
            for name, b in _free_vars(self.specs[side]):
                self.layout.append((side, name, b))

    def _side_values(self, x, side):
        spec = self.specs[side]
        vals = {name: getattr(spec, name)[0] for name in _VAR_ORDER}
        for xi, (s, name, _) in zip(x, self.layout):
            if s == side:
                vals[name] = float(xi)
        return vals

    def build_plan(self, x) -> BridgePlan:
        sides = {}
        for side in ("left", "right"):
            v = self._side_values(x, side)
            sides[side] = _side_geometry(
                self.model, self.specs[side], v["slide"], v["alpha_deg"],
                v["l_ot"], v["l_it"], v["r"],
            )
        return BridgePlan(left=sides["left"], right=sides["right"])

    def tips(self, x):
        out = []
        for side in ("left", "right"):
            v = self._side_values(x, side)
            entry, params = _side_geometry(
                self.model, self.specs[side], v["slide"], v["alpha_deg"],
                v["l_ot"], v["l_it"], v["r"],
            )
            out.append(tip_pose(entry, params))
        return out

    def gap_theta(self, x):
        (pa, ta), (pb, tb) = self.tips(x)
        gap, _, theta = bridge_metrics((pa, ta), (pb, tb))
        return gap, theta

    def cheap_objective(self, x) -> float:
        gap, theta = self.gap_theta(x)
        lo, hi = self.cfg.theta_band
        theta_viol = max(0.0, lo - theta, theta - hi)
        return gap + 2.0 * theta_viol

    def penalty_objective(self, x, step=2.0) -> float:
        plan = self.build_plan(x)
        gap = plan.tip_gap
        lo, hi = self.cfg.theta_band
        theta_viol = max(0.0, lo - plan.theta_deg, plan.theta_deg - hi)
        pen = 2.0 * theta_viol
        inflate = self.tool.drill_radius
        for name in ("left", "right"):
            entry, params = plan.side(name)
            pts = sample_path(entry, params, step)
            body = self.model.signed_clearance(pts) - inflate
            corr = self.model.corridor_clearance(pts)
            margin = np.maximum(body, corr).min()
            pen += 50.0 * max(0.0, -float(margin))
            if params.kind is SideKind.CURVED:
                pen += 10.0 * max(0.0, self.cfg.r_min - params.r)
        return gap + pen

    def bounds(self):
        return [b for (_, _, b) in self.layout]


def _coarse_seeds(problem: _Problem, max_evals: int = 4000, keep: int = 6):
    bounds = problem.bounds()
    nvar = len(bounds)
    if nvar == 0:
        return [np.empty(0)]
    levels = max(3, min(7, int(max_evals ** (1.0 / nvar))))
    axes = [np.linspace(lo, hi, levels) for lo, hi in bounds]
    scored = []
    for combo in itertools.product(*axes):
        x = np.array(combo)
        scored.append((problem.cheap_objective(x), tuple(x)))
    scored.sort(key=lambda t: (round(t[0], 9), t[1]))
    return [np.array(x) for _, x in scored[:keep]]


def _gap_residual_polish(problem: _Problem, x0: np.ndarray) -> np.ndarray:
    """Zero out the tip-gap vector by bounded least squares from a feasible
    interior point; falls back to the input if the polish leaves bounds."""
    bounds = problem.bounds()
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])

    def resid(x):
        (pa, _), (pb, _) = problem.tips(x)
        return pa - pb

    try:
        sol = least_squares(
            resid, np.clip(x0, lo, hi), bounds=(lo, hi), method="trf",
            xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=200,
        )
        return sol.x
    except Exception:
        return x0


def solve_bridge(
    model: VertebraModel,
    grid: BmdGrid,
    left_spec: SideSpec,
    right_spec: SideSpec,
    cfg: PlannerConfig,
    tool: ToolSpec = ToolSpec(),
    seed: int = 0,
) -> BridgePlan:
    """Find the feasible bridge plan with the smallest tip gap.

    Coarse lattice over the free variables seeds Nelder-Mead refinement on
    a penalty objective, followed by a least-squares polish of the tip
    gap; every surviving candidate is re-checked hard before selection.
    The search is deterministic (``seed`` is accepted for interface
    stability but the algorithm draws no random numbers).  Raises
    NoFeasiblePlanError carrying the best infeasible candidate.
    """
    del seed  # deterministic search; kept for call-site stability
    problem = _Problem(model, grid, left_spec, right_spec, cfg, tool)
    bounds = problem.bounds()

    candidates = []
    for x0 in _coarse_seeds(problem):
        if len(bounds) == 0:
            candidates.append(x0)
            continue
        res = minimize(
            problem.penalty_objective,
            x0,
            method="Nelder-Mead",
            bounds=bounds,
            options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 2000},
        )
        x = res.x
        candidates.append(x)
        if problem.penalty_objective(x) - problem.gap_theta(x)[0] < 1e-9:
            candidates.append(_gap_residual_polish(problem, x))

    feasible = []
    best_any = None
    for x in candidates:
        plan = problem.build_plan(x)
        report = check_constraints(model, grid, plan, tool, cfg)
        gap = plan.tip_gap
        key = (round(gap, 9), tuple(round(float(v), 9) for v in x))
        if best_any is None or key < best_any[0]:
            best_any = (key, plan, report)
        if report.feasible and gap <= cfg.eps_meet:
            score = score_plan(grid, plan, cfg.sample_step)
            feasible.append((round(-score, 9), round(gap, 9),
                             tuple(round(float(v), 9) for v in x), plan, report))

    if not feasible:
        _, plan, report = best_any
        raise NoFeasiblePlanError(
            f"no candidate met tip gap <= {cfg.eps_meet} mm with all constraints "
            f"(best gap {plan.tip_gap:.3f} mm)",
            best_candidate=plan,
            report=report,
        )

    feasible.sort(key=lambda t: (t[0], t[1], t[2]))
    return feasible[0][3]


# ---------------------------------------------------------------------------
# implant fit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FpsSpec:
    """Flexible-screw dimensions: rigid/flexible lengths, diameters, pitch."""

    l_r: float = 18.0
    l_f: float = 54.4
    od: float = 7.0
    id: float = 4.0
    pitch: float = 2.5

    def __post_init__(self):
        if not (self.od > self.id > 0):
            raise ValueError("need od > id > 0")
        if self.l_r <= 0 or self.l_f <= 0:
            raise ValueError("both screw section lengths must be positive")

    @property
    def total_length(self) -> float:
        return self.l_r + self.l_f

    def to_dict(self) -> dict:
        return {
            "l_r_mm": self.l_r,
            "l_f_mm": self.l_f,
            "od_mm": self.od,
            "id_mm": self.id,
            "pitch_mm": self.pitch,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FpsSpec":
        return cls(
            l_r=float(d.get("l_r_mm", 18.0)),
            l_f=float(d.get("l_f_mm", 54.4)),
            od=float(d.get("od_mm", 7.0)),
            id=float(d.get("id_mm", 4.0)),
            pitch=float(d.get("pitch_mm", 2.5)),
        )


@dataclass(frozen=True)
class SideFit:
    rigid_ok: bool
    length_delta: float  # tunnel length minus screw length; negative = proud
    diameter_ok: bool

    def to_dict(self) -> dict:
        return {
            "rigid_ok": self.rigid_ok,
            "length_delta_mm": round(self.length_delta, 3),
            "diameter_ok": self.diameter_ok,
        }


@dataclass(frozen=True)
class FitReport:
    left: SideFit
    right: SideFit

    @property
    def ok(self) -> bool:
        return all(
            s.rigid_ok and s.diameter_ok for s in (self.left, self.right)
        )

    def to_dict(self) -> dict:
        return {"left": self.left.to_dict(), "right": self.right.to_dict(), "ok": self.ok}


def check_fps_fit(plan: BridgePlan, fps: FpsSpec, corridor_diameter: float = 8.0) -> FitReport:
    """Screw-to-tunnel fit per side.

    The rigid section must not outrun the straight segment; a negative
    length delta means the screw stands proud at the entry by that much;
    the corridor must pass the screw's outer diameter.
    """
    fits = {}
    for name in ("left", "right"):
        _, params = plan.side(name)
        fits[name] = SideFit(
            rigid_ok=fps.l_r <= params.l_ot,
            length_delta=params.total_length - fps.total_length,
            diameter_ok=corridor_diameter >= fps.od,
        )
    return FitReport(left=fits["left"], right=fits["right"])
