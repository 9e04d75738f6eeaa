"""Planning, simulation, and metrology toolkit for bridged J-shape
drilling trajectories in a vertebral phantom.

The package plans pairs of straight-then-arc drilling tunnels that meet
inside the vertebral body under anatomical and device constraints,
simulates the drilling and tracker measurement, and evaluates outcomes
with rigid registration, changeover detection, arc fitting, and a
first-order augmentation fill model.
"""

from .anatomy import BmdGrid, Capsule, VertebraModel, bmd_at, contains, path_bmd_profile
from .cementsim import (
    FillChannel,
    FillState,
    InjectionConfig,
    advance_fill,
    cavity_volume,
    poiseuille_rate,
)
from .drillsim import Phase, PhaseState, SimConfig, Trace, execute_side, rpm_schedule
from .geometry import (
    BridgePlan,
    EntryPose,
    SideKind,
    SideParams,
    ToolSpec,
    bridge_metrics,
    meeting_angle,
    sample_path,
    tip_pose,
)
from .metrology import (
    MetrologyReport,
    RigidTransform,
    fit_radius,
    icp_register,
    radius_error,
    split_straight_curved,
)
from .planner import (
    ConstraintReport,
    FitReport,
    FpsSpec,
    PlannerConfig,
    SideSpec,
    check_constraints,
    check_fps_fit,
    score_plan,
    solve_bridge,
)
from .scenario import Scenario, bundled_scenarios, load_scenario

__version__ = "0.1.0"

__all__ = [
    "BmdGrid", "Capsule", "VertebraModel", "bmd_at", "contains", "path_bmd_profile",
    "FillChannel", "FillState", "InjectionConfig", "advance_fill", "cavity_volume",
    "poiseuille_rate",
    "Phase", "PhaseState", "SimConfig", "Trace", "execute_side", "rpm_schedule",
    "BridgePlan", "EntryPose", "SideKind", "SideParams", "ToolSpec",
    "bridge_metrics", "meeting_angle", "sample_path", "tip_pose",
    "MetrologyReport", "RigidTransform", "fit_radius", "icp_register",
    "radius_error", "split_straight_curved",
    "ConstraintReport", "FitReport", "FpsSpec", "PlannerConfig", "SideSpec",
    "check_constraints", "check_fps_fit", "score_plan", "solve_bridge",
    "Scenario", "bundled_scenarios", "load_scenario",
]
