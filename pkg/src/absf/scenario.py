"""Scenario bundles: model + density field + search specs + run configs.

A scenario file (``absf-scenario/1``) references the model and density
files by path (relative to itself) and carries the per-side search specs
plus planner, simulation, and injection settings.  The two bundled
scenarios carry the reference bridge configurations: S1 pins a
curved side at (28.5, 42.5, 25) against a solved straight side, S2 pins
both sides at (36.6, 30.9, 35).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .anatomy import BmdGrid, VertebraModel
from .cementsim import InjectionConfig
from .drillsim import SimConfig
from .formats import load_bmd, load_json, load_model
from .geometry import ToolSpec
from .planner import FpsSpec, PlannerConfig, SideSpec

__all__ = ["Scenario", "load_scenario", "bundled_scenarios"]

_BUNDLED = {"S1": "s1.json", "S2": "s2.json"}


@dataclass(frozen=True)
class Scenario:
    name: str
    model: VertebraModel
    grid: BmdGrid
    left_spec: SideSpec
    right_spec: SideSpec
    planner: PlannerConfig
    sim: SimConfig
    injection: InjectionConfig
    tool: ToolSpec = ToolSpec()
    fps: FpsSpec = FpsSpec()
    fill_radius: float = 2.365
    repeats: int = 3
    description: str = ""
    source_path: str = ""

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, sim=replace(self.sim, seed=int(seed)))

    def spec(self, side: str) -> SideSpec:
        return self.left_spec if side == "left" else self.right_spec


def _tool_from_dict(d: dict) -> ToolSpec:
    return ToolSpec(
        drill_diameter=float(d.get("drill_diameter_mm", 4.73)),
        niti_od=float(d.get("niti_od_mm", 3.05)),
        niti_wall=float(d.get("niti_wall_mm", 0.24)),
    )


def bundled_scenarios() -> list[str]:
    return sorted(_BUNDLED)


def _bundled_path(name: str) -> Path:
    pkg_files = resources.files("absf") / "data" / "scenarios" / _BUNDLED[name]
    return Path(str(pkg_files))


def load_scenario(name_or_path: str | Path) -> Scenario:
    """Load a scenario by bundled name (``S1``/``S2``) or file path."""
    key = str(name_or_path)
    if key in _BUNDLED:
        path = _bundled_path(key)
    else:
        path = Path(name_or_path)
    doc = load_json(path, "absf-scenario/1")
    base = path.parent

    model = load_model((base / doc["model"]).resolve())
    grid = load_bmd((base / doc["bmd"]).resolve())
    return Scenario(
        name=doc.get("name", path.stem),
        model=model,
        grid=grid,
        left_spec=SideSpec.from_dict(doc["sides"]["left"]),
        right_spec=SideSpec.from_dict(doc["sides"]["right"]),
        planner=PlannerConfig.from_dict(doc.get("planner", {})),
        sim=SimConfig.from_dict(doc.get("sim", {})),
        injection=InjectionConfig.from_dict(doc["injection"]),
        tool=_tool_from_dict(doc.get("tool", {})),
        fps=FpsSpec.from_dict(doc.get("fps", {})),
        fill_radius=float(doc.get("fill_radius_mm", 2.365)),
        repeats=int(doc.get("repeats", 3)),
        description=doc.get("description", ""),
        source_path=str(path),
    )
