"""Versioned file formats: JSON documents and delimited trace/fill logs.

Every JSON document carries a ``format`` tag (``absf-model/1``,
``absf-bmd/1``, ``absf-plan/1``, ``absf-scenario/1``, ``absf-report/1``).
JSON is written with sorted keys and a fixed layout so identical inputs
produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .anatomy import BmdGrid, VertebraModel
from .drillsim import Phase, Trace, phase_from_name, phase_name
from .geometry import BridgePlan

__all__ = [
    "dump_json",
    "load_json",
    "load_model",
    "save_model",
    "load_bmd",
    "save_bmd",
    "load_plan",
    "save_plan",
    "save_trace_csv",
    "load_trace_csv",
    "save_fill_csv",
]

TRACE_HEADER = ["t_s", "x_mm", "y_mm", "z_mm", "phase", "side"]
FILL_HEADER = ["t_s", "s_lo_mm", "s_hi_mm", "volume_mm3", "bridged"]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_json(doc: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_jsonable(doc), indent=2, sort_keys=True)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def load_json(path, expected_format: str | None = None) -> dict:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"file not found: {path}")
    doc = json.loads(path.read_text(encoding="utf-8"))
    if expected_format is not None and doc.get("format") != expected_format:
        raise ValueError(
            f"{path}: expected format {expected_format!r}, got {doc.get('format')!r}"
        )
    return doc


def load_model(path) -> VertebraModel:
    return VertebraModel.from_dict(load_json(path, "absf-model/1"))


def save_model(model: VertebraModel, path) -> Path:
    return dump_json(model.to_dict(), path)


def load_bmd(path) -> BmdGrid:
    return BmdGrid.from_dict(load_json(path, "absf-bmd/1"))


def save_bmd(grid: BmdGrid, path) -> Path:
    return dump_json(grid.to_dict(), path)


def load_plan(path) -> BridgePlan:
    return BridgePlan.from_dict(load_json(path, "absf-plan/1"))


def save_plan(plan: BridgePlan, path) -> Path:
    return dump_json(plan.to_dict(), path)


def save_trace_csv(trace: Trace, path) -> Path:
    """One row per sample: ``t_s,x_mm,y_mm,z_mm,phase,side`` (LF endings)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for t, pos, ph in zip(trace.t, trace.positions, trace.phases):
            writer.writerow([
                f"{t:.6f}", f"{pos[0]:.6f}", f"{pos[1]:.6f}", f"{pos[2]:.6f}",
                phase_name(Phase(ph)), trace.side,
            ])
    return path


def load_trace_csv(path) -> Trace:
    path = Path(path)
    t, pos, phases, side = [], [], [], "left"
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != TRACE_HEADER:
            raise ValueError(f"{path}: unexpected trace header {header}")
        for row in reader:
            t.append(float(row[0]))
            pos.append([float(row[1]), float(row[2]), float(row[3])])
            phases.append(int(phase_from_name(row[4])))
            side = row[5]
    return Trace(np.array(t), np.array(pos), np.array(phases), side)


def save_fill_csv(history, path) -> Path:
    """Fill-front log: ``t_s,s_lo_mm,s_hi_mm,volume_mm3,bridged``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FILL_HEADER)
        for t, state in history:
            writer.writerow([
                f"{t:.3f}", f"{state.s_lo:.4f}", f"{state.s_hi:.4f}",
                f"{state.injected_volume:.4f}", int(state.bridged),
            ])
    return path
