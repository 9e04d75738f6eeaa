"""Closed-form geometry of straight-then-arc drilling tunnels and bridges.

A tunnel is a straight segment (outer-tube insertion depth) followed by a
planar circular arc (inner-tube insertion arc length at a fixed bend
radius).  Two tunnels drilled from opposite pedicles form a bridge when
their tips meet; the bridge is summarized by the tip gap, the meeting
point, and the meeting angle between the tip tangents.

Angle conventions used throughout the toolkit:

* the axial plane is the world xy plane, +y is anterior, +z superior;
* ``alpha_deg`` is the signed axial-plane angle between the entry
  direction and +y, positive toward +x;
* the meeting angle is taken between *directed* tip tangents (both
  pointing in the drilling direction), so it ranges over [0, 180] deg.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InvalidPoseError

__all__ = [
    "SideKind",
    "EntryPose",
    "SideParams",
    "ToolSpec",
    "BridgePlan",
    "tip_pose",
    "sample_path",
    "meeting_angle",
    "bridge_metrics",
]

_UNIT_TOL = 1e-9


def _vec3(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {v.shape}")
    return v


class SideKind(str, Enum):
    STRAIGHT = "straight"
    CURVED = "curved"


@dataclass(frozen=True)
class EntryPose:
    """Entry point with drilling direction and bend-plane normal.

    ``direction`` and ``bend_normal`` must be unit length and mutually
    orthogonal; the arc of a curved side deviates toward ``bend_normal``
    inside the plane the two vectors span.
    """

    position: np.ndarray
    direction: np.ndarray
    bend_normal: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", _vec3(self.position))
        object.__setattr__(self, "direction", _vec3(self.direction))
        object.__setattr__(self, "bend_normal", _vec3(self.bend_normal))
        if abs(np.linalg.norm(self.direction) - 1.0) > _UNIT_TOL:
            raise InvalidPoseError("direction is not unit length")
        if abs(np.linalg.norm(self.bend_normal) - 1.0) > _UNIT_TOL:
            raise InvalidPoseError("bend_normal is not unit length")
        if abs(float(np.dot(self.direction, self.bend_normal))) > _UNIT_TOL:
            raise InvalidPoseError("direction and bend_normal are not orthogonal")
        self.position.flags.writeable = False
        self.direction.flags.writeable = False
        self.bend_normal.flags.writeable = False

    def transformed(self, rotation: np.ndarray, translation: np.ndarray) -> "EntryPose":
        """Entry pose after the rigid map p -> R p + t."""
        rotation = np.asarray(rotation, dtype=float)
        translation = _vec3(translation)
        return EntryPose(
            position=rotation @ self.position + translation,
            direction=rotation @ self.direction,
            bend_normal=rotation @ self.bend_normal,
        )

    def axial_angle_deg(self) -> float:
        """Signed axial-plane insertion angle of ``direction`` (deg from +y)."""
        return math.degrees(math.atan2(self.direction[0], self.direction[1]))

    def to_dict(self) -> dict:
        return {
            "position": [float(v) for v in self.position],
            "direction": [float(v) for v in self.direction],
            "bend_normal": [float(v) for v in self.bend_normal],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EntryPose":
        return cls(d["position"], d["direction"], d["bend_normal"])


@dataclass(frozen=True)
class SideParams:
    """The adjustable parameters of one tunnel.

    ``l_ot`` is the straight insertion depth, ``l_it`` the arc length
    drilled along the bend, and ``r`` the bend radius.  The sweep angle
    ``l_it / r`` is capped at pi: the drilling tube cannot loop back, and
    the cap keeps the tip pose single-valued.
    """

    kind: SideKind
    alpha_deg: float
    l_ot: float
    l_it: float = 0.0
    r: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", SideKind(self.kind))
        if self.l_ot < 0:
            raise ValueError(f"l_ot must be >= 0, got {self.l_ot}")
        if self.kind is SideKind.STRAIGHT:
            if self.l_it != 0.0:
                raise ValueError("straight side must have l_it = 0")
        else:
            if self.l_it <= 0:
                raise ValueError(f"curved side needs l_it > 0, got {self.l_it}")
            if self.r <= 0:
                raise ValueError(f"curved side needs r > 0, got {self.r}")
            if self.sweep_rad > math.pi + 1e-12:
                raise ValueError(
                    f"sweep angle l_it/r = {self.sweep_rad:.3f} rad exceeds pi"
                )

    @property
    def sweep_rad(self) -> float:
        """Arc sweep angle in radians (0 for straight sides)."""
        if self.kind is SideKind.STRAIGHT:
            return 0.0
        return self.l_it / self.r

    @property
    def total_length(self) -> float:
        return self.l_ot + self.l_it

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "alpha_deg": float(self.alpha_deg),
            "l_ot": float(self.l_ot),
            "l_it": float(self.l_it),
            "r": float(self.r),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SideParams":
        return cls(
            kind=SideKind(d["kind"]),
            alpha_deg=float(d["alpha_deg"]),
            l_ot=float(d["l_ot"]),
            l_it=float(d.get("l_it", 0.0)),
            r=float(d.get("r", 0.0)),
        )


@dataclass(frozen=True)
class ToolSpec:
    """Cutter and bend-tube dimensions relevant to clearance checks."""

    drill_diameter: float = 4.73
    niti_od: float = 3.05
    niti_wall: float = 0.24

    def __post_init__(self):
        if min(self.drill_diameter, self.niti_od, self.niti_wall) <= 0:
            raise ValueError("tool dimensions must be positive")
        if self.drill_diameter <= self.niti_od:
            raise ValueError("drill diameter must exceed the bend-tube OD")

    @property
    def drill_radius(self) -> float:
        return self.drill_diameter / 2.0


def tip_pose(entry: EntryPose, p: SideParams) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form tip position and unit tangent of a tunnel.

    For a curved side the tip sits at
    ``bend_start + r sin(phi) t + r (1 - cos(phi)) n`` with tangent
    ``cos(phi) t + sin(phi) n`` where ``phi = l_it / r``; a straight side
    reduces to ``entry + l_ot t`` with unchanged tangent.
    """
    t = entry.direction
    if p.kind is SideKind.STRAIGHT:
        return entry.position + p.l_ot * t, t.copy()
    n = entry.bend_normal
    phi = p.sweep_rad
    bend_start = entry.position + p.l_ot * t
    pos = bend_start + p.r * math.sin(phi) * t + p.r * (1.0 - math.cos(phi)) * n
    tan = math.cos(phi) * t + math.sin(phi) * n
    return pos, tan


def sample_path(entry: EntryPose, p: SideParams, step: float) -> np.ndarray:
    """Polyline along the tunnel at arc-length spacing <= ``step``.

    Returns an (n, 3) array whose first point is the entry position and
    whose last point is the exact tip; the arc portion lies in the plane
    spanned by the entry direction and bend normal.
    """
    if step <= 0:
        raise ValueError(f"step must be > 0, got {step}")
    t = entry.direction
    pts = [entry.position]
    if p.l_ot > 0:
        n_straight = max(1, math.ceil(p.l_ot / step))
        s = np.linspace(0.0, p.l_ot, n_straight + 1)[1:]
        pts.append(entry.position[None, :] + s[:, None] * t[None, :])
    if p.kind is SideKind.CURVED:
        n = entry.bend_normal
        bend_start = entry.position + p.l_ot * t
        n_arc = max(1, math.ceil(p.l_it / step))
        phis = np.linspace(0.0, p.sweep_rad, n_arc + 1)[1:]
        arc = (
            bend_start[None, :]
            + p.r * np.sin(phis)[:, None] * t[None, :]
            + p.r * (1.0 - np.cos(phis))[:, None] * n[None, :]
        )
        pts.append(arc)
    return np.vstack([np.atleast_2d(q) for q in pts])


def meeting_angle(tangent_a, tangent_b) -> float:
    """Angle in degrees between two directed unit tangents, in [0, 180]."""
    a = _vec3(tangent_a)
    b = _vec3(tangent_b)
    for v in (a, b):
        if abs(np.linalg.norm(v) - 1.0) > 1e-9:
            raise ValueError("meeting_angle expects unit tangent vectors")
    cosang = float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))
    return math.degrees(math.acos(max(-1.0, min(1.0, cosang))))


def bridge_metrics(
    left_tip: tuple[np.ndarray, np.ndarray],
    right_tip: tuple[np.ndarray, np.ndarray],
) -> tuple[float, np.ndarray, float]:
    """Tip gap, meeting point (tip midpoint), and meeting angle of a bridge."""
    (pa, ta), (pb, tb) = left_tip, right_tip
    pa, pb = _vec3(pa), _vec3(pb)
    gap = float(np.linalg.norm(pa - pb))
    mid = (pa + pb) / 2.0
    theta = meeting_angle(ta, tb)
    return gap, mid, theta


@dataclass(frozen=True)
class BridgePlan:
    """Two-sided bridge configuration with its derived meeting metrics."""

    left: tuple[EntryPose, SideParams]
    right: tuple[EntryPose, SideParams]
    meeting_point: np.ndarray = field(default=None)
    theta_deg: float = field(default=None)
    tip_gap: float = field(default=None)

    _ALPHA_TOL_DEG = 1e-6

    def __post_init__(self):
        for entry, params in (self.left, self.right):
            got = entry.axial_angle_deg()
            if abs(got - params.alpha_deg) > self._ALPHA_TOL_DEG:
                raise ValueError(
                    f"alpha_deg={params.alpha_deg:.6f} inconsistent with entry "
                    f"direction (axial angle {got:.6f})"
                )
        gap, mid, theta = bridge_metrics(
            tip_pose(*self.left), tip_pose(*self.right)
        )
        object.__setattr__(self, "tip_gap", gap)
        object.__setattr__(self, "meeting_point", mid)
        object.__setattr__(self, "theta_deg", theta)
        self.meeting_point.flags.writeable = False

    @classmethod
    def from_sides(cls, left, right) -> "BridgePlan":
        return cls(left=tuple(left), right=tuple(right))

    def side(self, name: str) -> tuple[EntryPose, SideParams]:
        if name == "left":
            return self.left
        if name == "right":
            return self.right
        raise KeyError(name)

    def tips(self) -> dict:
        return {"left": tip_pose(*self.left), "right": tip_pose(*self.right)}

    def total_length(self) -> float:
        return self.left[1].total_length + self.right[1].total_length

    def to_dict(self) -> dict:
        sides = {}
        for name in ("left", "right"):
            entry, params = self.side(name)
            d = params.to_dict()
            d["entry"] = [float(v) for v in entry.position]
            d["direction"] = [float(v) for v in entry.direction]
            d["bend_normal"] = [float(v) for v in entry.bend_normal]
            sides[name] = d
        return {
            "format": "absf-plan/1",
            "sides": sides,
            "theta_deg": float(self.theta_deg),
            "tip_gap": float(self.tip_gap),
            "meeting_point": [float(v) for v in self.meeting_point],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BridgePlan":
        if d.get("format", "absf-plan/1") != "absf-plan/1":
            raise ValueError(f"unsupported plan format {d.get('format')!r}")
        sides = {}
        for name in ("left", "right"):
            s = d["sides"][name]
            entry = EntryPose(s["entry"], s["direction"], s["bend_normal"])
            params = SideParams.from_dict(s)
            sides[name] = (entry, params)
        return cls(left=sides["left"], right=sides["right"])
