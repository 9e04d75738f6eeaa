"""Discrete-time simulator of the three-phase drilling procedure.

A side is executed as: scripted placement at the entry pose (the manual
alignment phase has no force input at desk scale), autonomous straight
drilling at the feed rate up to the outer-tube depth, stationary arc
drilling up to the inner-tube arc length, then retraction replaying the
inserted positions in reverse.  The achieved arc radius is the nominal
radius times a springback factor; tracker noise is i.i.d. Gaussian per
axis on every emitted sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import IntEnum

import numpy as np

from .errors import PhaseOrderError
from .geometry import EntryPose, SideKind, SideParams

__all__ = ["Phase", "SimConfig", "Trace", "PhaseState", "execute_side", "rpm_schedule"]


class Phase(IntEnum):
    IDLE = 0
    ADMITTANCE = 1
    AUTONOMOUS_DRILLING = 2
    STATIONARY_DRILLING = 3
    RETRACTING = 4
    DONE = 5


_PHASE_NAMES = {
    Phase.IDLE: "idle",
    Phase.ADMITTANCE: "admittance",
    Phase.AUTONOMOUS_DRILLING: "autonomous_drilling",
    Phase.STATIONARY_DRILLING: "stationary_drilling",
    Phase.RETRACTING: "retracting",
    Phase.DONE: "done",
}
_PHASE_BY_NAME = {v: k for k, v in _PHASE_NAMES.items()}


def phase_name(phase: Phase) -> str:
    return _PHASE_NAMES[Phase(phase)]


def phase_from_name(name: str) -> Phase:
    return _PHASE_BY_NAME[name]


@dataclass(frozen=True)
class SimConfig:
    """Feed/speed schedule, sampling step, noise, and springback."""

    feed: float = 2.0          # mm/s
    rpm_drill: float = 6000.0
    rpm_retract: float = 1000.0
    dt: float = 0.25           # s
    noise_sigma: float = 0.5   # mm, per axis
    springback: float = 1.0    # achieved radius = springback * nominal
    seed: int = 0

    def __post_init__(self):
        if self.feed <= 0:
            raise ValueError("feed must be > 0")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.springback <= 0:
            raise ValueError("springback must be > 0")

    def to_dict(self) -> dict:
        return {
            "feed_mm_s": self.feed,
            "rpm_drill": self.rpm_drill,
            "rpm_retract": self.rpm_retract,
            "dt_s": self.dt,
            "noise_sigma_mm": self.noise_sigma,
            "springback": self.springback,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        return cls(
            feed=float(d.get("feed_mm_s", 2.0)),
            rpm_drill=float(d.get("rpm_drill", 6000.0)),
            rpm_retract=float(d.get("rpm_retract", 1000.0)),
            dt=float(d.get("dt_s", 0.25)),
            noise_sigma=float(d.get("noise_sigma_mm", 0.5)),
            springback=float(d.get("springback", 1.0)),
            seed=int(d.get("seed", 0)),
        )


class PhaseState:
    """Legal-order phase machine for one side.

    Transitions follow idle -> admittance -> autonomous -> stationary ->
    retracting -> done, with the stationary phase skipped for straight
    sides.
    """

    def __init__(self, kind: SideKind):
        self.kind = SideKind(kind)
        self.phase = Phase.IDLE

    def _legal_next(self) -> tuple[Phase, ...]:
        if self.phase is Phase.IDLE:
            return (Phase.ADMITTANCE,)
        if self.phase is Phase.ADMITTANCE:
            return (Phase.AUTONOMOUS_DRILLING,)
        if self.phase is Phase.AUTONOMOUS_DRILLING:
            if self.kind is SideKind.STRAIGHT:
                return (Phase.RETRACTING,)
            return (Phase.STATIONARY_DRILLING,)
        if self.phase is Phase.STATIONARY_DRILLING:
            return (Phase.RETRACTING,)
        if self.phase is Phase.RETRACTING:
            return (Phase.DONE,)
        return ()

    def advance(self, phase: Phase) -> Phase:
        phase = Phase(phase)
        if phase not in self._legal_next():
            raise PhaseOrderError(
                f"cannot enter {phase_name(phase)} from {phase_name(self.phase)} "
                f"on a {self.kind.value} side"
            )
        self.phase = phase
        return phase


@dataclass(frozen=True)
class Trace:
    """Time-stamped tip samples with per-sample phase labels."""

    t: np.ndarray          # (n,) seconds, strictly increasing
    positions: np.ndarray  # (n, 3) mm
    phases: np.ndarray     # (n,) Phase values
    side: str              # "left" | "right"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        if np.any(np.diff(t) <= 0):
            raise ValueError("trace timestamps must be strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "positions", np.asarray(self.positions, dtype=float))
        object.__setattr__(self, "phases", np.asarray(self.phases, dtype=int))

    def __len__(self) -> int:
        return len(self.t)

    def insertion(self) -> np.ndarray:
        """Positions of the placement + drilling samples, in order."""
        mask = (self.phases >= Phase.ADMITTANCE) & (self.phases <= Phase.STATIONARY_DRILLING)
        return self.positions[mask]

    def drilling_mask(self) -> np.ndarray:
        return (self.phases == Phase.AUTONOMOUS_DRILLING) | (
            self.phases == Phase.STATIONARY_DRILLING
        )

    def transformed(self, rotation: np.ndarray, translation: np.ndarray) -> "Trace":
        pos = self.positions @ np.asarray(rotation, dtype=float).T + np.asarray(
            translation, dtype=float
        )
        return Trace(self.t.copy(), pos, self.phases.copy(), self.side, dict(self.meta))


def rpm_schedule(phase: Phase, cfg: SimConfig = SimConfig()) -> float:
    """Spindle speed for a phase: full speed while drilling, reduced while
    retracting, zero otherwise.  Recorded in trace metadata only."""
    phase = Phase(phase)
    if phase in (Phase.AUTONOMOUS_DRILLING, Phase.STATIONARY_DRILLING):
        return cfg.rpm_drill
    if phase is Phase.RETRACTING:
        return cfg.rpm_retract
    return 0.0


def _arc_lengths_at_feed(length: float, feed: float, dt: float) -> np.ndarray:
    """Arc-length stations for one phase: full feed*dt steps plus a final
    partial step landing exactly on ``length``."""
    if length <= 0:
        return np.empty(0)
    step = feed * dt
    n_full = int(math.floor(length / step - 1e-12))
    stations = step * np.arange(1, n_full + 1)
    if length - (n_full * step) > 1e-12:
        stations = np.append(stations, length)
    return stations


def execute_side(entry: EntryPose, params: SideParams, cfg: SimConfig, side: str = "left") -> Trace:
    """Simulate drilling one side and return the tracker-like trace.

    With zero noise and springback 1 the final drilling sample equals the
    closed-form tip position; retraction replays the inserted positions in
    reverse at the same feed.  Identical seeds give bit-identical traces.
    """
    state = PhaseState(params.kind)
    t_dir = entry.direction
    n_dir = entry.bend_normal

    times = [0.0]
    positions = [entry.position.copy()]
    phases = [int(state.advance(Phase.ADMITTANCE))]

    def extend(stations: np.ndarray, pts: np.ndarray, phase: Phase):
        t0 = times[-1]
        prev_s = 0.0
        for s, p in zip(stations, pts):
            t0 += (s - prev_s) / cfg.feed
            prev_s = s
            times.append(t0)
            positions.append(p)
            phases.append(int(phase))

    state.advance(Phase.AUTONOMOUS_DRILLING)
    s_straight = _arc_lengths_at_feed(params.l_ot, cfg.feed, cfg.dt)
    pts = entry.position[None, :] + s_straight[:, None] * t_dir[None, :]
    extend(s_straight, pts, Phase.AUTONOMOUS_DRILLING)

    if params.kind is SideKind.CURVED:
        state.advance(Phase.STATIONARY_DRILLING)
        r_eff = params.r * cfg.springback
        bend_start = entry.position + params.l_ot * t_dir
        s_arc = _arc_lengths_at_feed(params.l_it, cfg.feed, cfg.dt)
        phis = s_arc / r_eff
        arc = (
            bend_start[None, :]
            + r_eff * np.sin(phis)[:, None] * t_dir[None, :]
            + r_eff * (1.0 - np.cos(phis))[:, None] * n_dir[None, :]
        )
        extend(s_arc, arc, Phase.STATIONARY_DRILLING)

    state.advance(Phase.RETRACTING)
    n_ins = len(times)
    ins_pos = np.array(positions)
    ins_t = np.array(times)
    # replay in reverse; time deltas mirror the insertion deltas (same feed)
    deltas = np.diff(ins_t)[::-1]
    t0 = times[-1]
    for k, p in enumerate(ins_pos[::-1]):
        t0 += deltas[k - 1] if k > 0 else cfg.dt
        times.append(t0)
        positions.append(p)
        phases.append(int(Phase.RETRACTING))
    state.advance(Phase.DONE)

    pos = np.array(positions)
    if cfg.noise_sigma > 0:
        rng = np.random.default_rng(cfg.seed)
        pos = pos + rng.normal(0.0, cfg.noise_sigma, size=pos.shape)

    meta = {
        "rpm_by_phase": {
            phase_name(ph): rpm_schedule(ph, cfg)
            for ph in (Phase.ADMITTANCE, Phase.AUTONOMOUS_DRILLING,
                       Phase.STATIONARY_DRILLING, Phase.RETRACTING)
        },
        "admittance_scripted": True,
        "springback": cfg.springback,
        "noise_sigma_mm": cfg.noise_sigma,
        "seed": cfg.seed,
        "insertion_samples": n_ins,
    }
    return Trace(np.array(times), pos, np.array(phases), side, meta)


def with_seed(cfg: SimConfig, seed: int) -> SimConfig:
    return replace(cfg, seed=seed)
