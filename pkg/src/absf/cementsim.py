"""First-order augmentation-feasibility model: flow rate and 1-D fill front.

The injected material is treated as a laminar (Hagen-Poiseuille) flow
through the delivery tube, filling a 1-D channel along the combined
bridge path from the injection point outward.  Porous leakage into the
surrounding foam is ignored; this is a conservative continuity check, not
a rheology model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import BridgePlan

__all__ = [
    "InjectionConfig",
    "FillChannel",
    "FillState",
    "poiseuille_rate",
    "cavity_volume",
    "advance_fill",
    "run_fill",
]


@dataclass(frozen=True)
class InjectionConfig:
    """Injection pressure/viscosity and delivery-tube geometry.

    The tube inner radius varies by setup and must always be supplied
    by the caller.
    """

    tube_inner_radius: float          # mm
    tube_length: float                # mm
    pressure: float = 4.0e5           # Pa
    viscosity: float = 14.0           # Pa s
    flow_rate_override: float | None = None  # mm^3/s

    def __post_init__(self):
        for name in ("tube_inner_radius", "tube_length", "pressure", "viscosity"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.flow_rate_override is not None and self.flow_rate_override <= 0:
            raise ValueError("flow_rate_override must be positive when set")

    def flow_rate(self) -> float:
        if self.flow_rate_override is not None:
            return float(self.flow_rate_override)
        return poiseuille_rate(self)

    def to_dict(self) -> dict:
        return {
            "tube_inner_radius_mm": self.tube_inner_radius,
            "tube_length_mm": self.tube_length,
            "pressure_pa": self.pressure,
            "viscosity_pa_s": self.viscosity,
            "flow_rate_override_mm3_s": self.flow_rate_override,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InjectionConfig":
        return cls(
            tube_inner_radius=float(d["tube_inner_radius_mm"]),
            tube_length=float(d["tube_length_mm"]),
            pressure=float(d.get("pressure_pa", 4.0e5)),
            viscosity=float(d.get("viscosity_pa_s", 14.0)),
            flow_rate_override=(
                None
                if d.get("flow_rate_override_mm3_s") is None
                else float(d["flow_rate_override_mm3_s"])
            ),
        )


def poiseuille_rate(cfg: InjectionConfig) -> float:
    """Laminar volumetric flow rate Q = pi dP R^4 / (8 mu L), in mm^3/s."""
    r_m = cfg.tube_inner_radius * 1e-3
    l_m = cfg.tube_length * 1e-3
    q_m3 = math.pi * cfg.pressure * r_m**4 / (8.0 * cfg.viscosity * l_m)
    return q_m3 * 1e9


def cavity_volume(plan: BridgePlan, fill_radius: float) -> float:
    """Cylindrical-sweep volume of both tunnels, in mm^3.

    When the tips are closer than one fill diameter the near-coincident
    end caps overlap; that overlap is counted once by subtracting the
    lens volume of two spheres of the fill radius whose centers sit one
    tip gap apart.
    """
    if fill_radius <= 0:
        raise ValueError(f"fill_radius must be > 0, got {fill_radius}")
    total_len = plan.total_length()
    vol = math.pi * fill_radius**2 * total_len
    d = plan.tip_gap
    if d < 2.0 * fill_radius:
        # lens volume of two equal spheres with centers d apart
        lens = math.pi * (2.0 * fill_radius - d) ** 2 * (4.0 * fill_radius + d) / 12.0
        vol -= lens
    return max(vol, 0.0)


@dataclass(frozen=True)
class FillChannel:
    """1-D channel along the combined bridge path.

    Coordinate s runs from the left entry (0) through the left tip, across
    the tip gap, and back along the right tunnel to the right entry
    (s = length).  The injection point sits mid-gap; the bridge span is
    the interval that must be covered for the two tunnels to be joined.
    """

    length: float
    injection_s: float
    area: float
    bridge_span: tuple[float, float]

    def __post_init__(self):
        if self.length <= 0 or self.area <= 0:
            raise ValueError("channel length and area must be positive")
        if not (0.0 <= self.injection_s <= self.length):
            raise ValueError("injection point must lie on the channel")

    @classmethod
    def from_plan(cls, plan: BridgePlan, fill_radius: float) -> "FillChannel":
        l_left = plan.left[1].total_length
        l_right = plan.right[1].total_length
        gap = plan.tip_gap
        return cls(
            length=l_left + gap + l_right,
            injection_s=l_left + gap / 2.0,
            area=math.pi * fill_radius**2,
            bridge_span=(l_left, l_left + gap),
        )

    def capacity(self) -> float:
        return self.area * self.length

    def initial_state(self) -> "FillState":
        return FillState(self.injection_s, self.injection_s, 0.0, False, self)


@dataclass(frozen=True)
class FillState:
    """Filled interval along the channel, in arc-length mm.

    Invariant: injected volume equals channel area times interval length.
    """

    s_lo: float
    s_hi: float
    injected_volume: float
    bridged: bool
    channel: FillChannel = field(repr=False)

    def __post_init__(self):
        if self.s_lo > self.s_hi:
            raise ValueError("filled interval must have s_lo <= s_hi")
        expect = self.channel.area * (self.s_hi - self.s_lo)
        if abs(expect - self.injected_volume) > 1e-6 * max(1.0, self.injected_volume):
            raise ValueError("injected volume inconsistent with filled interval")


def advance_fill(
    state: FillState,
    cfg: InjectionConfig,
    dt: float,
    bridge_span: tuple[float, float],
) -> FillState:
    """Advance the fill front by ``dt`` seconds.

    The filled interval grows at Q / A total (split between both fronts);
    a front stopped at a channel end redirects its share to the other
    side.  Injected volume tracks Q * t exactly until the channel is
    full, then stays constant.  ``bridged`` latches once the filled
    interval first covers ``bridge_span``.
    """
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    if dt == 0:
        return state
    ch = state.channel
    q = cfg.flow_rate()
    new_volume = min(state.injected_volume + q * dt, ch.capacity())
    filled_len = new_volume / ch.area

    lo = ch.injection_s - filled_len / 2.0
    hi = ch.injection_s + filled_len / 2.0
    if lo < 0.0:
        hi = min(hi - lo, ch.length)
        lo = 0.0
    if hi > ch.length:
        lo = max(lo - (hi - ch.length), 0.0)
        hi = ch.length
    sa, sb = bridge_span
    bridged = state.bridged or (lo <= sa + 1e-12 and hi >= sb - 1e-12)
    return FillState(lo, hi, new_volume, bridged, ch)


def run_fill(
    plan: BridgePlan,
    cfg: InjectionConfig,
    fill_radius: float,
    dt: float = 1.0,
    max_time: float | None = None,
) -> list[tuple[float, FillState]]:
    """Step the fill to completion; returns the (time, state) history."""
    channel = FillChannel.from_plan(plan, fill_radius)
    state = channel.initial_state()
    history = [(0.0, state)]
    q = cfg.flow_rate()
    if max_time is None:
        max_time = 1.5 * channel.capacity() / q + dt
    t = 0.0
    while t < max_time:
        t += dt
        state = advance_fill(state, cfg, dt, channel.bridge_span)
        history.append((t, state))
        if state.injected_volume >= channel.capacity() - 1e-9:
            break
    return history
