// Wire types for the planning service (absf-* JSON formats).

export type Vec3 = [number, number, number];
export type Bound = number | [number, number];

export interface CorridorWire {
  entry: Vec3;
  axis: Vec3;
  radius: number;
  length: number;
}

export interface SideSpecWire {
  kind: "straight" | "curved";
  corridor: number;
  alpha_deg: Bound;
  l_ot: Bound;
  l_it: Bound;
  r: Bound;
  slide: Bound;
  bend_roll_deg: number;
}

export interface ModelResponse {
  format: string;
  axial_section: [number, number][];
  height: number;
  corridors: CorridorWire[];
  scale: number;
  scenario: {
    name: string;
    description: string;
    sides: { left: SideSpecWire; right: SideSpecWire };
    planner: {
      eps_meet_mm: number;
      theta_band_deg: [number, number];
      r_min_mm: number;
      bmd_min: number;
    };
    fill_radius_mm: number;
  };
  bmd_axial_slice: {
    origin: [number, number];
    spacing: [number, number];
    values: number[][];
  };
}

export interface ParamValues {
  kind: "straight" | "curved";
  corridor: number;
  alpha_deg: number;
  slide: number;
  l_ot: number;
  l_it: number;
  r: number;
  bend_roll_deg: number;
}

export interface ConstraintDetail {
  constraint: string;
  margin: number | null;
}

export interface ConstraintsWire {
  containment_ok: boolean;
  corridor_ok: boolean;
  curvature_ok: boolean;
  bmd_ok: boolean;
  theta_ok: boolean;
  feasible: boolean;
  details: ConstraintDetail[];
}

export interface SideGeometryWire {
  tip: Vec3;
  tangent: Vec3;
  polyline: Vec3[];
}

export interface PlanWire {
  format: string;
  sides: Record<string, unknown>;
  theta_deg: number;
  tip_gap: number;
  meeting_point: Vec3;
}

export interface EvaluateResponse {
  format: string;
  theta_deg: number;
  tip_gap_mm: number;
  meeting_point_mm: Vec3;
  plan: PlanWire;
  geometry: { left: SideGeometryWire; right: SideGeometryWire };
  constraints: ConstraintsWire;
  feasible: boolean;
}

export interface SolveResponse {
  format: string;
  feasible: boolean;
  theta_deg?: number;
  tip_gap_mm?: number;
  plan?: PlanWire;
  geometry?: { left: SideGeometryWire; right: SideGeometryWire };
  constraints?: ConstraintsWire | null;
  message?: string;
  best_candidate?: {
    plan: PlanWire;
    geometry: { left: SideGeometryWire; right: SideGeometryWire };
    theta_deg: number;
    tip_gap_mm: number;
  } | null;
}

export interface TraceSampleWire {
  t_s: number;
  position_mm: Vec3;
  phase: string;
}

export interface TraceWire {
  side: "left" | "right";
  samples: TraceSampleWire[];
}

export interface SimulateResponse {
  format: string;
  traces: TraceWire[];
}

export interface FillFrameWire {
  t_s: number;
  s_lo_mm: number;
  s_hi_mm: number;
  lo_point_mm: Vec3;
  hi_point_mm: Vec3;
  volume_mm3: number;
  bridged: boolean;
}

export interface InjectResponse {
  format: string;
  bridge_span_mm: [number, number];
  channel_length_mm: number;
  flow_rate_mm3_s: number;
  timeline: FillFrameWire[];
}

export interface ServiceError {
  field: string;
  message: string;
}
