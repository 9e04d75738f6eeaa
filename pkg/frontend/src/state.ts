// View state and client-side input validation.
//
// The only numbers the UI computes itself are input-validation bounds;
// meeting angle, tip gap, constraint flags, and path geometry always come
// from the most recent service response.

import type {
  Bound,
  EvaluateResponse,
  InjectResponse,
  ModelResponse,
  ParamValues,
  SideSpecWire,
  SolveResponse,
  TraceWire,
} from "./types.js";

export interface Overlays {
  bmd: boolean;
  trace: boolean;
  fill: boolean;
}

export interface ViewState {
  params: { left: ParamValues; right: ParamValues };
  lastEvaluation: EvaluateResponse | null;
  solved: SolveResponse | null;
  traces: TraceWire[] | null;
  fill: InjectResponse | null;
  overlays: Overlays;
  serviceOk: boolean;
  banner: string | null;
  validation: { left: string | null; right: string | null };
}

export function boundRange(b: Bound): [number, number] {
  return typeof b === "number" ? [b, b] : [b[0], b[1]];
}

export function boundMid(b: Bound): number {
  const [lo, hi] = boundRange(b);
  return (lo + hi) / 2;
}

export function isPinned(b: Bound): boolean {
  const [lo, hi] = boundRange(b);
  return lo === hi;
}

/** Initial slider values for a side spec: pins stay pinned, ranges start
 * at their midpoint. */
export function defaultParams(spec: SideSpecWire): ParamValues {
  return {
    kind: spec.kind,
    corridor: spec.corridor,
    alpha_deg: boundMid(spec.alpha_deg),
    slide: boundMid(spec.slide),
    l_ot: boundMid(spec.l_ot),
    l_it: boundMid(spec.l_it),
    r: boundMid(spec.r),
    bend_roll_deg: spec.bend_roll_deg,
  };
}

/** Pre-request validation; returns a message or null when the values are
 * sendable. */
export function validateParams(p: ParamValues): string | null {
  if (p.l_ot < 0) {
    return "straight depth must be at least 0";
  }
  if (p.kind === "curved") {
    if (p.l_it <= 0) {
      return "curved side needs an arc length above 0";
    }
    if (p.r <= 0) {
      return "curved side needs a bend radius above 0";
    }
    if (p.l_it / p.r > Math.PI) {
      return "arc would sweep past 180 degrees";
    }
  }
  return null;
}

export function initialState(model: ModelResponse): ViewState {
  return {
    params: {
      left: defaultParams(model.scenario.sides.left),
      right: defaultParams(model.scenario.sides.right),
    },
    lastEvaluation: null,
    solved: null,
    traces: null,
    fill: null,
    overlays: { bmd: false, trace: false, fill: false },
    serviceOk: true,
    banner: null,
    validation: { left: null, right: null },
  };
}

export function setParam(
  state: ViewState,
  side: "left" | "right",
  name: keyof ParamValues,
  value: number,
): ViewState {
  const params = {
    ...state.params,
    [side]: { ...state.params[side], [name]: value },
  };
  const validation = {
    left: validateParams(params.left),
    right: validateParams(params.right),
  };
  return { ...state, params, validation };
}

export function canEvaluate(state: ViewState): boolean {
  return state.validation.left === null && state.validation.right === null;
}

export function applyEvaluation(state: ViewState, r: EvaluateResponse): ViewState {
  return { ...state, lastEvaluation: r, serviceOk: true, banner: null };
}

export function applySolve(state: ViewState, r: SolveResponse): ViewState {
  const banner = r.feasible
    ? null
    : "no feasible plan for these bounds; showing the closest candidate";
  return { ...state, solved: r, serviceOk: true, banner };
}

export function applyServiceError(state: ViewState, message: string): ViewState {
  return { ...state, serviceOk: false, banner: `service unreachable: ${message}` };
}

export function toggleOverlay(state: ViewState, name: keyof Overlays): ViewState {
  return {
    ...state,
    overlays: { ...state.overlays, [name]: !state.overlays[name] },
  };
}
