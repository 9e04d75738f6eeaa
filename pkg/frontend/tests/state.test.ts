import { describe, expect, it } from "vitest";

import {
  applyServiceError,
  applySolve,
  canEvaluate,
  defaultParams,
  initialState,
  setParam,
  toggleOverlay,
  validateParams,
} from "../src/state.js";
import { fixtureInfeasibleSolve, fixtureModel } from "./fixtures.js";

describe("defaultParams", () => {
  it("keeps pinned values and takes midpoints of ranges", () => {
    const model = fixtureModel();
    const left = defaultParams(model.scenario.sides.left);
    expect(left.l_ot).toBe(28.5);
    expect(left.l_it).toBe(42.5);
    expect(left.r).toBe(25);
    expect(left.alpha_deg).toBeCloseTo(6.5);
    const right = defaultParams(model.scenario.sides.right);
    expect(right.l_ot).toBeCloseTo(50.0);
  });
});

describe("validateParams", () => {
  it("rejects a curved side with zero arc length before any request", () => {
    const p = defaultParams(fixtureModel().scenario.sides.left);
    expect(validateParams(p)).toBeNull();
    expect(validateParams({ ...p, l_it: 0 })).toMatch(/arc length/);
  });

  it("rejects sweeps past half a turn", () => {
    const p = defaultParams(fixtureModel().scenario.sides.left);
    expect(validateParams({ ...p, l_it: 25 * Math.PI + 1 })).toMatch(/180/);
  });

  it("rejects negative straight depth", () => {
    const p = defaultParams(fixtureModel().scenario.sides.right);
    expect(validateParams({ ...p, l_ot: -1 })).toMatch(/at least 0/);
  });
});

describe("state transitions", () => {
  it("setParam updates validation and blocks evaluation when invalid", () => {
    let state = initialState(fixtureModel());
    expect(canEvaluate(state)).toBe(true);
    state = setParam(state, "left", "l_it", 0);
    expect(state.validation.left).toMatch(/arc length/);
    expect(canEvaluate(state)).toBe(false);
    state = setParam(state, "left", "l_it", 42.5);
    expect(canEvaluate(state)).toBe(true);
  });

  it("infeasible solve raises a banner but keeps the candidate", () => {
    let state = initialState(fixtureModel());
    state = applySolve(state, fixtureInfeasibleSolve());
    expect(state.banner).toMatch(/no feasible plan/);
    expect(state.solved?.best_candidate?.tip_gap_mm).toBeCloseTo(4.2);
  });

  it("service errors flip the health flag; overlays toggle", () => {
    let state = initialState(fixtureModel());
    state = applyServiceError(state, "connection refused");
    expect(state.serviceOk).toBe(false);
    expect(state.banner).toMatch(/unreachable/);
    state = toggleOverlay(state, "bmd");
    expect(state.overlays.bmd).toBe(true);
    state = toggleOverlay(state, "bmd");
    expect(state.overlays.bmd).toBe(false);
  });
});
