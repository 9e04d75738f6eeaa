import { describe, expect, it } from "vitest";

import { buildScene, fitViewport, toScreen } from "../src/render.js";
import { applyEvaluation, applySolve, initialState, toggleOverlay } from "../src/state.js";
import { fixtureEvaluation, fixtureInfeasibleSolve, fixtureModel } from "./fixtures.js";

describe("buildScene", () => {
  it("always shows the body outline and corridors", () => {
    const model = fixtureModel();
    const prims = buildScene(model, initialState(model));
    const ids = prims.map((p) => p.id);
    expect(ids).toContain("body");
    expect(ids).toContain("corridor-0-1");
    expect(ids).toContain("corridor-1-1");
  });

  it("renders both server polylines verbatim with the angle readout", () => {
    const model = fixtureModel();
    const ev = fixtureEvaluation();
    const state = applyEvaluation(initialState(model), ev);
    const prims = buildScene(model, state);

    const left = prims.find((p) => p.id === "path-left");
    const right = prims.find((p) => p.id === "path-right");
    expect(left && left.kind === "polyline").toBeTruthy();
    expect(right && right.kind === "polyline").toBeTruthy();
    if (left?.kind === "polyline") {
      // no client-side geometry: points are the server polyline's xy
      expect(left.points).toEqual(ev.geometry.left.polyline.map((p) => [p[0], p[1]]));
    }
    const label = prims.find((p) => p.id === "theta-readout");
    expect(label?.kind).toBe("label");
    if (label?.kind === "label") {
      expect(label.text).toContain("110.0");
    }
    expect(prims.some((p) => p.id === "meeting")).toBe(true);
  });

  it("draws the infeasible candidate dashed", () => {
    const model = fixtureModel();
    let state = initialState(model);
    state = applySolve(state, fixtureInfeasibleSolve());
    const prims = buildScene(model, state);
    const cand = prims.find((p) => p.id === "solved-left-candidate");
    expect(cand?.kind).toBe("polyline");
    if (cand?.kind === "polyline") {
      expect(cand.dashed).toBe(true);
    }
  });

  it("shows the density heatmap only when toggled", () => {
    const model = fixtureModel();
    let state = initialState(model);
    expect(buildScene(model, state).some((p) => p.kind === "heatmap")).toBe(false);
    state = toggleOverlay(state, "bmd");
    expect(buildScene(model, state).some((p) => p.kind === "heatmap")).toBe(true);
  });
});

describe("viewport", () => {
  it("keeps the whole model on screen and flips y", () => {
    const model = fixtureModel();
    const v = fitViewport(model, 760, 760);
    for (const p of model.axial_section) {
      const [sx, sy] = toScreen(v, p);
      expect(sx).toBeGreaterThanOrEqual(0);
      expect(sx).toBeLessThanOrEqual(760);
      expect(sy).toBeGreaterThanOrEqual(0);
      expect(sy).toBeLessThanOrEqual(760);
    }
    // anterior (larger y) is higher on screen (smaller canvas y)
    const posterior = toScreen(v, [0, 0]);
    const anterior = toScreen(v, [0, 51]);
    expect(anterior[1]).toBeLessThan(posterior[1]);
  });
});
