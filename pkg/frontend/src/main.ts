// DOM wiring: sliders per side, constraint badges, overlays, solve button.

import { EvaluateScheduler, ServiceClient, ServiceUnavailableError } from "./client.js";
import {
  applyEvaluation,
  applyServiceError,
  applySolve,
  canEvaluate,
  boundRange,
  initialState,
  isPinned,
  setParam,
  toggleOverlay,
  validateParams,
  type ViewState,
} from "./state.js";
import { buildScene, fitViewport, paint } from "./render.js";
import type { ModelResponse, ParamValues } from "./types.js";

const SERVICE_URL = (window as { ABSF_SERVICE_URL?: string }).ABSF_SERVICE_URL
  ?? `${window.location.protocol}//${window.location.hostname}:8137`;

const SLIDER_DEFS: Array<{
  name: keyof ParamValues;
  label: string;
  step: number;
  unit: string;
}> = [
  { name: "alpha_deg", label: "insertion angle", step: 0.1, unit: "°" },
  { name: "slide", label: "entry slide", step: 0.1, unit: "mm" },
  { name: "l_ot", label: "straight depth", step: 0.1, unit: "mm" },
  { name: "l_it", label: "arc length", step: 0.1, unit: "mm" },
  { name: "r", label: "bend radius", step: 0.5, unit: "mm" },
];

const CONSTRAINT_LABELS: Record<string, string> = {
  containment_ok: "containment",
  corridor_ok: "corridor",
  curvature_ok: "curvature",
  bmd_ok: "density",
  theta_ok: "angle band",
};

async function boot(): Promise<void> {
  const client = new ServiceClient(SERVICE_URL);
  const banner = document.getElementById("banner") as HTMLDivElement;
  let model: ModelResponse;
  try {
    model = await client.getModel();
  } catch (err) {
    banner.textContent = `service unreachable at ${SERVICE_URL}: ${String(err)}`;
    banner.classList.add("visible", "error");
    return;
  }

  let state = initialState(model);
  const canvas = document.getElementById("view") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    throw new Error("2d canvas context unavailable");
  }
  const viewport = fitViewport(model, canvas.width, canvas.height);

  const scheduler = new EvaluateScheduler(
    client,
    (result) => {
      state = applyEvaluation(state, result);
      render();
    },
    (err) => {
      if (err instanceof ServiceUnavailableError) {
        state = applyServiceError(state, err.message);
      } else {
        state = { ...state, banner: String(err) };
      }
      render();
    },
    100,
  );

  function requestEvaluate(): void {
    if (canEvaluate(state)) {
      scheduler.request(state.params);
    }
  }

  function render(): void {
    paint(ctx!, viewport, buildScene(model, state), canvas.width);
    renderReadouts();
    renderBadges();
    renderBanner();
  }

  function renderReadouts(): void {
    const theta = document.getElementById("theta-readout")!;
    const gap = document.getElementById("gap-readout")!;
    if (state.lastEvaluation) {
      theta.textContent = `${state.lastEvaluation.theta_deg.toFixed(1)}°`;
      gap.textContent = `${state.lastEvaluation.tip_gap_mm.toFixed(2)} mm`;
    } else {
      theta.textContent = "–";
      gap.textContent = "–";
    }
  }

  function renderBadges(): void {
    const host = document.getElementById("badges")!;
    host.innerHTML = "";
    const flags = state.lastEvaluation?.constraints;
    for (const [key, label] of Object.entries(CONSTRAINT_LABELS)) {
      const el = document.createElement("span");
      el.className = "badge";
      el.textContent = label;
      if (flags) {
        el.classList.add((flags as unknown as Record<string, boolean>)[key] ? "ok" : "bad");
      }
      host.appendChild(el);
    }
  }

  function renderBanner(): void {
    const messages = [
      state.banner,
      state.validation.left && `left: ${state.validation.left}`,
      state.validation.right && `right: ${state.validation.right}`,
    ].filter(Boolean);
    banner.textContent = messages.join(" — ");
    banner.classList.toggle("visible", messages.length > 0);
    banner.classList.toggle("error", !state.serviceOk);
  }

  function buildControls(side: "left" | "right"): void {
    const host = document.getElementById(`controls-${side}`)!;
    const spec = model.scenario.sides[side];
    const title = document.createElement("h3");
    title.textContent = `${side} side (${spec.kind})`;
    host.appendChild(title);

    for (const def of SLIDER_DEFS) {
      if (spec.kind === "straight" && (def.name === "l_it" || def.name === "r")) {
        continue;
      }
      const bound = spec[def.name as "alpha_deg"];
      const [lo, hi] = boundRange(bound);
      const row = document.createElement("div");
      row.className = "control-row";
      const label = document.createElement("label");
      label.textContent = def.label;
      row.appendChild(label);
      const value = document.createElement("span");
      value.className = "value";
      const current = state.params[side][def.name] as number;
      value.textContent = `${current.toFixed(1)} ${def.unit}`;
      if (isPinned(bound)) {
        const pin = document.createElement("span");
        pin.className = "pinned";
        pin.textContent = "pinned";
        row.appendChild(value);
        row.appendChild(pin);
      } else {
        const input = document.createElement("input");
        input.type = "range";
        input.min = String(lo);
        input.max = String(hi);
        input.step = String(def.step);
        input.value = String(current);
        input.dataset.side = side;
        input.dataset.param = def.name;
        input.addEventListener("input", () => {
          state = setParam(state, side, def.name, Number(input.value));
          value.textContent = `${Number(input.value).toFixed(1)} ${def.unit}`;
          render();
          requestEvaluate();
        });
        row.appendChild(input);
        row.appendChild(value);
      }
      host.appendChild(row);
    }
  }

  buildControls("left");
  buildControls("right");

  document.getElementById("solve")!.addEventListener("click", async () => {
    try {
      const result = await client.solve({});
      state = applySolve(state, result);
    } catch (err) {
      state =
        err instanceof ServiceUnavailableError
          ? applyServiceError(state, err.message)
          : { ...state, banner: String(err) };
    }
    render();
  });

  document.getElementById("simulate")!.addEventListener("click", async () => {
    const plan = state.solved?.plan ?? state.lastEvaluation?.plan;
    if (!plan) {
      state = { ...state, banner: "evaluate or solve first" };
      render();
      return;
    }
    try {
      const result = await client.simulate(plan, 1, 0);
      state = { ...state, traces: result.traces, overlays: { ...state.overlays, trace: true } };
    } catch (err) {
      state = { ...state, banner: String(err) };
    }
    render();
  });

  document.getElementById("fill")!.addEventListener("click", async () => {
    const plan = state.solved?.plan ?? state.lastEvaluation?.plan;
    if (!plan) {
      state = { ...state, banner: "evaluate or solve first" };
      render();
      return;
    }
    try {
      const result = await client.inject(plan);
      state = { ...state, fill: result, overlays: { ...state.overlays, fill: true } };
    } catch (err) {
      state = { ...state, banner: String(err) };
    }
    render();
  });

  for (const name of ["bmd", "trace", "fill"] as const) {
    const box = document.getElementById(`overlay-${name}`) as HTMLInputElement;
    box.addEventListener("change", () => {
      state = toggleOverlay(state, name);
      render();
    });
  }

  const scenarioEl = document.getElementById("scenario-name")!;
  scenarioEl.textContent = `${model.scenario.name} — ${model.scenario.description}`;

  render();
  requestEvaluate();
}

void boot();
