// Scene construction and canvas painting.
//
// buildScene() turns the model document plus the current view state into a
// flat list of drawing primitives in world millimetres (axial projection:
// x right, y anterior).  The painter only maps primitives to the canvas,
// so every rendered path is exactly the server-provided polyline.

import type { ModelResponse, Vec3 } from "./types.js";
import type { ViewState } from "./state.js";

export type XY = [number, number];

export type Primitive =
  | { kind: "polygon"; id: string; points: XY[]; stroke: string; fill: string | null }
  | { kind: "polyline"; id: string; points: XY[]; color: string; width: number; dashed: boolean }
  | { kind: "points"; id: string; points: XY[]; color: string; size: number }
  | { kind: "marker"; id: string; at: XY; color: string; size: number }
  | { kind: "label"; id: string; at: XY; text: string; color: string }
  | {
      kind: "heatmap";
      id: string;
      origin: XY;
      spacing: XY;
      values: number[][];
      alpha: number;
    };

const axial = (p: Vec3): XY => [p[0], p[1]];

export function buildScene(model: ModelResponse, state: ViewState): Primitive[] {
  const prims: Primitive[] = [];

  if (state.overlays.bmd) {
    prims.push({
      kind: "heatmap",
      id: "bmd",
      origin: model.bmd_axial_slice.origin,
      spacing: model.bmd_axial_slice.spacing,
      values: model.bmd_axial_slice.values,
      alpha: 0.45,
    });
  }

  prims.push({
    kind: "polygon",
    id: "body",
    points: model.axial_section,
    stroke: "#26323d",
    fill: "rgba(148, 163, 184, 0.12)",
  });

  model.corridors.forEach((c, i) => {
    const a: XY = [c.entry[0], c.entry[1]];
    const b: XY = [c.entry[0] + c.length * c.axis[0], c.entry[1] + c.length * c.axis[1]];
    const n: XY = [-c.axis[1] * c.radius, c.axis[0] * c.radius];
    for (const s of [1, -1]) {
      prims.push({
        kind: "polyline",
        id: `corridor-${i}-${s}`,
        points: [
          [a[0] + s * n[0], a[1] + s * n[1]],
          [b[0] + s * n[0], b[1] + s * n[1]],
        ],
        color: "#8a97a5",
        width: 1,
        dashed: true,
      });
    }
  });

  const ev = state.lastEvaluation;
  if (ev) {
    for (const side of ["left", "right"] as const) {
      prims.push({
        kind: "polyline",
        id: `path-${side}`,
        points: ev.geometry[side].polyline.map(axial),
        color: side === "left" ? "#2563eb" : "#dc2626",
        width: 2.5,
        dashed: false,
      });
    }
    const mp = axial(ev.meeting_point_mm);
    prims.push({ kind: "marker", id: "meeting", at: mp, color: "#111827", size: 7 });
    prims.push({
      kind: "label",
      id: "theta-readout",
      at: [mp[0] + 4, mp[1] - 6],
      text: `θ ${ev.theta_deg.toFixed(1)}°  gap ${ev.tip_gap_mm.toFixed(2)} mm`,
      color: "#111827",
    });
  }

  const solved = state.solved;
  if (solved) {
    const geometry = solved.feasible ? solved.geometry : solved.best_candidate?.geometry;
    const dashed = !solved.feasible;
    if (geometry) {
      for (const side of ["left", "right"] as const) {
        prims.push({
          kind: "polyline",
          id: `solved-${side}${dashed ? "-candidate" : ""}`,
          points: geometry[side].polyline.map(axial),
          color: "#059669",
          width: 2,
          dashed,
        });
      }
    }
  }

  if (state.overlays.trace && state.traces) {
    state.traces.forEach((tr, i) => {
      prims.push({
        kind: "points",
        id: `trace-${tr.side}-${i}`,
        points: tr.samples.map((s) => axial(s.position_mm)),
        color: tr.side === "left" ? "rgba(37, 99, 235, 0.3)" : "rgba(220, 38, 38, 0.3)",
        size: 1.5,
      });
    });
  }

  if (state.overlays.fill && state.fill) {
    const frame = state.fill.timeline[state.fill.timeline.length - 1];
    prims.push({
      kind: "polyline",
      id: "fill-front",
      points: [axial(frame.lo_point_mm), axial(frame.hi_point_mm)],
      color: frame.bridged ? "#059669" : "#d97706",
      width: 5,
      dashed: false,
    });
  }

  return prims;
}

export interface Viewport {
  scale: number; // px per mm
  offsetX: number;
  offsetY: number;
  height: number;
}

export function fitViewport(
  model: ModelResponse,
  widthPx: number,
  heightPx: number,
  marginMm = 14,
): Viewport {
  const xs = model.axial_section.map((p) => p[0]);
  const ys = model.axial_section.map((p) => p[1]);
  for (const c of model.corridors) {
    xs.push(c.entry[0]);
    ys.push(c.entry[1]);
  }
  const loX = Math.min(...xs) - marginMm;
  const hiX = Math.max(...xs) + marginMm;
  const loY = Math.min(...ys) - marginMm;
  const hiY = Math.max(...ys) + marginMm;
  const scale = Math.min(widthPx / (hiX - loX), heightPx / (hiY - loY));
  return {
    scale,
    offsetX: -loX * scale,
    offsetY: -loY * scale,
    height: heightPx,
  };
}

export function toScreen(v: Viewport, p: XY): XY {
  // world y is anterior-up; canvas y grows downward
  return [p[0] * v.scale + v.offsetX, v.height - (p[1] * v.scale + v.offsetY)];
}

function heatColor(value: number): [number, number, number] {
  const t = Math.max(0, Math.min(1, value));
  return [Math.round(252 * t + 30 * (1 - t)), Math.round(80 + 100 * (1 - t)), 60];
}

export function paint(
  ctx: CanvasRenderingContext2D,
  v: Viewport,
  prims: Primitive[],
  widthPx: number,
): void {
  ctx.clearRect(0, 0, widthPx, v.height);
  for (const prim of prims) {
    switch (prim.kind) {
      case "heatmap": {
        const [sx, sy] = prim.spacing;
        for (let i = 0; i < prim.values.length; i++) {
          for (let j = 0; j < prim.values[i].length; j++) {
            const [r, g, b] = heatColor(prim.values[i][j]);
            ctx.fillStyle = `rgba(${r},${g},${b},${prim.alpha * prim.values[i][j]})`;
            const p = toScreen(v, [
              prim.origin[0] + i * sx - sx / 2,
              prim.origin[1] + j * sy + sy / 2,
            ]);
            ctx.fillRect(p[0], p[1], sx * v.scale, sy * v.scale);
          }
        }
        break;
      }
      case "polygon": {
        ctx.beginPath();
        prim.points.forEach((p, i) => {
          const s = toScreen(v, p);
          i === 0 ? ctx.moveTo(s[0], s[1]) : ctx.lineTo(s[0], s[1]);
        });
        ctx.closePath();
        if (prim.fill) {
          ctx.fillStyle = prim.fill;
          ctx.fill();
        }
        ctx.strokeStyle = prim.stroke;
        ctx.lineWidth = 1.5;
        ctx.stroke();
        break;
      }
      case "polyline": {
        ctx.beginPath();
        ctx.setLineDash(prim.dashed ? [6, 4] : []);
        prim.points.forEach((p, i) => {
          const s = toScreen(v, p);
          i === 0 ? ctx.moveTo(s[0], s[1]) : ctx.lineTo(s[0], s[1]);
        });
        ctx.strokeStyle = prim.color;
        ctx.lineWidth = prim.width;
        ctx.stroke();
        ctx.setLineDash([]);
        break;
      }
      case "points": {
        ctx.fillStyle = prim.color;
        for (const p of prim.points) {
          const s = toScreen(v, p);
          ctx.fillRect(s[0] - prim.size / 2, s[1] - prim.size / 2, prim.size, prim.size);
        }
        break;
      }
      case "marker": {
        const s = toScreen(v, prim.at);
        ctx.fillStyle = prim.color;
        ctx.beginPath();
        ctx.arc(s[0], s[1], prim.size / 2, 0, 2 * Math.PI);
        ctx.fill();
        break;
      }
      case "label": {
        const s = toScreen(v, prim.at);
        ctx.fillStyle = prim.color;
        ctx.font = "13px system-ui, sans-serif";
        ctx.fillText(prim.text, s[0], s[1]);
        break;
      }
    }
  }
}
