import type {
  EvaluateResponse,
  ModelResponse,
  SolveResponse,
  Vec3,
} from "../src/types.js";

export function fixtureModel(): ModelResponse {
  return {
    format: "absf-model/1",
    axial_section: [
      [-26, 0], [26, 0], [34, 22], [14, 49], [0, 51], [-14, 49], [-34, 22],
    ],
    height: 40,
    corridors: [
      { entry: [-20, -17, 0], axis: [0.1219, 0.9925, 0], radius: 4, length: 24 },
      { entry: [20, -17, 0], axis: [-0.1219, 0.9925, 0], radius: 4, length: 24 },
    ],
    scale: 1.5,
    scenario: {
      name: "S1",
      description: "test fixture",
      sides: {
        left: {
          kind: "curved", corridor: 0, alpha_deg: [3, 10], l_ot: 28.5,
          l_it: 42.5, r: 25, slide: [0, 6], bend_roll_deg: 0,
        },
        right: {
          kind: "straight", corridor: 1, alpha_deg: [3, 10], l_ot: [40, 60],
          l_it: 0, r: 0, slide: [0, 6], bend_roll_deg: 0,
        },
      },
      planner: {
        eps_meet_mm: 1.0, theta_band_deg: [105, 115], r_min_mm: 20, bmd_min: 0.1,
      },
      fill_radius_mm: 2.365,
    },
    bmd_axial_slice: {
      origin: [-40, -24],
      spacing: [4, 4],
      values: [
        [0.2, 0.2],
        [0.2, 0.6],
      ],
    },
  };
}

const leftPolyline: Vec3[] = [
  [-19.7, -14.6, 0], [-18.0, 0.0, 0], [-16.6, 13.7, 0], [0.0, 30.0, 0],
  [14.2, 35.3, 0],
];
const rightPolyline: Vec3[] = [
  [19.6, -13.8, 0], [18.0, 2.0, 0], [16.0, 20.0, 0], [14.2, 35.3, 0],
];

export function fixtureEvaluation(): EvaluateResponse {
  return {
    format: "absf-eval/1",
    theta_deg: 110.0,
    tip_gap_mm: 0.02,
    meeting_point_mm: [14.2, 35.3, 0],
    plan: {
      format: "absf-plan/1",
      sides: {},
      theta_deg: 110.0,
      tip_gap: 0.02,
      meeting_point: [14.2, 35.3, 0],
    },
    geometry: {
      left: { tip: [14.2, 35.3, 0], tangent: [0.99, -0.13, 0], polyline: leftPolyline },
      right: { tip: [14.2, 35.3, 0], tangent: [-0.21, 0.98, 0], polyline: rightPolyline },
    },
    constraints: {
      containment_ok: true, corridor_ok: true, curvature_ok: true,
      bmd_ok: true, theta_ok: true, feasible: true, details: [],
    },
    feasible: true,
  };
}

export function fixtureInfeasibleSolve(): SolveResponse {
  return {
    format: "absf-solve/1",
    feasible: false,
    message: "no candidate met the tolerance",
    best_candidate: {
      plan: {
        format: "absf-plan/1", sides: {}, theta_deg: 99.0, tip_gap: 4.2,
        meeting_point: [10, 30, 0],
      },
      geometry: {
        left: { tip: [10, 30, 0], tangent: [1, 0, 0], polyline: leftPolyline },
        right: { tip: [13, 31, 0], tangent: [0, 1, 0], polyline: rightPolyline },
      },
      theta_deg: 99.0,
      tip_gap_mm: 4.2,
    },
    constraints: null,
  };
}
