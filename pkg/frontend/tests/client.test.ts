import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import {
  EvaluateScheduler,
  RequestRejectedError,
  ServiceClient,
  ServiceUnavailableError,
} from "../src/client.js";
import { defaultParams } from "../src/state.js";
import { fixtureEvaluation, fixtureModel } from "./fixtures.js";

function params() {
  const model = fixtureModel();
  return {
    left: defaultParams(model.scenario.sides.left),
    right: defaultParams(model.scenario.sides.right),
  };
}

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

describe("ServiceClient", () => {
  it("surfaces field-level rejections", async () => {
    const client = new ServiceClient("http://x", async () =>
      jsonResponse({ field: "sides.left", message: "bad value" }, 400),
    );
    await expect(client.evaluate(params())).rejects.toThrowError(RequestRejectedError);
    await expect(client.evaluate(params())).rejects.toMatchObject({
      field: "sides.left",
    });
  });

  it("wraps network failures as service-unavailable", async () => {
    const client = new ServiceClient("http://x", async () => {
      throw new Error("ECONNREFUSED");
    });
    await expect(client.getModel()).rejects.toThrowError(ServiceUnavailableError);
  });
});

describe("EvaluateScheduler", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("debounces a slider burst into one request", async () => {
    let calls = 0;
    const client = new ServiceClient("http://x", async () => {
      calls += 1;
      return jsonResponse(fixtureEvaluation());
    });
    const results: number[] = [];
    const sched = new EvaluateScheduler(
      client,
      (r) => results.push(r.theta_deg),
      () => {},
      100,
    );
    for (let i = 0; i < 8; i++) {
      sched.request(params());
      await vi.advanceTimersByTimeAsync(40); // under the 100 ms debounce
    }
    await vi.advanceTimersByTimeAsync(300);
    expect(calls).toBe(1);
    expect(results).toHaveLength(1);
  });

  it("keeps at most one request in flight and sends only the newest", async () => {
    const resolvers: Array<(r: Response) => void> = [];
    const bodies: string[] = [];
    const client = new ServiceClient("http://x", async (_url, init) => {
      bodies.push(String(init?.body));
      return new Promise<Response>((resolve) => resolvers.push(resolve));
    });
    const seen: number[] = [];
    const sched = new EvaluateScheduler(client, (r) => seen.push(r.theta_deg), () => {}, 50);

    const p = params();
    sched.request({ ...p, left: { ...p.left, alpha_deg: 4.0 } });
    await vi.advanceTimersByTimeAsync(60); // first request goes out
    expect(bodies).toHaveLength(1);

    // three more updates while the first is still pending
    for (const alpha of [5.0, 6.0, 7.0]) {
      sched.request({ ...p, left: { ...p.left, alpha_deg: alpha } });
      await vi.advanceTimersByTimeAsync(60);
    }
    expect(bodies).toHaveLength(1); // nothing else in flight yet

    resolvers[0](jsonResponse({ ...fixtureEvaluation(), theta_deg: 101 }));
    await vi.advanceTimersByTimeAsync(1);
    expect(bodies).toHaveLength(2); // only the newest pending set was sent
    expect(bodies[1]).toContain('"alpha_deg":7');

    resolvers[1](jsonResponse({ ...fixtureEvaluation(), theta_deg: 110 }));
    await vi.advanceTimersByTimeAsync(1);
    // the stale first response was dropped: only the newest result lands
    expect(seen).toEqual([110]);
  });

  it("reports errors for the newest request only", async () => {
    const client = new ServiceClient("http://x", async () => {
      throw new Error("down");
    });
    const errors: unknown[] = [];
    const sched = new EvaluateScheduler(client, () => {}, (e) => errors.push(e), 50);
    sched.request(params());
    await vi.advanceTimersByTimeAsync(120);
    expect(errors).toHaveLength(1);
    expect(errors[0]).toBeInstanceOf(ServiceUnavailableError);
  });
});
