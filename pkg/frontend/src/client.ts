// Service client with debounced, latest-wins evaluation requests.

import type {
  EvaluateResponse,
  InjectResponse,
  ModelResponse,
  ParamValues,
  PlanWire,
  SimulateResponse,
  SolveResponse,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceUnavailableError extends Error {}

export class RequestRejectedError extends Error {
  constructor(public field: string, message: string) {
    super(message);
  }
}

async function parseOrThrow<T>(resp: Response): Promise<T> {
  if (resp.ok) {
    return (await resp.json()) as T;
  }
  let field = "";
  let message = `service returned ${resp.status}`;
  try {
    const body = (await resp.json()) as { field?: string; message?: string };
    field = body.field ?? "";
    message = body.message ?? message;
  } catch {
    // non-JSON error body; keep the status message
  }
  throw new RequestRejectedError(field, message);
}

export class ServiceClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchImpl(`${this.baseUrl}${path}`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
      });
    } catch (err) {
      throw new ServiceUnavailableError(String(err));
    }
    return parseOrThrow<T>(resp);
  }

  async getModel(): Promise<ModelResponse> {
    let resp: Response;
    try {
      resp = await this.fetchImpl(`${this.baseUrl}/model`);
    } catch (err) {
      throw new ServiceUnavailableError(String(err));
    }
    return parseOrThrow<ModelResponse>(resp);
  }

  evaluate(sides: { left: ParamValues; right: ParamValues }): Promise<EvaluateResponse> {
    return this.post<EvaluateResponse>("/evaluate", { sides });
  }

  solve(body: Record<string, unknown> = {}): Promise<SolveResponse> {
    return this.post<SolveResponse>("/solve", body);
  }

  simulate(plan: PlanWire, repeats = 1, seed = 0): Promise<SimulateResponse> {
    return this.post<SimulateResponse>("/simulate", { plan, repeats, seed });
  }

  inject(plan: PlanWire, dtS = 5.0): Promise<InjectResponse> {
    return this.post<InjectResponse>("/inject", { plan, dt_s: dtS });
  }
}

/**
 * Debounces slider input and keeps at most one /evaluate in flight.
 *
 * While a request is pending, newer parameter sets replace each other and
 * only the newest is sent once the active request settles; responses for
 * stale parameter sets are dropped (latest wins).
 */
export class EvaluateScheduler {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inFlight = false;
  private pending: { left: ParamValues; right: ParamValues } | null = null;
  private seq = 0;
  public requestsSent = 0;

  constructor(
    private client: ServiceClient,
    private onResult: (r: EvaluateResponse) => void,
    private onError: (e: unknown) => void,
    private delayMs = 100,
  ) {}

  request(sides: { left: ParamValues; right: ParamValues }): void {
    this.pending = sides;
    if (this.timer !== null) {
      clearTimeout(this.timer);
    }
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.flush();
    }, this.delayMs);
  }

  private async flush(): Promise<void> {
    if (this.inFlight || this.pending === null) {
      return;
    }
    const sides = this.pending;
    this.pending = null;
    const ticket = ++this.seq;
    this.inFlight = true;
    this.requestsSent += 1;
    try {
      const result = await this.client.evaluate(sides);
      // stale if a newer parameter set arrived while this was in flight
      if (ticket === this.seq && this.pending === null) {
        this.onResult(result);
      }
    } catch (err) {
      if (ticket === this.seq && this.pending === null) {
        this.onError(err);
      }
    } finally {
      this.inFlight = false;
      if (this.pending !== null) {
        void this.flush();
      }
    }
  }
}
