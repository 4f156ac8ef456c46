/**
 * Typed client for the studio HTTP API.
 *
 * The fetch implementation is injected so tests (and non-browser hosts) can
 * supply their own. Network failures are retried three times with backoff;
 * HTTP error statuses are surfaced as structured results, never retried
 * blindly (a 409 means a solve is queued behind another, not a fault).
 */

import { Report, ReportSchema, SceneDocument, validateScene } from "./scene.js";

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export interface JointEdit {
  joint: string;
  translation?: [number, number, number];
  rotation_rpy?: [number, number, number];
}

export interface SolveRequest {
  variant?: string;
  task: string;
  seed?: number;
}

export type SolveOutcome =
  | { kind: "solved"; solveId: string; scene: SceneDocument; solution: Record<string, unknown> }
  | { kind: "queued" }
  | { kind: "solver-failure"; diagnostics: unknown }
  | { kind: "error"; status: number; detail: unknown };

export interface RequestLogEntry {
  method: string;
  url: string;
  body?: unknown;
}

export interface ClientOptions {
  fetchFn?: FetchLike;
  retries?: number;
  backoffMs?: number;
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

export class StudioClient {
  private readonly fetchFn: FetchLike;
  private readonly retries: number;
  private readonly backoffMs: number;
  private readonly sleep: (ms: number) => Promise<void>;
  /** every request body sent, in order — shown verbatim in the UI log */
  readonly requestLog: RequestLogEntry[] = [];

  constructor(
    readonly baseUrl: string,
    options: ClientOptions = {},
  ) {
    this.fetchFn = options.fetchFn ?? (globalThis.fetch as unknown as FetchLike);
    this.retries = options.retries ?? 3;
    this.backoffMs = options.backoffMs ?? 250;
    this.sleep = options.sleep ?? defaultSleep;
  }

  private async request(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<{ status: number; payload: unknown }> {
    const url = `${this.baseUrl}${path}`;
    this.requestLog.push({ method, url, body });
    let lastError: unknown;
    for (let attempt = 0; attempt <= this.retries; attempt++) {
      try {
        const response = await this.fetchFn(url, {
          method,
          headers: { "content-type": "application/json" },
          body: body === undefined ? undefined : JSON.stringify(body),
        });
        return { status: response.status, payload: await response.json() };
      } catch (error) {
        lastError = error; // transport failure: retry with backoff
        if (attempt < this.retries) {
          await this.sleep(this.backoffMs * 2 ** attempt);
        }
      }
    }
    throw lastError;
  }

  async createDesign(body: {
    urdf: string;
    patches?: unknown[];
    coupling?: unknown;
  }): Promise<string> {
    const { status, payload } = await this.request("POST", "/api/designs", body);
    if (status !== 201) throw new Error(`create design failed (${status})`);
    return (payload as { id: string }).id;
  }

  async addVariant(designId: string, edits: JointEdit[], label = ""): Promise<string> {
    const { status, payload } = await this.request(
      "POST",
      `/api/designs/${designId}/variants`,
      { edits, label },
    );
    if (status !== 201) {
      throw new Error(`variant rejected (${status}): ${JSON.stringify(payload)}`);
    }
    return (payload as { id: string }).id;
  }

  async addTask(designId: string, task: Record<string, unknown>): Promise<string> {
    const { status, payload } = await this.request(
      "POST",
      `/api/designs/${designId}/tasks`,
      task,
    );
    if (status !== 201) throw new Error(`task rejected (${status})`);
    return (payload as { id: string }).id;
  }

  async solve(designId: string, request: SolveRequest): Promise<SolveOutcome> {
    const { status, payload } = await this.request(
      "POST",
      `/api/designs/${designId}/solve`,
      request,
    );
    if (status === 200) {
      const p = payload as {
        id: string;
        scene: unknown;
        solution: Record<string, unknown>;
      };
      return {
        kind: "solved",
        solveId: p.id,
        scene: validateScene(p.scene),
        solution: p.solution,
      };
    }
    if (status === 409) return { kind: "queued" };
    if (status === 422) return { kind: "solver-failure", diagnostics: payload };
    return { kind: "error", status, detail: payload };
  }

  async report(designId: string): Promise<Report> {
    const { status, payload } = await this.request(
      "GET",
      `/api/designs/${designId}/report`,
    );
    if (status !== 200) throw new Error(`report failed (${status})`);
    return ReportSchema.parse(payload);
  }

  async scene(designId: string, solveId: string): Promise<SceneDocument> {
    const { status, payload } = await this.request(
      "GET",
      `/api/designs/${designId}/scenes/${solveId}`,
    );
    if (status !== 200) throw new Error(`scene fetch failed (${status})`);
    return validateScene(payload);
  }

  /**
   * The edit loop in one call: register the edit as a new variant, then
   * solve it against the task. A 409 or 422 comes back as a structured
   * outcome so the caller keeps its current scene.
   */
  async submitEditAndResolve(
    designId: string,
    edit: JointEdit,
    task: string,
    seed = 0,
  ): Promise<SolveOutcome & { variantId?: string }> {
    const variantId = await this.addVariant(designId, [edit]);
    const outcome = await this.solve(designId, { variant: variantId, task, seed });
    return { ...outcome, variantId };
  }
}
