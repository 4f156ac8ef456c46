import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { FetchLike, StudioClient } from "../src/api.js";

const scenePayload = JSON.parse(
  readFileSync(new URL("./fixtures/scene.json", import.meta.url), "utf-8"),
);
const reportPayload = JSON.parse(
  readFileSync(new URL("./fixtures/report.json", import.meta.url), "utf-8"),
);

const noSleep = () => Promise.resolve();

function respond(status: number, payload: unknown) {
  return { ok: status < 400, status, json: () => Promise.resolve(payload) };
}

describe("StudioClient", () => {
  it("retries transport failures with backoff, then succeeds", async () => {
    let attempts = 0;
    const waits: number[] = [];
    const fetchFn: FetchLike = async () => {
      attempts++;
      if (attempts <= 2) throw new Error("connection refused");
      return respond(200, reportPayload);
    };
    const client = new StudioClient("http://svc", {
      fetchFn,
      backoffMs: 10,
      sleep: async (ms) => waits.push(ms),
    });
    const report = await client.report("d1");
    expect(attempts).toBe(3);
    expect(waits).toEqual([10, 20]);
    expect(report.rows[0]!.energy).toBe(reportPayload.rows[0].energy);
  });

  it("surfaces the failure after exhausting retries", async () => {
    let attempts = 0;
    const fetchFn: FetchLike = async () => {
      attempts++;
      throw new Error("network down");
    };
    const client = new StudioClient("http://svc", {
      fetchFn,
      retries: 3,
      sleep: noSleep,
    });
    await expect(client.report("d1")).rejects.toThrow("network down");
    expect(attempts).toBe(4); // initial + 3 retries
  });

  it("maps 409 to a queued outcome without re-requesting", async () => {
    let solveCalls = 0;
    const fetchFn: FetchLike = async (url) => {
      if (url.endsWith("/solve")) {
        solveCalls++;
        return respond(409, { detail: "busy" });
      }
      throw new Error(`unexpected ${url}`);
    };
    const client = new StudioClient("http://svc", { fetchFn, sleep: noSleep });
    const outcome = await client.solve("d1", { task: "grasp0" });
    expect(outcome.kind).toBe("queued");
    expect(solveCalls).toBe(1);
  });

  it("maps 422 to solver diagnostics", async () => {
    const fetchFn: FetchLike = async () =>
      respond(422, { kind: "NumericalFailure", solution: {} });
    const client = new StudioClient("http://svc", { fetchFn, sleep: noSleep });
    const outcome = await client.solve("d1", { task: "grasp0" });
    expect(outcome).toMatchObject({
      kind: "solver-failure",
      diagnostics: { kind: "NumericalFailure" },
    });
  });

  it("validates solved scenes and logs every request body", async () => {
    const fetchFn: FetchLike = async (url) => {
      if (url.endsWith("/variants")) return respond(201, { id: "variant-1" });
      if (url.endsWith("/solve")) {
        return respond(200, { id: "solve-1", scene: scenePayload, solution: scenePayload.solution });
      }
      throw new Error(`unexpected ${url}`);
    };
    const client = new StudioClient("http://svc", { fetchFn, sleep: noSleep });
    const edit = { joint: "thumb_mount", translation: [0, 0, 0] as [number, number, number] };
    const outcome = await client.submitEditAndResolve("d1", edit, "grasp0", 7);
    expect(outcome.kind).toBe("solved");
    expect(outcome.variantId).toBe("variant-1");
    expect(client.requestLog.map((e) => e.url)).toEqual([
      "http://svc/api/designs/d1/variants",
      "http://svc/api/designs/d1/solve",
    ]);
    expect(client.requestLog[0]!.body).toEqual({ edits: [edit], label: "" });
    expect(client.requestLog[1]!.body).toEqual({
      variant: "variant-1",
      task: "grasp0",
      seed: 7,
    });
  });

  it("rejects a solved payload whose scene is malformed", async () => {
    const fetchFn: FetchLike = async () =>
      respond(200, { id: "solve-1", scene: { links: "bad" }, solution: {} });
    const client = new StudioClient("http://svc", { fetchFn, sleep: noSleep });
    await expect(client.solve("d1", { task: "grasp0" })).rejects.toThrow();
  });
});
