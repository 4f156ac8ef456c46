import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { reserializeScene, validateScene, ReportSchema } from "../src/scene.js";

const scenePayload = JSON.parse(
  readFileSync(new URL("./fixtures/scene.json", import.meta.url), "utf-8"),
);
const reportPayload = JSON.parse(
  readFileSync(new URL("./fixtures/report.json", import.meta.url), "utf-8"),
);

describe("scene schema", () => {
  it("accepts a service-emitted scene", () => {
    const scene = validateScene(scenePayload);
    expect(scene.links.length).toBe(12);
    expect(scene.patches.length).toBe(6);
    expect(scene.solution.status).toBe("Converged");
  });

  it("rejects malformed documents", () => {
    expect(() => validateScene({ links: "nope" })).toThrow();
    expect(() =>
      validateScene({ ...scenePayload, patches: [{ id: 1 }] }),
    ).toThrow();
    const truncated = structuredClone(scenePayload);
    truncated.links[0].transform.translation = [0, 0];
    expect(() => validateScene(truncated)).toThrow();
  });

  it("round-trips through serialization without loss", () => {
    const scene = validateScene(scenePayload);
    const again = reserializeScene(scene);
    expect(again).toEqual(scene);
  });
});

describe("report schema", () => {
  it("parses the service report and keeps energies exact", () => {
    const report = ReportSchema.parse(reportPayload);
    expect(report.rows[0]!.energy).toBe(reportPayload.rows[0].energy);
    expect(report.ranking).toEqual(["base"]);
  });
});
