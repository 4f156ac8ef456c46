/**
 * UI scene state: loaded scene, pending edit, comparison slots, energy table.
 *
 * Pure state container with validation — no DOM, no rendering — so the whole
 * workflow is unit-testable.
 */

import type { Report, ReportRow, SceneDocument } from "./scene.js";
import type { JointEdit } from "./api.js";

export const TRANSLATION_LIMIT_M = 0.03; // ±30 mm sliders
export const ROTATION_LIMIT_RAD = Math.PI / 2; // ±90° sliders

export interface ComparisonSlot {
  solveId: string;
  variantId: string;
  scene: SceneDocument;
}

export interface EnergyTableRow {
  variant: string;
  task: string;
  status: string;
  /** exactly the service-reported value; null when unsolved */
  energy: number | null;
  constraintViolation: number | null;
}

export class UiSceneState {
  scene: SceneDocument | null = null;
  selectedVariant = "base";
  selectedTask: string | null = null;
  pendingEdit: JointEdit | null = null;
  slots: [ComparisonSlot | null, ComparisonSlot | null] = [null, null];
  solveInFlight = false;
  queued = false;
  /** joint names of the uploaded model, set by the host from its URDF */
  private knownJoints: Set<string> | null = null;

  loadScene(scene: SceneDocument): void {
    this.scene = scene;
  }

  setKnownJoints(names: Iterable<string>): void {
    this.knownJoints = new Set(names);
  }

  linkNames(): string[] {
    return this.scene ? this.scene.links.map((l) => l.name) : [];
  }

  /**
   * Stage an edit. Rejects joints absent from the loaded model and slider
   * values outside the allowed ±30 mm / ±90° ranges. Without an explicit
   * joint list, joints are matched against the scene's `<joint>_link` naming.
   */
  stageEdit(edit: JointEdit): void {
    if (!this.scene) throw new Error("no scene loaded");
    const known = this.knownJoints
      ? this.knownJoints.has(edit.joint)
      : this.linkNames().includes(`${edit.joint}_link`);
    if (!known) {
      throw new Error(`unknown joint '${edit.joint}'`);
    }
    for (const value of edit.translation ?? []) {
      if (Math.abs(value) > TRANSLATION_LIMIT_M) {
        throw new Error(`translation ${value} m exceeds ±${TRANSLATION_LIMIT_M} m`);
      }
    }
    for (const value of edit.rotation_rpy ?? []) {
      if (Math.abs(value) > ROTATION_LIMIT_RAD) {
        throw new Error(`rotation ${value} rad exceeds ±${ROTATION_LIMIT_RAD} rad`);
      }
    }
    this.pendingEdit = edit;
  }

  setSlot(index: 0 | 1, slot: ComparisonSlot | null): void {
    this.slots[index] = slot;
  }

  /** Side-by-side mode only when both slots are filled. */
  comparisonMode(): "single" | "side-by-side" {
    return this.slots[0] && this.slots[1] ? "side-by-side" : "single";
  }

  /** Energy difference between slots, straight from solution payloads. */
  energyDelta(): number | null {
    const [a, b] = this.slots;
    if (!a || !b) return null;
    return a.scene.solution.energy - b.scene.solution.energy;
  }
}

/** Rows for the comparison table, values copied verbatim from /report. */
export function energyTable(report: Report): EnergyTableRow[] {
  return report.rows.map((row: ReportRow) => ({
    variant: row.variant,
    task: row.task,
    status: row.status,
    energy: row.energy,
    constraintViolation: row.constraint_violation,
  }));
}
