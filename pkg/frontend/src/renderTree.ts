/**
 * Deterministic, serializable render tree built from a scene document.
 *
 * The tree is the single source of truth for what gets drawn: the three.js
 * adapter converts it 1:1, and snapshot tests serialize it directly.
 */

import type { Geometry, Patch, SceneDocument, Transform } from "./scene.js";

export interface RenderNode {
  kind: "link" | "object" | "patch-markers";
  name: string;
  transform: Transform;
  /** hex color, deterministic per patch label */
  color: string;
  vertexCount: number;
  faceCount: number;
  geometry: Geometry | null;
  /** marker positions in world coordinates (patch nodes only) */
  markers: Array<[number, number, number]>;
  label?: string;
}

export interface RenderTree {
  nodes: RenderNode[];
  taskName: string;
  energy: number;
  constraintViolation: number;
  status: string;
}

const IDENTITY: Transform = {
  translation: [0, 0, 0],
  rotation_wxyz: [1, 0, 0, 0],
};

/** FNV-1a over the label, folded into a stable 24-bit color. */
export function labelColor(label: string): string {
  let h = 0x811c9dc5;
  for (let i = 0; i < label.length; i++) {
    h ^= label.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  // keep colors bright enough to read against a dark viewport
  const r = 0x40 + (h & 0xbf);
  const g = 0x40 + ((h >>> 8) & 0xbf);
  const b = 0x40 + ((h >>> 16) & 0xbf);
  return `#${r.toString(16).padStart(2, "0")}${g.toString(16).padStart(2, "0")}${b
    .toString(16)
    .padStart(2, "0")}`;
}

function geometryCounts(g: Geometry | null | undefined): [number, number] {
  if (!g) return [0, 0];
  return [g.vertices.length, g.faces.length];
}

export function buildRenderTree(scene: SceneDocument): RenderTree {
  const nodes: RenderNode[] = [];
  for (const link of scene.links) {
    const geometry = link.geometry ?? null;
    const [v, f] = geometryCounts(geometry);
    nodes.push({
      kind: "link",
      name: link.name,
      transform: link.transform,
      color: labelColor(link.name),
      vertexCount: v,
      faceCount: f,
      geometry,
      markers: [],
    });
  }
  const objGeometry = scene.object.geometry ?? null;
  const [ov, of_] = geometryCounts(objGeometry);
  nodes.push({
    kind: "object",
    name: "object",
    transform: scene.object.transform,
    color: labelColor("object"),
    vertexCount: ov,
    faceCount: of_,
    geometry: objGeometry,
    markers: [],
  });
  const patches = [...scene.patches].sort((a, b) => a.id.localeCompare(b.id));
  for (const patch of patches) {
    nodes.push(patchNode(patch));
  }
  return {
    nodes,
    taskName: scene.task ?? "",
    energy: scene.solution.energy,
    constraintViolation: scene.solution.constraint_violation,
    status: scene.solution.status,
  };
}

function patchNode(patch: Patch): RenderNode {
  return {
    kind: "patch-markers",
    name: patch.id,
    transform: IDENTITY,
    color: labelColor(patch.label),
    vertexCount: 0,
    faceCount: 0,
    geometry: null,
    markers: patch.world_points.map((p) => [p[0], p[1], p[2]]),
    label: patch.label,
  };
}

/**
 * Max absolute difference between the transforms of two trees, matched by
 * node name. Infinity when the trees disagree structurally.
 */
export function maxTransformDelta(a: RenderTree, b: RenderTree): number {
  const byName = new Map(b.nodes.map((n) => [n.name, n]));
  let worst = 0;
  for (const node of a.nodes) {
    const other = byName.get(node.name);
    if (!other) return Infinity;
    const va = [...node.transform.translation, ...node.transform.rotation_wxyz];
    const vb = [...other.transform.translation, ...other.transform.rotation_wxyz];
    for (let i = 0; i < va.length; i++) {
      worst = Math.max(worst, Math.abs((va[i] as number) - (vb[i] as number)));
    }
  }
  return worst;
}
