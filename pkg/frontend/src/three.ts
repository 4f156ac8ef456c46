/**
 * three.js adapter: converts the serializable render tree into an Object3D
 * graph. Kept separate from tree construction so tests can snapshot the tree
 * without a WebGL context.
 */

import {
  BufferAttribute,
  BufferGeometry,
  Group,
  Mesh,
  MeshStandardMaterial,
  Points,
  PointsMaterial,
  Quaternion,
} from "three";

import type { RenderNode, RenderTree } from "./renderTree.js";

function applyTransform(object: Group | Mesh | Points, node: RenderNode): void {
  const [x, y, z] = node.transform.translation;
  const [w, qx, qy, qz] = node.transform.rotation_wxyz;
  object.position.set(x, y, z);
  object.quaternion.copy(new Quaternion(qx, qy, qz, w)); // three uses xyzw
}

function meshFor(node: RenderNode): Mesh {
  const geometry = new BufferGeometry();
  const g = node.geometry;
  if (g) {
    const positions = new Float32Array(g.vertices.flat());
    const indices = new Uint32Array(g.faces.flat());
    geometry.setAttribute("position", new BufferAttribute(positions, 3));
    geometry.setIndex(new BufferAttribute(indices, 1));
    geometry.computeVertexNormals();
  }
  const material = new MeshStandardMaterial({ color: node.color });
  const mesh = new Mesh(geometry, material);
  mesh.name = node.name;
  applyTransform(mesh, node);
  return mesh;
}

function markersFor(node: RenderNode): Points {
  const geometry = new BufferGeometry();
  const positions = new Float32Array(node.markers.flat());
  geometry.setAttribute("position", new BufferAttribute(positions, 3));
  const material = new PointsMaterial({ color: node.color, size: 0.004 });
  const points = new Points(geometry, material);
  points.name = node.name;
  return points;
}

/** Build the drawable group; one child object per render-tree node. */
export function toThreeGroup(tree: RenderTree): Group {
  const group = new Group();
  group.name = tree.taskName || "scene";
  for (const node of tree.nodes) {
    group.add(node.kind === "patch-markers" ? markersFor(node) : meshFor(node));
  }
  return group;
}
