export * from "./scene.js";
export * from "./renderTree.js";
export * from "./three.js";
export * from "./api.js";
export * from "./state.js";
