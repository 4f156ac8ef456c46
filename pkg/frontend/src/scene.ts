/**
 * Scene document schema, mirrored from the studio service.
 *
 * Every number the UI shows comes straight out of these payloads; the client
 * never recomputes physics.
 */

import { z } from "zod";

export const TransformSchema = z.object({
  translation: z.tuple([z.number(), z.number(), z.number()]),
  rotation_wxyz: z.tuple([z.number(), z.number(), z.number(), z.number()]),
});

export const GeometrySchema = z.object({
  vertices: z.array(z.tuple([z.number(), z.number(), z.number()])),
  faces: z.array(z.tuple([z.number().int(), z.number().int(), z.number().int()])),
});

export const PatchSchema = z.object({
  id: z.string(),
  owner: z.string(),
  label: z.string(),
  world_points: z.array(z.tuple([z.number(), z.number(), z.number()])),
});

export const SolutionSchema = z
  .object({
    status: z.string(),
    energy: z.number(),
    constraint_violation: z.number(),
  })
  .passthrough();

export const SceneDocumentSchema = z
  .object({
    links: z.array(
      z.object({
        name: z.string(),
        transform: TransformSchema,
        geometry: GeometrySchema.nullable().optional(),
      }),
    ),
    object: z.object({
      transform: TransformSchema,
      geometry: GeometrySchema.nullable().optional(),
    }),
    patches: z.array(PatchSchema),
    solution: SolutionSchema,
    task: z.string().optional(),
  })
  .passthrough();

export type Transform = z.infer<typeof TransformSchema>;
export type Geometry = z.infer<typeof GeometrySchema>;
export type Patch = z.infer<typeof PatchSchema>;
export type SceneDocument = z.infer<typeof SceneDocumentSchema>;

/** Parse and validate a scene payload; throws ZodError when malformed. */
export function validateScene(payload: unknown): SceneDocument {
  return SceneDocumentSchema.parse(payload);
}

/**
 * Round-trip check: serialize and re-validate without loss of the fields the
 * renderer consumes. Returns the re-parsed document.
 */
export function reserializeScene(scene: SceneDocument): SceneDocument {
  return validateScene(JSON.parse(JSON.stringify(scene)));
}

export const ReportRowSchema = z.object({
  variant: z.string(),
  task: z.string(),
  status: z.string(),
  energy: z.number().nullable(),
  constraint_violation: z.number().nullable(),
  solve_id: z.string().optional(),
  error: z.string().nullable().optional(),
});

export const ReportSchema = z.object({
  rows: z.array(ReportRowSchema),
  ranking: z.array(z.string()),
});

export type ReportRow = z.infer<typeof ReportRowSchema>;
export type Report = z.infer<typeof ReportSchema>;
