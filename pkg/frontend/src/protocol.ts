/**
 * Wire protocol schemas: version-1 JSON envelopes shared with the
 * orchestrator.  Every request is {version, endpoint, id, payload}; every
 * response echoes the request id and carries either a payload or a
 * structured error.
 */

import { z } from "zod";

export const VERSION = 1;

export const ENDPOINTS = [
  "/v1/generate",
  "/v1/detect",
  "/v1/segment",
  "/v1/vos/init",
  "/v1/vos/step",
  "/v1/act",
  "/v1/verify",
  "/v1/imagesearch",
  "/v1/snippets",
  "/v1/health",
] as const;

export type Endpoint = (typeof ENDPOINTS)[number];

export const requestEnvelope = z.object({
  version: z.literal(VERSION),
  endpoint: z.enum(ENDPOINTS),
  id: z.string().min(1),
  payload: z.record(z.unknown()),
});
export type RequestEnvelope = z.infer<typeof requestEnvelope>;

export interface WireErrorBody {
  type: "wire" | "backend";
  message: string;
  retryable?: boolean;
}

export function okResponse(id: string, payload: unknown): string {
  return JSON.stringify({ version: VERSION, id, ok: true, payload });
}

export function errorResponse(id: string, error: WireErrorBody): string {
  return JSON.stringify({ version: VERSION, id, ok: false, error });
}

// --- payload schemas --------------------------------------------------------

export const cell = z.tuple([z.number().int(), z.number().int()]);
export const mask = z.array(cell.or(z.array(z.number().int()).length(2)));

export const symbolicRecord = z.object({
  idx: z.number().int(),
  entity_kind: z.string(),
  vocab_name: z.string(),
  detector_name: z.string().nullable(),
  tags: z.array(z.string()),
  cell: z.array(z.number().int()).length(2),
  box: z.array(z.number().int()).length(4),
  mask: mask,
  held: z.boolean(),
  support_idx: z.number().int().nullable(),
  container_idx: z.number().int().nullable(),
  state: z.string().nullable(),
});
export type SymbolicRecord = z.infer<typeof symbolicRecord>;

export const symbolicImage = z.object({
  kind: z.literal("symbolic"),
  records: z.array(symbolicRecord),
  gripper_cell: z.array(z.number().int()).length(2),
  gripper_height: z.number().int(),
  holding_idx: z.number().int().nullable(),
});
export type SymbolicImage = z.infer<typeof symbolicImage>;

export const rasterImage = z.object({
  kind: z.literal("raster"),
  png_b64: z.string(),
});

export const overlayImage = z.object({
  kind: z.literal("overlay"),
  frame: z.unknown(),
  alpha: z.number(),
  frozen: z.boolean(),
  layers: z.array(
    z.object({ term: z.string(), color: z.string(), mask: mask }),
  ),
});

/** Any observation the orchestrator may send: frame, overlay, crop, or null. */
export const anyImage = z
  .union([symbolicImage, rasterImage, overlayImage, z.record(z.unknown())])
  .nullable();

export const messagePart = z.union([
  z.object({ type: z.literal("text"), text: z.string() }),
  z.object({ type: z.literal("image"), image: anyImage }),
]);
export const message = z.object({
  role: z.string(),
  content: z.array(messagePart),
});

// Request payloads, per endpoint.
export const requestPayloads = {
  "/v1/generate": z
    .object({
      model: z.enum(["planner", "understanding_vision", "understanding_text"]),
      prompt: z.string().optional(),
      messages: z.array(message).optional(),
    })
    .refine((p) => p.prompt !== undefined || p.messages !== undefined, {
      message: "generate needs prompt or messages",
    }),
  "/v1/detect": z.object({
    term: z.string(),
    keywords: z.array(z.string()).default([]),
    image: anyImage,
  }),
  "/v1/segment": z.object({
    image: anyImage,
    box: z.array(z.number().int()).length(4),
    score: z.number().optional(),
  }),
  "/v1/vos/init": z.object({
    frame: anyImage,
    masks: z.record(mask),
  }),
  "/v1/vos/step": z.object({
    session: z.string(),
    frame: anyImage,
  }),
  "/v1/act": z.object({ prompt: z.string(), image: anyImage }),
  "/v1/verify": z.object({
    prompt: z.string(),
    before: anyImage,
    after: anyImage,
  }),
} as const;

// Response payloads, per endpoint (used by the conformance suite too).
export const responsePayloads = {
  "/v1/generate": z.object({ text: z.string() }),
  "/v1/detect": z.object({
    boxes: z.array(
      z.object({
        x0: z.number(),
        y0: z.number(),
        x1: z.number(),
        y1: z.number(),
        score: z.number().min(0).max(1),
      }),
    ),
  }),
  "/v1/segment": z.object({ mask: mask }),
  "/v1/vos/init": z.object({ session: z.string().min(1) }),
  "/v1/vos/step": z.object({ masks: z.record(mask) }),
  "/v1/act": z.object({ action: z.array(z.number()).length(7) }),
  "/v1/verify": z.object({ answer: z.enum(["Yes", "No"]) }),
  "/v1/imagesearch": z.object({ images: z.array(z.string()) }),
  "/v1/snippets": z.object({ snippets: z.array(z.string()) }),
  "/v1/health": z.object({
    status: z.enum(["ok", "loading", "degraded"]),
    detail: z.string().optional(),
  }),
} as const;

export const responseEnvelope = z.discriminatedUnion("ok", [
  z.object({
    version: z.literal(VERSION),
    id: z.string(),
    ok: z.literal(true),
    payload: z.record(z.unknown()),
  }),
  z.object({
    version: z.literal(VERSION),
    id: z.string(),
    ok: z.literal(false),
    error: z.object({
      type: z.enum(["wire", "backend"]),
      message: z.string(),
      retryable: z.boolean().optional(),
    }),
  }),
]);
