/** Adapter process configuration: one model role per process. */

import { z } from "zod";

export const ROLES = [
  "generate",
  "detect",
  "segment",
  "vos",
  "act",
  "verify",
  "imagesearch",
  "snippets",
] as const;
export type Role = (typeof ROLES)[number];

export const adapterConfig = z.object({
  role: z.enum(ROLES),
  model: z.string().min(1),
  device: z.string().default("cpu"),
  port: z.number().int().min(0).max(65535).default(0),
});
export type AdapterConfig = z.infer<typeof adapterConfig>;

/** Endpoints an adapter of a given role serves (health is always on). */
export const ROLE_ENDPOINTS: Record<Role, string[]> = {
  generate: ["/v1/generate"],
  detect: ["/v1/detect"],
  segment: ["/v1/segment"],
  vos: ["/v1/vos/init", "/v1/vos/step"],
  act: ["/v1/act"],
  verify: ["/v1/verify"],
  imagesearch: ["/v1/imagesearch"],
  snippets: ["/v1/snippets"],
};
