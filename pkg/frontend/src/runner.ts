/**
 * The model-runner seam: each adapter role is backed by one runner method.
 * Real bindings (an LLM server, a detector checkpoint, a tracker...) plug in
 * here; the deterministic mock in mock.ts implements the same interface for
 * tests and offline runs.
 *
 * Runners normalize model-specific quirks (thinking tokens, markdown fences,
 * chatty verifier answers) BEFORE the wire layer, so clients always see
 * clean protocol payloads.
 */

import type { SymbolicImage } from "./protocol.js";

export interface Box {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
  score: number;
}

export interface GenerateInput {
  model: "planner" | "understanding_vision" | "understanding_text";
  prompt?: string;
  messages?: unknown[];
}

export interface ModelRunner {
  /** Resolves once weights are loaded; health reports loading until then. */
  load(): Promise<void>;

  generate(input: GenerateInput): Promise<string>;
  detect(term: string, keywords: string[], image: unknown): Promise<Box[]>;
  segment(image: unknown, box: number[]): Promise<number[][]>;
  vosInit(frame: unknown, masks: Record<string, number[][]>): Promise<unknown>;
  vosStep(state: unknown, frame: unknown): Promise<Record<string, number[][]>>;
  act(prompt: string, image: unknown): Promise<number[]>;
  /** May return raw model text; the server normalizes it to Yes/No. */
  verify(prompt: string, before: unknown, after: unknown): Promise<string>;
  imageSearch(term: string, count: number): Promise<string[]>;
  snippets(queries: string[], limit: number): Promise<string[]>;
}

/** Collapse an arbitrary verifier reply to exactly "Yes" or "No". */
export function normalizeVerdict(raw: string): "Yes" | "No" {
  const cleaned = raw
    .replace(/<think>[\s\S]*?<\/think>/gi, "")
    .trim()
    .toLowerCase();
  return cleaned.startsWith("yes") || /\byes\b/.test(cleaned.slice(0, 40))
    ? "Yes"
    : "No";
}

export function isSymbolic(image: unknown): image is SymbolicImage {
  return (
    typeof image === "object" &&
    image !== null &&
    (image as { kind?: string }).kind === "symbolic"
  );
}
