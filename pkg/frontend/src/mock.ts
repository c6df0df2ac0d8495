/**
 * Deterministic mock runner: an offline stand-in for real model bindings.
 *
 * On symbolic image payloads it reproduces the reference scoring rules the
 * orchestrator's own offline stubs use (name hit 0.9, >=2 keyword/tag
 * overlap 0.6, exact-box segmentation, index-tracked VOS), so conformance
 * transcripts can be compared value-for-value, not just schema-for-schema.
 */

import type { Box, GenerateInput, ModelRunner } from "./runner.js";
import { isSymbolic } from "./runner.js";

export const NAME_MATCH_SCORE = 0.9;
export const KEYWORD_MATCH_SCORE = 0.6;
export const KEYWORD_MIN_OVERLAP = 2;

// 1x1 gray PNG, used as the deterministic "web image" payload.
const TINY_PNG =
  "iVBORw0KGgoAAAANSUhEUgAAAAEAAAABCAYAAAAfFcSJAAAADUlEQVR4nGNoaGj4DwAFhAKAtzL1mwAAAABJRU5ErkJggg==";

const SNIPPET_TABLE: Record<string, string> = {
  moutai:
    "Moutai is a well-known Chinese liquor sold in a white glass bottle " +
    "with a prominent red label.",
};

function sortCells(cells: number[][]): number[][] {
  return [...cells].sort((a, b) => a[0] - b[0] || a[1] - b[1]);
}

interface VosState {
  targets: Record<string, number>;
}

export class DeterministicMockRunner implements ModelRunner {
  private loaded = false;
  private readonly loadDelayMs: number;

  constructor(options: { loadDelayMs?: number } = {}) {
    this.loadDelayMs = options.loadDelayMs ?? 0;
  }

  get isLoaded(): boolean {
    return this.loaded;
  }

  async load(): Promise<void> {
    if (this.loadDelayMs > 0) {
      await new Promise((resolve) => setTimeout(resolve, this.loadDelayMs));
    }
    this.loaded = true;
  }

  async generate(input: GenerateInput): Promise<string> {
    if (input.model === "understanding_vision") {
      return JSON.stringify(["round", "small", "smooth", "plain", "solid"]);
    }
    if (input.model === "understanding_text") {
      return "<answer>NONE</answer>";
    }
    // planner: minimal schema-valid decomposition of the prompt's task line
    const task = /Task: (.*)\nOutput:/.exec(input.prompt ?? "")?.[1] ?? "task";
    return `Goal: ${task}\n1. pick up the item /(item)/`;
  }

  async detect(
    term: string,
    keywords: string[],
    image: unknown,
  ): Promise<Box[]> {
    if (!isSymbolic(image)) return [];
    const wanted = new Set(keywords);
    const boxes: Box[] = [];
    for (const rec of image.records) {
      const overlap = rec.tags.filter((t) => wanted.has(t)).length;
      if (rec.detector_name === term) {
        boxes.push({
          x0: rec.box[0],
          y0: rec.box[1],
          x1: rec.box[2],
          y1: rec.box[3],
          score: NAME_MATCH_SCORE,
        });
      } else if (overlap >= KEYWORD_MIN_OVERLAP) {
        boxes.push({
          x0: rec.box[0],
          y0: rec.box[1],
          x1: rec.box[2],
          y1: rec.box[3],
          score: KEYWORD_MATCH_SCORE,
        });
      }
    }
    return boxes;
  }

  async segment(image: unknown, box: number[]): Promise<number[][]> {
    if (!isSymbolic(image)) return [];
    for (const rec of image.records) {
      if (rec.box.every((v, i) => v === box[i])) {
        return sortCells(rec.mask as number[][]);
      }
    }
    return [];
  }

  async vosInit(
    frame: unknown,
    masks: Record<string, number[][]>,
  ): Promise<VosState> {
    const targets: Record<string, number> = {};
    if (isSymbolic(frame)) {
      for (const [term, cells] of Object.entries(masks)) {
        const wanted = new Set(cells.map((c) => `${c[0]},${c[1]}`));
        for (const rec of frame.records) {
          const hit = (rec.mask as number[][]).some((c) =>
            wanted.has(`${c[0]},${c[1]}`),
          );
          if (hit) {
            targets[term] = rec.idx;
            break;
          }
        }
      }
    }
    return { targets };
  }

  async vosStep(
    state: unknown,
    frame: unknown,
  ): Promise<Record<string, number[][]>> {
    const out: Record<string, number[][]> = {};
    if (!isSymbolic(frame)) return out;
    const targets = (state as VosState).targets ?? {};
    const byIdx = new Map(frame.records.map((r) => [r.idx, r]));
    for (const [term, idx] of Object.entries(targets)) {
      const rec = byIdx.get(idx);
      if (rec) out[term] = sortCells(rec.mask as number[][]);
    }
    return out;
  }

  async act(_prompt: string, _image: unknown): Promise<number[]> {
    return [0, 0, 0, 0, 0, 0, 0];
  }

  async verify(
    _prompt: string,
    _before: unknown,
    after: unknown,
  ): Promise<string> {
    // chatty on purpose: the server must normalize this to exactly Yes/No
    if (isSymbolic(after) && after.holding_idx !== null) {
      return "<think>the gripper is holding the target</think> Yes, it is done.";
    }
    return "no — the subtask does not appear complete yet.";
  }

  async imageSearch(_term: string, count: number): Promise<string[]> {
    return Array.from({ length: count }, () => TINY_PNG);
  }

  async snippets(queries: string[], limit: number): Promise<string[]> {
    const out: string[] = [];
    for (const q of queries) {
      const hit = SNIPPET_TABLE[q.toLowerCase()];
      if (hit) out.push(hit);
    }
    return out.slice(0, limit);
  }
}
