/**
 * HTTP adapter server: mounts the wire-protocol endpoints for one model role
 * and translates between envelopes and the role's ModelRunner.
 *
 * Error contract (mirrors the orchestrator's reference server):
 *   400 + {type:"wire"}    — malformed envelope, bad payload, endpoint mismatch
 *   500 + {type:"backend"} — the runner failed or is still loading (retryable)
 */

import { randomUUID } from "node:crypto";
import express from "express";
import type { Express, Request, Response } from "express";

import { ROLE_ENDPOINTS, type AdapterConfig } from "./config.js";
import {
  errorResponse,
  okResponse,
  requestEnvelope,
  requestPayloads,
  type Endpoint,
} from "./protocol.js";
import { normalizeVerdict, type GenerateInput, type ModelRunner } from "./runner.js";

class WireFault extends Error {}

function send(res: Response, code: number, body: string): void {
  res.status(code).type("application/json").send(body);
}

export interface AdapterServer {
  app: Express;
  /** Resolves when the runner has finished loading. */
  ready: Promise<void>;
}

export function createAdapterServer(
  config: AdapterConfig,
  runner: ModelRunner,
): AdapterServer {
  const app = express();
  app.use(express.text({ type: "*/*", limit: "16mb" }));

  let status: "loading" | "ok" | "degraded" = "loading";
  let loadDetail: string | undefined;
  const ready = runner.load().then(
    () => {
      status = "ok";
    },
    (err: unknown) => {
      status = "degraded";
      loadDetail = err instanceof Error ? err.message : String(err);
    },
  );

  const vosSessions = new Map<string, unknown>();

  async function dispatch(endpoint: Endpoint, payload: unknown): Promise<unknown> {
    switch (endpoint) {
      case "/v1/generate": {
        const p = payload as GenerateInput;
        return { text: await runner.generate(p) };
      }
      case "/v1/detect": {
        const p = payload as { term: string; keywords: string[]; image: unknown };
        return { boxes: await runner.detect(p.term, p.keywords, p.image) };
      }
      case "/v1/segment": {
        const p = payload as { image: unknown; box: number[] };
        return { mask: await runner.segment(p.image, p.box) };
      }
      case "/v1/vos/init": {
        const p = payload as { frame: unknown; masks: Record<string, number[][]> };
        const state = await runner.vosInit(p.frame, p.masks);
        const session = randomUUID().replace(/-/g, "");
        vosSessions.set(session, state);
        return { session };
      }
      case "/v1/vos/step": {
        const p = payload as { session: string; frame: unknown };
        if (!vosSessions.has(p.session)) {
          throw new WireFault(`unknown VOS session '${p.session}'`);
        }
        const state = vosSessions.get(p.session);
        return { masks: await runner.vosStep(state, p.frame) };
      }
      case "/v1/act": {
        const p = payload as { prompt: string; image: unknown };
        return { action: await runner.act(p.prompt, p.image) };
      }
      case "/v1/verify": {
        const p = payload as { prompt: string; before: unknown; after: unknown };
        const raw = await runner.verify(p.prompt, p.before, p.after);
        return { answer: normalizeVerdict(raw) };
      }
      default:
        throw new WireFault(`endpoint ${endpoint} does not accept POST`);
    }
  }

  function mountPost(endpoint: Endpoint): void {
    app.post(endpoint, (req: Request, res: Response) => {
      void (async () => {
        let requestId = randomUUID().replace(/-/g, "");
        try {
          let body: unknown;
          try {
            body = JSON.parse(typeof req.body === "string" ? req.body : "");
          } catch {
            throw new WireFault("request body is not valid JSON");
          }
          if (
            typeof body === "object" &&
            body !== null &&
            typeof (body as { id?: unknown }).id === "string"
          ) {
            requestId = (body as { id: string }).id;
          }
          const env = requestEnvelope.safeParse(body);
          if (!env.success) {
            throw new WireFault(`invalid request envelope: ${env.error.message}`);
          }
          if (env.data.endpoint !== endpoint) {
            throw new WireFault("envelope endpoint does not match URL path");
          }
          const schema = requestPayloads[endpoint as keyof typeof requestPayloads];
          const parsed = schema.safeParse(env.data.payload);
          if (!parsed.success) {
            throw new WireFault(`invalid payload: ${parsed.error.message}`);
          }
          if (status === "loading") {
            throw new Error("model is still loading");
          }
          const payload = await dispatch(endpoint, parsed.data);
          send(res, 200, okResponse(requestId, payload));
        } catch (err) {
          if (err instanceof WireFault) {
            send(res, 400, errorResponse(requestId, {
              type: "wire",
              message: err.message,
            }));
          } else {
            send(res, 500, errorResponse(requestId, {
              type: "backend",
              message: err instanceof Error ? err.message : String(err),
              retryable: true,
            }));
          }
        }
      })();
    });
  }

  app.get("/v1/health", (req: Request, res: Response) => {
    const id = typeof req.query.id === "string" ? req.query.id : randomUUID();
    const payload =
      status === "degraded"
        ? { status, detail: loadDetail ?? "load failed" }
        : { status };
    send(res, 200, okResponse(id, payload));
  });

  function mountGet(
    endpoint: Endpoint,
    handler: (req: Request) => Promise<unknown>,
  ): void {
    app.get(endpoint, (req: Request, res: Response) => {
      void (async () => {
        const id = typeof req.query.id === "string" ? req.query.id : randomUUID();
        try {
          if (status === "loading") throw new Error("model is still loading");
          send(res, 200, okResponse(id, await handler(req)));
        } catch (err) {
          send(res, 500, errorResponse(id, {
            type: "backend",
            message: err instanceof Error ? err.message : String(err),
            retryable: true,
          }));
        }
      })();
    });
  }

  for (const endpoint of ROLE_ENDPOINTS[config.role] as Endpoint[]) {
    if (endpoint === "/v1/imagesearch") {
      mountGet(endpoint, async (req) => {
        const term = typeof req.query.term === "string" ? req.query.term : "";
        const count = Number(req.query.count ?? "6");
        return { images: await runner.imageSearch(term, count) };
      });
    } else if (endpoint === "/v1/snippets") {
      mountGet(endpoint, async (req) => {
        const raw = req.query.q;
        const queries =
          raw === undefined ? [] : Array.isArray(raw) ? raw.map(String) : [String(raw)];
        const limit = Number(req.query.limit ?? "4");
        return { snippets: await runner.snippets(queries, limit) };
      });
    } else {
      mountPost(endpoint);
    }
  }

  return { app, ready };
}
