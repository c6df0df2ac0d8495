/** CLI entry: `node dist/src/index.js <config.json>` starts one adapter. */

import { readFileSync } from "node:fs";

import { adapterConfig } from "./config.js";
import { DeterministicMockRunner } from "./mock.js";
import { createAdapterServer } from "./server.js";

function main(): void {
  const path = process.argv[2];
  if (!path) {
    console.error("usage: index.js <config.json>");
    process.exit(2);
  }
  let config;
  try {
    config = adapterConfig.parse(JSON.parse(readFileSync(path, "utf8")));
  } catch (err) {
    console.error(`invalid config: ${err instanceof Error ? err.message : err}`);
    process.exit(2);
  }

  // The mock runner is the only binding shipped here; real model bindings
  // implement ModelRunner and are selected by the `model` field.
  const runner = new DeterministicMockRunner();
  const { app, ready } = createAdapterServer(config, runner);
  const server = app.listen(config.port, () => {
    const address = server.address();
    const port = typeof address === "object" && address ? address.port : config.port;
    console.log(
      `adapter role=${config.role} model=${config.model} ` +
        `device=${config.device} listening on :${port}`,
    );
  });
  void ready.then(() => console.log("model loaded; health is ok"));
}

main();
