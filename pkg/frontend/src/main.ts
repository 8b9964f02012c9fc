// Browser bootstrap: read the runtime config for the service base URL,
// then hand the page over to the app.

import { Client } from "./api.js";
import { initApp } from "./app.js";

async function baseUrl(): Promise<string> {
  try {
    const resp = await fetch("./config.json");
    if (resp.ok) {
      const config = await resp.json() as { baseUrl?: string };
      if (config.baseUrl) {
        return config.baseUrl;
      }
    }
  } catch {
    // same-origin fallback below
  }
  return "";
}

void (async () => {
  const client = new Client(await baseUrl());
  await initApp(document, client);
})();
