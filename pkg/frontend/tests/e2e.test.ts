// End-to-end smoke against a real service process: start a session, answer
// rounds to an outcome banner, and diff every displayed score against the
// inspection payload to prove the UI never recomputes numbers.

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { Window } from "happy-dom";

import { Client } from "../src/api.js";
import { initApp, type App } from "../src/app.js";

const PORT = 8941;
const BASE = `http://127.0.0.1:${PORT}`;

let workDir: string;
let server: ChildProcess | null = null;

function cli(args: string[]): void {
  const result = spawnSync("python3", ["-m", "magus.cli", ...args],
                           { encoding: "utf-8" });
  if (result.status !== 0) {
    throw new Error(`cli ${args[0]} failed: ${result.stderr}`);
  }
}

async function waitForHealth(timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${BASE}/api/health`);
      if (resp.ok) {
        return;
      }
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error("service never became healthy");
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "magus-e2e-"));
  const data = join(workDir, "data");
  cli(["gen-synthetic", "--users", "40", "--items", "48", "--words", "18",
       "--wpi", "3", "--events", "40", "--seed", "5", "--out", data]);
  cli(["build-graph", "--catalog", data, "--out", join(workDir, "graph.bin")]);
  cli(["train-scorer", "--kind", "matfact", "--catalog", data, "--epochs", "8",
       "--d", "16", "--seed", "1", "--out", join(workDir, "model.bin")]);
  server = spawn("python3", [
    "-m", "magus.cli", "serve",
    "--graph", join(workDir, "graph.bin"),
    "--scorer", join(workDir, "model.bin"),
    "--catalog", data,
    "--port", "9",           // bogus on purpose: MAGUS_PORT must win
    "--n", "3", "--kmax", "6",
  ], { env: { ...process.env, MAGUS_PORT: String(PORT) }, stdio: "ignore" });
  await waitForHealth();
}, 60_000);

afterAll(() => {
  server?.kill();
  rmSync(workDir, { recursive: true, force: true });
});

function dom(): Document {
  const window = new Window();
  window.document.body.innerHTML = '<div id="app"></div>';
  return window.document as unknown as Document;
}

async function waitFor<T>(probe: () => T | null, what: string,
                          timeoutMs = 10_000): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    const got = probe();
    if (got !== null) {
      return got;
    }
    await new Promise((resolve) => setTimeout(resolve, 50));
  }
  throw new Error(`timed out waiting for ${what}`);
}

interface NodeFacts {
  kind: string;
  words: string[];
}

async function nodeFacts(client: Client, sessionId: string): Promise<Map<number, NodeFacts>> {
  const state = await client.state(sessionId, 100_000);
  return new Map(state.nodes.map((n) => [n.node, { kind: n.kind, words: n.words }]));
}

async function diffDisplayedScores(doc: Document, app: App, client: Client): Promise<number> {
  // render from a fresh poll, then independently fetch the payload and
  // compare every number the page shows, verbatim
  await app.pollState();
  const payload = await client.state(app.flow!.sessionId, 12);
  const rows = Array.from(doc.querySelectorAll(".score-row")) as HTMLElement[];
  expect(rows.length).toBe(payload.nodes.length);
  let checked = 0;
  payload.nodes.forEach((node, i) => {
    expect(rows[i].dataset.node).toBe(String(node.node));
    expect(rows[i].dataset.score).toBe(String(node.score));
    const cell = rows[i].querySelector(".cell-score")!;
    expect(cell.textContent).toBe(String(node.score));
    const visited = rows[i].querySelector(".cell-visited")!;
    expect(visited.textContent).toBe(node.visited ? "visited" : "");
    checked += 1;
  });
  return checked;
}

describe("feedback console end to end", () => {
  it("bad host shows a retryable error banner without crashing", async () => {
    const doc = dom();
    const app = await initApp(doc, new Client("http://127.0.0.1:9"), { pollMs: 60_000 });
    const banner = doc.querySelector(".banner.error");
    expect(banner).not.toBeNull();
    expect(banner!.textContent).toContain("service unreachable");
    app.dispose();
  });

  it("runs a full session to an outcome banner with verbatim scores", async () => {
    const doc = dom();
    const client = new Client(BASE);
    const app = await initApp(doc, client, { pollMs: 60_000 });

    const select = doc.getElementById("user-select") as HTMLSelectElement;
    expect(select.options.length).toBeGreaterThan(0);
    (doc.getElementById("start") as HTMLButtonElement).click();
    await waitFor(() => doc.querySelector(".card"), "round 1 cards");

    const flow = app.flow!;
    expect(flow.round).toBe(1);
    expect(doc.querySelectorAll(".card").length).toBe(3);
    const submit = doc.getElementById("submit") as HTMLButtonElement;
    expect(submit.disabled).toBe(true); // nothing answered yet

    const facts = await nodeFacts(client, flow.sessionId);
    const targetWords = app.targets.map((t) => new Set(t.words));
    const targetLabels = new Set(app.targets.map((t) => t.item_id));
    let scoreChecks = await diffDisplayedScores(doc, app, client);

    let rounds = 0;
    while (app.flow!.outcome === "pending" && rounds < 8) {
      rounds += 1;
      let yesUsed = false;
      for (const entry of [...app.flow!.entries].sort((a, b) => a.pos - b.pos)) {
        const fact = facts.get(entry.node)!;
        let eligible: boolean;
        if (fact.kind === "item") {
          const label = entry.display.replace(/^item /, "").split(":")[0];
          eligible = targetLabels.has(label);
        } else {
          eligible = targetWords.some((tw) => fact.words.every((w) => tw.has(w)));
        }
        const want = eligible && !yesUsed ? "yes" : "no";
        if (want === "yes") {
          yesUsed = true;
        }
        const card = doc.querySelector(`.card[data-node="${entry.node}"]`)!;
        (card.querySelector(`button[data-response="${want}"]`) as HTMLButtonElement).click();
      }
      const submitBtn = doc.getElementById("submit") as HTMLButtonElement;
      expect(submitBtn.disabled).toBe(false);
      submitBtn.click();
      await waitFor(
        () => (app.flow!.round > rounds || app.flow!.outcome !== "pending" ? true : null),
        `round ${rounds} result`);
      if (app.flow!.outcome === "pending") {
        scoreChecks += await diffDisplayedScores(doc, app, client);
      }
    }

    expect(rounds).toBeGreaterThanOrEqual(1);
    const banner = await waitFor(() => doc.querySelector(".banner"), "outcome banner");
    const outcome = (banner as HTMLElement).dataset.outcome;
    expect(["success", "exhausted"]).toContain(outcome);
    expect(scoreChecks).toBeGreaterThan(0);
    expect(doc.querySelectorAll(".history-round").length).toBe(rounds);
    app.dispose();
  }, 60_000);

  it("renders a single card when the config form asks for N=1", async () => {
    const doc = dom();
    const app = await initApp(doc, new Client(BASE), { pollMs: 60_000 });
    (doc.getElementById("n-input") as HTMLInputElement).value = "1";
    (doc.getElementById("start") as HTMLButtonElement).click();
    await waitFor(() => doc.querySelector(".card"), "cards");
    expect(doc.querySelectorAll(".card").length).toBe(1);
    app.dispose();
  }, 30_000);

  it("freezes the inspector with a stale badge once the session closes", async () => {
    const doc = dom();
    const client = new Client(BASE);
    const app = await initApp(doc, client, { pollMs: 60_000 });
    (doc.getElementById("start") as HTMLButtonElement).click();
    await waitFor(() => doc.querySelector(".card"), "cards");
    const sid = app.flow!.sessionId;
    await app.pollState();
    expect(doc.querySelector(".stale-badge")).toBeNull();
    await client.remove(sid); // close behind the UI's back
    await app.pollState();
    expect(doc.querySelector(".stale-badge")).not.toBeNull();
    expect(doc.querySelectorAll(".score-row").length).toBeGreaterThan(0); // frozen rows
    app.dispose();
  }, 30_000);
});
