// Wires the flow, the client, and the renderers onto a root element.
// Exported separately from main.ts so tests can drive it against a live
// service with a synthetic DOM.

import { ApiError, Client, type ResponseKind, type StateResponse, type TargetInfo } from "./api.js";
import { SessionFlow } from "./flow.js";
import {
  el,
  renderBanner,
  renderCards,
  renderError,
  renderHistory,
  renderInspector,
  renderTargets,
} from "./render.js";

export interface AppOptions {
  pollMs?: number;
  topM?: number;
}

export class App {
  readonly root: HTMLElement;
  flow: SessionFlow | null = null;
  targets: TargetInfo[] = [];
  lastState: StateResponse | null = null;
  stale = false;
  private doc: Document;
  private poller: ReturnType<typeof setInterval> | null = null;
  private readonly pollMs: number;
  private readonly topM: number;

  constructor(doc: Document, readonly client: Client, root: HTMLElement,
              options: AppOptions = {}) {
    this.doc = doc;
    this.root = root;
    this.pollMs = options.pollMs ?? 1500;
    this.topM = options.topM ?? 12;
  }

  async showLauncher(): Promise<void> {
    this.stopPolling();
    this.flow = null;
    this.root.replaceChildren();
    const launcher = el(this.doc, "div", "launcher");
    this.root.appendChild(launcher);
    let users;
    try {
      await this.client.health();
      users = await this.client.users();
    } catch {
      this.root.replaceChildren(renderError(
        this.doc, "service unreachable", () => void this.showLauncher()));
      return;
    }
    const select = el(this.doc, "select", "user-select");
    select.id = "user-select";
    for (const user of users.filter((u) => u.has_session)) {
      const option = el(this.doc, "option", undefined, user.user_id);
      option.value = user.user_id;
      select.appendChild(option);
    }
    const nInput = numberInput(this.doc, "n-input", 3, 1, 10);
    const kInput = numberInput(this.doc, "k-input", 5, 1, 20);
    const start = el(this.doc, "button", "start", "Start session");
    start.id = "start";
    start.addEventListener("click", () => {
      void this.startSession(select.value, Number(nInput.value), Number(kInput.value));
    });
    launcher.append(labelled(this.doc, "user", select),
                    labelled(this.doc, "list length", nInput),
                    labelled(this.doc, "max rounds", kInput),
                    start);
  }

  async startSession(userId: string, n: number, kMax: number): Promise<void> {
    let created;
    try {
      created = await this.client.createSession(userId, { n, k_max: kMax });
    } catch (err) {
      const msg = err instanceof ApiError ? `cannot start: ${err.code}` : "service unreachable";
      this.root.replaceChildren(renderError(this.doc, msg, () => void this.showLauncher()));
      return;
    }
    this.flow = new SessionFlow(created);
    this.targets = created.targets;
    this.stale = false;
    this.lastState = null;
    this.renderSession();
    await this.pollState();
    this.startPolling();
  }

  private startPolling(): void {
    this.stopPolling();
    this.poller = setInterval(() => void this.pollState(), this.pollMs);
  }

  private stopPolling(): void {
    if (this.poller !== null) {
      clearInterval(this.poller);
      this.poller = null;
    }
  }

  async pollState(): Promise<void> {
    const flow = this.flow;
    if (!flow) {
      return;
    }
    try {
      this.lastState = await this.client.state(flow.sessionId, this.topM);
      this.stale = false;
    } catch {
      // closed or unreachable: freeze the table and flag it
      this.stale = true;
      if (flow.outcome !== "pending") {
        this.stopPolling();
      }
    }
    this.renderInspectorOnly();
  }

  choose(node: number, response: ResponseKind): void {
    this.flow?.choose(node, response);
    this.renderSession();
  }

  async submitRound(): Promise<void> {
    const flow = this.flow;
    if (!flow) {
      return;
    }
    const body = flow.beginSubmit();
    if (!body) {
      return;
    }
    this.renderSession();
    try {
      const result = await this.client.submitFeedback(flow.sessionId, body);
      flow.applyResult(result);
      if (flow.outcome !== "pending") {
        await this.pollState();
        this.stopPolling();
      }
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        try {
          flow.applyConflict(await this.client.sessionInfo(flow.sessionId));
        } catch {
          flow.submitFailed();
        }
      } else {
        flow.submitFailed();
      }
    }
    this.renderSession();
  }

  renderSession(): void {
    const flow = this.flow;
    if (!flow) {
      return;
    }
    this.root.replaceChildren();
    const header = el(this.doc, "div", "session-head");
    header.appendChild(el(this.doc, "span", "who", `user ${flow.userId}`));
    header.appendChild(el(this.doc, "span", "round-no", `round ${flow.round}`));
    this.root.appendChild(header);
    this.root.appendChild(renderTargets(this.doc, this.targets));

    const banner = renderBanner(this.doc, flow);
    if (banner) {
      this.root.appendChild(banner);
      const again = el(this.doc, "button", "again", "New session");
      again.id = "again";
      again.addEventListener("click", () => void this.showLauncher());
      this.root.appendChild(again);
    } else {
      this.root.appendChild(renderCards(this.doc, flow,
        (node, response) => this.choose(node, response)));
      const submit = el(this.doc, "button", "submit", "Submit round");
      submit.id = "submit";
      submit.disabled = !flow.canSubmit();
      submit.addEventListener("click", () => void this.submitRound());
      this.root.appendChild(submit);
    }

    this.root.appendChild(renderHistory(this.doc, flow));
    const holder = el(this.doc, "div", "inspector-holder");
    holder.id = "inspector-holder";
    holder.appendChild(renderInspector(this.doc, this.lastState, this.stale));
    this.root.appendChild(holder);
  }

  private renderInspectorOnly(): void {
    const holder = this.doc.getElementById("inspector-holder");
    if (holder) {
      holder.replaceChildren(renderInspector(this.doc, this.lastState, this.stale));
    }
  }

  dispose(): void {
    this.stopPolling();
  }
}

function numberInput(doc: Document, id: string, value: number, min: number,
                     max: number): HTMLInputElement {
  const input = el(doc, "input") as HTMLInputElement;
  input.type = "number";
  input.id = id;
  input.min = String(min);
  input.max = String(max);
  input.value = String(value);
  return input;
}

function labelled(doc: Document, text: string, control: HTMLElement): HTMLElement {
  const wrap = el(doc, "label", "field");
  wrap.appendChild(el(doc, "span", "field-label", text));
  wrap.appendChild(control);
  return wrap;
}

export async function initApp(doc: Document, client: Client,
                              options: AppOptions = {}): Promise<App> {
  const root = doc.getElementById("app");
  if (!root) {
    throw new Error("missing #app root element");
  }
  const app = new App(doc, client, root as HTMLElement, options);
  await app.showLauncher();
  return app;
}
