// DOM builders. Displayed numbers are copied verbatim from service
// payloads (String(value)); nothing here computes a score.

import type { Entry, ResponseKind, StateResponse, TargetInfo } from "./api.js";
import type { SessionFlow } from "./flow.js";

const RESPONSES: { value: ResponseKind; label: string }[] = [
  { value: "yes", label: "Yes" },
  { value: "no", label: "No" },
  { value: "not_care", label: "Not care" },
];

export function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

export function renderCards(
  doc: Document,
  flow: SessionFlow,
  onChoose: (node: number, response: ResponseKind) => void,
): HTMLElement {
  const wrap = el(doc, "div", "cards");
  for (const entry of flow.entries) {
    wrap.appendChild(renderCard(doc, entry, flow.responseFor(entry.node), onChoose));
  }
  return wrap;
}

function renderCard(
  doc: Document,
  entry: Entry,
  chosen: ResponseKind | undefined,
  onChoose: (node: number, response: ResponseKind) => void,
): HTMLElement {
  const card = el(doc, "div", `card kind-${entry.kind}`);
  card.dataset.node = String(entry.node);
  card.dataset.score = String(entry.score);
  card.appendChild(el(doc, "span", "badge", entry.kind));
  card.appendChild(el(doc, "span", "pos", `#${entry.pos}`));
  card.appendChild(el(doc, "div", "display", entry.display));
  card.appendChild(el(doc, "div", "score", String(entry.score)));
  const buttons = el(doc, "div", "answers");
  for (const { value, label } of RESPONSES) {
    const btn = el(doc, "button", value === chosen ? "answer selected" : "answer", label);
    btn.dataset.response = value;
    btn.addEventListener("click", () => onChoose(entry.node, value));
    buttons.appendChild(btn);
  }
  card.appendChild(buttons);
  return card;
}

export function renderHistory(doc: Document, flow: SessionFlow): HTMLElement {
  const wrap = el(doc, "div", "history");
  for (const past of flow.history) {
    const row = el(doc, "div", "history-round");
    row.appendChild(el(doc, "span", "round-label", `round ${past.round}`));
    for (const entry of past.entries) {
      const response = past.responses.get(entry.node) ?? "?";
      row.appendChild(el(doc, "span", `past past-${response}`,
        `${entry.display} -> ${response}`));
    }
    wrap.appendChild(row);
  }
  return wrap;
}

export function renderInspector(
  doc: Document,
  state: StateResponse | null,
  stale: boolean,
): HTMLElement {
  const wrap = el(doc, "div", "inspector");
  const head = el(doc, "div", "inspector-head", "node scores");
  if (stale) {
    head.appendChild(el(doc, "span", "stale-badge", "stale"));
  }
  wrap.appendChild(head);
  if (!state) {
    wrap.appendChild(el(doc, "div", "inspector-empty", "no data yet"));
    return wrap;
  }
  const table = el(doc, "table", "score-table");
  for (const node of state.nodes) {
    const tr = el(doc, "tr", node.visited ? "score-row visited" : "score-row");
    tr.dataset.node = String(node.node);
    tr.dataset.score = String(node.score);
    tr.appendChild(el(doc, "td", "cell-kind", node.kind));
    tr.appendChild(el(doc, "td", "cell-display", node.display));
    const bar = el(doc, "td", "cell-bar");
    const fill = el(doc, "div", "bar-fill");
    fill.style.width = `${Math.max(0, Math.min(1, node.score)) * 100}%`;
    bar.appendChild(fill);
    tr.appendChild(bar);
    tr.appendChild(el(doc, "td", "cell-score", String(node.score)));
    tr.appendChild(el(doc, "td", "cell-visited", node.visited ? "visited" : ""));
    table.appendChild(tr);
  }
  wrap.appendChild(table);
  return wrap;
}

export function renderTargets(doc: Document, targets: TargetInfo[]): HTMLElement {
  const wrap = el(doc, "div", "targets");
  wrap.appendChild(el(doc, "span", "targets-label", "you are shopping for:"));
  for (const target of targets) {
    wrap.appendChild(el(doc, "span", "target",
      `${target.item_id} (${target.words.join(" ")})`));
  }
  return wrap;
}

export function renderBanner(doc: Document, flow: SessionFlow): HTMLElement | null {
  if (flow.outcome === "pending") {
    return null;
  }
  const kind = flow.outcome === "success" ? "banner success" : "banner exhausted";
  const rounds = flow.summary?.rounds ?? flow.history.length;
  const text = flow.outcome === "success"
    ? `found your item in ${rounds} round${rounds === 1 ? "" : "s"}`
    : `no luck within ${rounds} round${rounds === 1 ? "" : "s"}`;
  const banner = el(doc, "div", kind, text);
  banner.dataset.outcome = flow.outcome;
  return banner;
}

export function renderError(doc: Document, message: string, onRetry: () => void): HTMLElement {
  const banner = el(doc, "div", "banner error", message);
  const retry = el(doc, "button", "retry", "Retry");
  retry.addEventListener("click", onRetry);
  banner.appendChild(retry);
  return banner;
}
