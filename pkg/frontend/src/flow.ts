// Session flow state: which cards are answered, whether a submit may fire,
// and the history of past rounds. Pure data, no DOM, no score math.

import type { CreateResponse, Entry, FeedbackResponse, ResponseKind, SessionSummary } from "./api.js";

export interface PastRound {
  round: number;
  entries: Entry[];
  responses: Map<number, ResponseKind>;
}

export class SessionFlow {
  readonly sessionId: string;
  readonly userId: string;
  round: number;
  entries: Entry[];
  outcome: "pending" | "success" | "exhausted" = "pending";
  summary: SessionSummary | null = null;
  history: PastRound[] = [];
  private chosen = new Map<number, ResponseKind>();
  private inFlight = false;
  private submittedRounds = new Set<number>();

  constructor(created: CreateResponse) {
    this.sessionId = created.session_id;
    this.userId = created.user_id;
    this.round = created.round;
    this.entries = created.list;
  }

  choose(node: number, response: ResponseKind): void {
    if (this.outcome !== "pending" || this.inFlight) {
      return;
    }
    if (this.entries.some((e) => e.node === node)) {
      this.chosen.set(node, response);
    }
  }

  responseFor(node: number): ResponseKind | undefined {
    return this.chosen.get(node);
  }

  allAnswered(): boolean {
    return this.entries.length > 0 && this.entries.every((e) => this.chosen.has(e.node));
  }

  canSubmit(): boolean {
    return this.outcome === "pending"
      && !this.inFlight
      && !this.submittedRounds.has(this.round)
      && this.allAnswered();
  }

  // one submission per round: marks the round taken before the request flies
  beginSubmit(): { node: number; response: ResponseKind }[] | null {
    if (!this.canSubmit()) {
      return null;
    }
    this.inFlight = true;
    this.submittedRounds.add(this.round);
    return this.entries.map((e) => ({ node: e.node, response: this.chosen.get(e.node)! }));
  }

  applyResult(result: FeedbackResponse): void {
    this.history.push({
      round: this.round,
      entries: this.entries,
      responses: new Map(this.chosen),
    });
    this.inFlight = false;
    this.chosen = new Map();
    this.outcome = result.outcome;
    if (result.outcome === "pending") {
      this.round = result.round!;
      this.entries = result.list!;
    } else {
      this.summary = result.summary ?? null;
      this.entries = [];
    }
  }

  // 409 path: resynchronize with what the service believes is outstanding
  applyConflict(info: { round: number; list: Entry[]; outcome: string }): void {
    this.inFlight = false;
    this.chosen = new Map();
    this.round = info.round;
    this.entries = info.list;
    if (info.outcome === "success" || info.outcome === "exhausted") {
      this.outcome = info.outcome;
    }
  }

  submitFailed(): void {
    // network-level failure: allow a retry of the same round
    this.inFlight = false;
    this.submittedRounds.delete(this.round);
  }
}
