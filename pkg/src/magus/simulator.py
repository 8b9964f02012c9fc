"""User agents, batch session execution, and the evaluation metrics.

The strict agent accepts the best-placed entry that is a target item or a
query contained in a target; the ambiguous agent answers not-care instead
when that query fits several distinct targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .catalog import SessionSpec
from .graph import KIND_ITEM, RelationalGraph
from .propagation import (
    NO,
    NOT_CARE,
    OUTCOME_SUCCESS,
    YES,
    Feedback,
    PropagationConfig,
    Recommendation,
    SessionTranscript,
    run_session,
)
from .scorer import ScorerModel, score_items

STRICT = "strict"
AMBIGUOUS = "ambiguous"


class UserAgent:
    """Deterministic simulated user for one session."""

    def __init__(self, variant: str, graph: RelationalGraph, session: SessionSpec):
        if variant not in (STRICT, AMBIGUOUS):
            raise ValueError(f"unknown agent variant {variant!r}")
        self.variant = variant
        self.graph = graph
        self.target_nodes = {graph.item_index[t] for t in session.targets}
        self.target_words = [graph.nodes[graph.item_index[t]].words for t in session.targets]

    def _eligible(self, rec: Recommendation) -> bool:
        node = self.graph.nodes[rec.node]
        if node.kind == KIND_ITEM:
            return rec.node in self.target_nodes
        return any(node.words <= tw for tw in self.target_words)

    def _ambiguous_query(self, rec: Recommendation) -> bool:
        node = self.graph.nodes[rec.node]
        if node.kind == KIND_ITEM:
            return False
        matches = sum(1 for tw in self.target_words if node.words <= tw)
        return matches >= 2

    def respond(self, recs: list[Recommendation]) -> list[Feedback]:
        chosen = None
        for rec in sorted(recs, key=lambda r: r.position):
            if self._eligible(rec):
                chosen = rec
                break
        out = []
        for rec in recs:
            if chosen is not None and rec.node == chosen.node:
                if self.variant == AMBIGUOUS and self._ambiguous_query(rec):
                    out.append(Feedback(rec.node, NOT_CARE))
                else:
                    out.append(Feedback(rec.node, YES))
            else:
                out.append(Feedback(rec.node, NO))
        return out


def round_accuracy(position: int) -> float:
    return 1.0 / math.log2(position + 1)


def compute_ra(transcripts: list[SessionTranscript], k_max: int) -> float:
    """Mean over all executed rounds of 1/log2(click position + 1), zero for
    rounds without a yes."""
    total = 0.0
    rounds = 0
    for t in transcripts:
        for record in t.rounds[:k_max]:
            rounds += 1
            for fb in record.feedbacks:
                if fb.response == YES:
                    pos = next(e.position for e in record.entries if e.node == fb.node)
                    total += round_accuracy(pos)
                    break
    return total / rounds if rounds else 0.0


def compute_sa(transcripts: list[SessionTranscript], k_max: int) -> float:
    """Fraction of sessions that accept a target item within k_max rounds."""
    if not transcripts:
        return 0.0
    wins = sum(
        1
        for t in transcripts
        if t.outcome == OUTCOME_SUCCESS
        and t.success_round is not None
        and t.success_round <= k_max
    )
    return wins / len(transcripts)


def compute_sac(scorer: ScorerModel, sessions: list[SessionSpec], n: int = 3) -> float:
    """Single-round accuracy of the base recommender alone: does its item
    top-n contain a target?"""
    if not sessions:
        return 0.0
    hits = 0
    for s in sessions:
        scored = score_items(scorer, s.user, s.candidates)
        ranked = sorted(zip(s.candidates, scored), key=lambda p: (-p[1], p[0]))
        top = {item for item, _ in ranked[:n]}
        if top & set(s.targets):
            hits += 1
    return hits / len(sessions)


@dataclass
class MetricReport:
    config: dict
    ra: float
    sa: float
    sac: float | None
    n_sessions: int
    per_session: list[dict] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "config": self.config,
            "ra": self.ra,
            "sa": self.sa,
            "sac": self.sac,
            "n_sessions": self.n_sessions,
            "per_session": self.per_session,
        }


def run_sessions(
    graph: RelationalGraph,
    scorer: ScorerModel,
    sessions: list[SessionSpec],
    agent_variant: str,
    config: PropagationConfig,
    query_histories: dict[int, list[frozenset[int]]] | None = None,
) -> list[SessionTranscript]:
    transcripts = []
    for session in sessions:
        agent = UserAgent(agent_variant, graph, session)
        qh = query_histories.get(session.user) if query_histories else None
        transcripts.append(run_session(graph, scorer, session, agent, config, qh))
    return transcripts


def run_benchmark(
    graph: RelationalGraph,
    scorer: ScorerModel,
    sessions: list[SessionSpec],
    agent_variants: list[str],
    configs: list[PropagationConfig],
    query_histories: dict[int, list[frozenset[int]]] | None = None,
    with_sac: bool = True,
) -> list[tuple[MetricReport, list[SessionTranscript]]]:
    """Run every (agent, config) cell over the session list."""
    if not sessions:
        raise ValueError("no sessions to run")
    out = []
    for variant in agent_variants:
        for config in configs:
            transcripts = run_sessions(graph, scorer, sessions, variant, config,
                                       query_histories)
            report = MetricReport(
                config={**config.as_dict(), "agent": variant},
                ra=compute_ra(transcripts, config.k_max),
                sa=compute_sa(transcripts, config.k_max),
                sac=compute_sac(scorer, sessions, config.n) if with_sac else None,
                n_sessions=len(sessions),
                per_session=[
                    {
                        "user": t.user,
                        "outcome": t.outcome,
                        "rounds": len(t.rounds),
                        "success_round": t.success_round,
                    }
                    for t in transcripts
                ],
            )
            out.append((report, transcripts))
    return out
