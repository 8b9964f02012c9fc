"""Per-session scoring engine.

A session starts by seeding candidate item nodes with base-recommender
scores and sweeping them once down the graph (supersets feed subsets,
inhibition subtracts). Each round then normalizes, emits the top-N unvisited
nodes, ingests yes/no/not-care feedback, and propagates the verdicts back
up toward items.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .catalog import SessionSpec
from .graph import KIND_ITEM, RelationalGraph
from .scorer import ScorerModel

MODE_LITERAL = "literal"
MODE_DELTA = "delta"
BOOST_MAX_FLOOR = "max_floor"
BOOST_LITERAL_MIN = "literal_min"

OUTCOME_PENDING = "pending"
OUTCOME_SUCCESS = "success"
OUTCOME_EXHAUSTED = "exhausted"

YES = "yes"
NO = "no"
NOT_CARE = "not_care"


class FeedbackError(ValueError):
    pass


@dataclass
class PropagationConfig:
    n: int = 3
    k_max: int = 5
    mode: str = MODE_LITERAL
    query_boost: str = BOOST_MAX_FLOOR

    def __post_init__(self):
        if self.mode not in (MODE_LITERAL, MODE_DELTA):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.query_boost not in (BOOST_MAX_FLOOR, BOOST_LITERAL_MIN):
            raise ValueError(f"unknown query_boost {self.query_boost!r}")

    def as_dict(self) -> dict:
        return {"n": self.n, "k_max": self.k_max, "mode": self.mode,
                "query_boost": self.query_boost}


@dataclass(frozen=True)
class Recommendation:
    node: int
    kind: str  # "query" | "item"
    position: int
    score_at_emit: float


@dataclass(frozen=True)
class Feedback:
    node: int
    response: str  # "yes" | "no" | "not_care"


@dataclass
class ScoreState:
    scores: np.ndarray
    visited: set[int]
    round: int
    outcome: str
    candidate_nodes: frozenset[int]
    target_nodes: frozenset[int]
    frozen_items: frozenset[int]
    outstanding: list[Recommendation] | None = None
    success_round: int | None = None


@dataclass
class RoundRecord:
    round: int
    entries: list[Recommendation]
    feedbacks: list[Feedback]
    outcome: str


@dataclass
class SessionTranscript:
    user: int
    session: SessionSpec
    rounds: list[RoundRecord] = field(default_factory=list)
    outcome: str = OUTCOME_PENDING
    success_round: int | None = None


def _sweep_order(graph: RelationalGraph) -> list[int]:
    """Descending word-set size, ascending id: every covering superset is
    processed before its subsets."""
    return sorted(range(graph.n_nodes), key=lambda i: (-len(graph.nodes[i].words), i))


def init_scores(
    graph: RelationalGraph,
    scorer: ScorerModel,
    user: int,
    session: SessionSpec,
    query_history: list[frozenset[int]] | None = None,
    config: PropagationConfig | None = None,
) -> ScoreState:
    """Seed candidate item nodes with base scores, run the downward sweep,
    then floor the user's searched-query nodes."""
    config = config or PropagationConfig()
    scores = np.zeros(graph.n_nodes, dtype=np.float64)
    candidate_nodes = set()
    for item in session.candidates:
        nid = graph.item_index[item]
        candidate_nodes.add(nid)
        scores[nid] = max(scores[nid], scorer.score(user, item))
    target_nodes = frozenset(graph.item_index[t] for t in session.targets)
    frozen = frozenset(
        n.id for n in graph.nodes if n.kind == KIND_ITEM and n.id not in candidate_nodes
    )

    for x in _sweep_order(graph):
        if graph.nodes[x].kind == KIND_ITEM:
            continue
        acc = 0.0
        for sup, w in graph.up[x]:
            acc += w * scores[sup]
        for nbr, w in graph.minus[x]:
            acc -= w * scores[nbr]
        scores[x] += acc

    if query_history:
        item_kinds = {n.id for n in graph.nodes if n.kind == KIND_ITEM}
        searched = {
            graph.by_words[fs]
            for fs in query_history
            if fs in graph.by_words and graph.by_words[fs] not in item_kinds
        }
        ordinary = [i for i in range(graph.n_nodes)
                    if i not in searched and i not in item_kinds]
        if searched and ordinary:
            vals = scores[ordinary]
            if config.query_boost == BOOST_MAX_FLOOR:
                floor = min(1.0, float(vals.max()))
            else:
                floor = min(float(vals.min()), 1.0)
            for q in searched:
                scores[q] = max(scores[q], floor)

    return ScoreState(
        scores=scores,
        visited=set(),
        round=0,
        outcome=OUTCOME_PENDING,
        candidate_nodes=frozenset(candidate_nodes),
        target_nodes=target_nodes,
        frozen_items=frozen,
    )


def normalize(state: ScoreState) -> ScoreState:
    """Affine map of the whole score vector to [0, 1]; a flat vector becomes
    all 0.5."""
    v = state.scores
    mn = float(v.min())
    mx = float(v.max())
    if mx == mn:
        v[:] = 0.5
    else:
        v -= mn
        v /= (mx - mn)
    return state


def select_topn(state: ScoreState, graph: RelationalGraph, n: int = 3) -> list[Recommendation]:
    """Top-n unvisited nodes by score, lower id winning ties. Non-candidate
    item nodes never compete; queries always do."""
    masked = state.scores.copy()
    blocked = list(state.visited) + list(state.frozen_items)
    if blocked:
        masked[blocked] = -np.inf
    avail = int(np.sum(np.isfinite(masked)))
    if avail == 0:
        state.outcome = OUTCOME_EXHAUSTED
        state.outstanding = []
        return []
    order = np.argsort(-masked, kind="stable")
    picks = order[: min(n, avail)]
    recs = [
        Recommendation(
            node=int(i),
            kind="item" if graph.nodes[int(i)].kind == KIND_ITEM else "query",
            position=pos,
            score_at_emit=float(state.scores[int(i)]),
        )
        for pos, i in enumerate(picks, start=1)
    ]
    state.outstanding = recs
    return recs


def apply_feedback(
    state: ScoreState,
    graph: RelationalGraph,
    feedbacks: list[Feedback],
    config: PropagationConfig,
) -> ScoreState:
    """Pin the emitted nodes per the verdicts (yes=1, no=0, not-care kept),
    then propagate back toward items.

    The back sweep is a multi-source BFS along covering-superset edges,
    lowest node id first within each frontier, each node touched at most
    once. Inhibition fires only from the feedback nodes themselves. literal
    mode relays current scores; delta mode relays signed changes (negative
    changes never feed inhibition edges).
    """
    if state.outstanding is None:
        raise FeedbackError("no outstanding recommendation list")
    emitted = {r.node for r in state.outstanding}
    got = [f.node for f in feedbacks]
    if len(got) != len(set(got)) or set(got) != emitted:
        raise FeedbackError("feedback must cover exactly the emitted list")
    yeses = [f for f in feedbacks if f.response == YES]
    if len(yeses) > 1:
        raise FeedbackError("at most one yes per round")
    for f in feedbacks:
        if f.response not in (YES, NO, NOT_CARE):
            raise FeedbackError(f"unknown response {f.response!r}")

    scores = state.scores
    delta: dict[int, float] = {}
    for f in feedbacks:
        if f.response == YES:
            delta[f.node] = 1.0 - scores[f.node]
            scores[f.node] = 1.0
        elif f.response == NO:
            delta[f.node] = 0.0 - scores[f.node]
            scores[f.node] = 0.0

    literal = config.mode == MODE_LITERAL
    touched = set(emitted)
    sources = set(delta)

    def quantity(node: int) -> float:
        return float(scores[node]) if literal else delta.get(node, 0.0)

    level = sorted(sources)
    while level:
        nxt = set()
        for x in level:
            q = quantity(x)
            if q == 0.0:
                continue
            for sup, w in graph.up[x]:
                if sup in touched or sup in state.frozen_items or w * q == 0.0:
                    continue
                old = float(scores[sup])
                if literal:
                    scores[sup] = min(1.0, old + w * q)
                else:
                    scores[sup] = min(1.0, max(0.0, old + w * q))
                delta[sup] = float(scores[sup]) - old
                touched.add(sup)
                nxt.add(sup)
            if x in sources and (literal or q > 0.0):
                # inhibition fires from the feedback nodes only, not the cascade
                for nbr, w in graph.minus[x]:
                    if nbr in touched or nbr in state.frozen_items or w * q == 0.0:
                        continue
                    scores[nbr] = max(0.0, scores[nbr] - w * q)
                    touched.add(nbr)
        level = sorted(nxt)

    state.visited |= emitted
    state.outstanding = None
    state.round += 1
    if yeses:
        node = yeses[0].node
        if graph.nodes[node].kind == KIND_ITEM and node in state.target_nodes:
            state.outcome = OUTCOME_SUCCESS
            state.success_round = state.round
    if state.outcome == OUTCOME_PENDING and state.round >= config.k_max:
        state.outcome = OUTCOME_EXHAUSTED
    return state


def run_session(
    graph: RelationalGraph,
    scorer: ScorerModel,
    session: SessionSpec,
    agent,
    config: PropagationConfig | None = None,
    query_history: list[frozenset[int]] | None = None,
) -> SessionTranscript:
    """Drive one full session against an agent exposing
    respond(list[Recommendation]) -> list[Feedback]."""
    config = config or PropagationConfig()
    state = init_scores(graph, scorer, session.user, session, query_history, config)
    transcript = SessionTranscript(user=session.user, session=session)
    while state.outcome == OUTCOME_PENDING:
        normalize(state)
        recs = select_topn(state, graph, config.n)
        if not recs:
            break
        feedbacks = agent.respond(recs)
        apply_feedback(state, graph, feedbacks, config)
        transcript.rounds.append(
            RoundRecord(round=state.round, entries=recs, feedbacks=feedbacks,
                        outcome=state.outcome)
        )
    transcript.outcome = state.outcome
    transcript.success_round = state.success_round
    return transcript


def decisive_feedback(feedbacks: list[Feedback]) -> Feedback | None:
    """The round's reportable response: the yes if any, else the first
    not-care, else None (all rejected)."""
    for f in feedbacks:
        if f.response == YES:
            return f
    for f in feedbacks:
        if f.response == NOT_CARE:
            return f
    return None


def round_line(record: RoundRecord) -> str:
    fb = decisive_feedback(record.feedbacks)
    obj = {
        "round": record.round,
        "list": [{"node": r.node, "kind": r.kind, "pos": r.position}
                 for r in record.entries],
        "feedback": None if fb is None else {"node": fb.node, "response": fb.response},
        "outcome": record.outcome,
    }
    return json.dumps(obj, separators=(",", ":"))


def transcript_lines(transcript: SessionTranscript) -> list[str]:
    return [round_line(r) for r in transcript.rounds]


def save_transcripts(transcripts: list[SessionTranscript], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in transcripts:
            for line in transcript_lines(t):
                fh.write(line + "\n")
