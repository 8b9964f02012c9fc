"""HTTP/JSON session service: live interactive sessions over the graph.

Sessions are held in memory, expire when idle, and mutate only through the
feedback endpoint. The graph, scorer, and catalog are shared immutable;
each session's state is guarded by its own lock.
"""

from __future__ import annotations

import secrets
import threading
import time
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .catalog import Catalog, SessionSpec
from .graph import KIND_ITEM, RelationalGraph
from .propagation import (
    OUTCOME_PENDING,
    FeedbackError,
    Feedback,
    PropagationConfig,
    RoundRecord,
    apply_feedback,
    init_scores,
    normalize,
    round_line,
    select_topn,
)
from .scorer import ScorerModel

DEFAULT_TTL_SECONDS = 30 * 60


def default_verbalizer(words: list[str], kind: str, item_label: str | None) -> str:
    """Space-joined sorted words; item nodes carry their label up front."""
    text = " ".join(sorted(words))
    if kind == KIND_ITEM and item_label is not None:
        return f"item {item_label}: {text}"
    return text


@dataclass
class SessionHandle:
    session_id: str
    user: int
    spec: SessionSpec
    state: object
    config: PropagationConfig
    created_at: float
    last_active: float
    lock: threading.Lock = field(default_factory=threading.Lock)
    rounds: list[RoundRecord] = field(default_factory=list)
    emitted_history: list[frozenset[int]] = field(default_factory=list)


def _err(status: int, code: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code})


def create_app(
    graph: RelationalGraph,
    scorer: ScorerModel,
    catalog: Catalog,
    sessions_by_user: dict[int, SessionSpec] | None = None,
    query_histories: dict[int, list[frozenset[int]]] | None = None,
    defaults: PropagationConfig | None = None,
    ttl_seconds: float = DEFAULT_TTL_SECONDS,
    verbalizer=default_verbalizer,
    clock=time.monotonic,
) -> FastAPI:
    app = FastAPI(title="magus session service")
    defaults = defaults or PropagationConfig()
    sessions_by_user = sessions_by_user or {}
    query_histories = query_histories or {}
    live: dict[str, SessionHandle] = {}
    registry_lock = threading.Lock()

    def display(node_id: int) -> str:
        node = graph.nodes[node_id]
        words = [catalog.words[w] for w in node.words]
        label = catalog.items[node.item_ref].label if node.item_ref is not None else None
        return verbalizer(words, node.kind, label)

    def entry_payload(recs) -> list[dict]:
        return [
            {"node": r.node, "kind": r.kind, "pos": r.position,
             "score": r.score_at_emit, "display": display(r.node)}
            for r in recs
        ]

    def purge_expired() -> None:
        now = clock()
        with registry_lock:
            stale = [sid for sid, h in live.items() if now - h.last_active > ttl_seconds]
            for sid in stale:
                del live[sid]

    def get_handle(session_id: str) -> SessionHandle | None:
        purge_expired()
        with registry_lock:
            return live.get(session_id)

    @app.get("/api/health")
    def health():
        purge_expired()
        return {
            "status": "ok",
            "nodes": graph.n_nodes,
            "items": catalog.n_items,
            "sessions_live": len(live),
        }

    @app.get("/api/users")
    def users():
        return {
            "users": [
                {"user_id": label, "has_session": catalog.user_ids[label] in sessions_by_user}
                for label in catalog.users
            ]
        }

    @app.post("/api/sessions", status_code=201)
    async def create_session(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _err(400, "invalid_json")
        if not isinstance(body, dict):
            return _err(400, "invalid_body")
        user_label = body.get("user_id")
        if not isinstance(user_label, str) or user_label not in catalog.user_ids:
            return _err(404, "unknown_user")
        user = catalog.user_ids[user_label]

        source = body.get("source", "auto")
        if source == "spec":
            cand_labels = body.get("candidates")
            target_labels = body.get("targets")
            if not isinstance(cand_labels, list) or not isinstance(target_labels, list):
                return _err(400, "invalid_session")
            try:
                candidates = tuple(catalog.item_ids[c] for c in cand_labels)
                targets = tuple(sorted(catalog.item_ids[t] for t in target_labels))
            except KeyError:
                return _err(400, "unknown_item")
            try:
                spec = SessionSpec(user=user, candidates=candidates, targets=targets)
            except ValueError:
                return _err(400, "invalid_session")
        elif source == "auto":
            spec = sessions_by_user.get(user)
            if spec is None:
                return _err(404, "no_session_for_user")
        else:
            return _err(400, "invalid_source")

        overrides = body.get("config") or {}
        if not isinstance(overrides, dict):
            return _err(400, "invalid_config")
        try:
            config = PropagationConfig(
                n=int(overrides.get("n", defaults.n)),
                k_max=int(overrides.get("k_max", defaults.k_max)),
                mode=overrides.get("mode", defaults.mode),
                query_boost=overrides.get("query_boost", defaults.query_boost),
            )
        except (ValueError, TypeError):
            return _err(400, "invalid_config")

        state = init_scores(graph, scorer, user, spec,
                            query_histories.get(user), config)
        normalize(state)
        recs = select_topn(state, graph, config.n)
        now = clock()
        handle = SessionHandle(
            session_id=secrets.token_urlsafe(16),
            user=user,
            spec=spec,
            state=state,
            config=config,
            created_at=now,
            last_active=now,
        )
        handle.emitted_history.append(frozenset(r.node for r in recs))
        with registry_lock:
            live[handle.session_id] = handle
        return {
            "session_id": handle.session_id,
            "user_id": user_label,
            "round": state.round + 1,
            "list": entry_payload(recs),
            "config": config.as_dict(),
            "targets": [
                {"item_id": catalog.items[t].label,
                 "words": sorted(catalog.words[w] for w in catalog.items[t].words)}
                for t in spec.targets
            ],
        }

    @app.get("/api/sessions/{session_id}")
    def session_info(session_id: str):
        handle = get_handle(session_id)
        if handle is None:
            return _err(404, "unknown_session")
        with handle.lock:
            handle.last_active = clock()
            return {
                "session_id": handle.session_id,
                "user_id": catalog.users[handle.user],
                "round": handle.state.round + 1,
                "outcome": handle.state.outcome,
                "config": handle.config.as_dict(),
                "list": entry_payload(handle.state.outstanding or []),
                "created_at": handle.created_at,
                "last_active": handle.last_active,
            }

    @app.post("/api/sessions/{session_id}/feedback")
    async def post_feedback(session_id: str, request: Request):
        handle = get_handle(session_id)
        if handle is None:
            return _err(404, "unknown_session")
        try:
            body = await request.json()
        except Exception:
            return _err(400, "invalid_json")
        if not isinstance(body, list):
            return _err(400, "invalid_feedback")
        try:
            feedbacks = [Feedback(int(e["node"]), str(e["response"])) for e in body]
        except (KeyError, TypeError, ValueError):
            return _err(400, "invalid_feedback")

        with handle.lock:
            handle.last_active = clock()
            state = handle.state
            if state.outcome != OUTCOME_PENDING or state.outstanding is None:
                return _err(409, "session_closed")
            submitted = frozenset(f.node for f in feedbacks)
            outstanding = frozenset(r.node for r in state.outstanding)
            if submitted != outstanding:
                if submitted in handle.emitted_history[:-1]:
                    return _err(409, "duplicate_round")
                return _err(400, "invalid_feedback")
            recs = list(state.outstanding)
            try:
                apply_feedback(state, graph, feedbacks, handle.config)
            except FeedbackError:
                return _err(400, "invalid_feedback")
            handle.rounds.append(RoundRecord(
                round=state.round, entries=recs, feedbacks=feedbacks,
                outcome=state.outcome,
            ))
            if state.outcome == OUTCOME_PENDING:
                normalize(state)
                nxt = select_topn(state, graph, handle.config.n)
                if nxt:
                    handle.emitted_history.append(frozenset(r.node for r in nxt))
                    return {
                        "outcome": OUTCOME_PENDING,
                        "round": state.round + 1,
                        "list": entry_payload(nxt),
                    }
                handle.rounds[-1].outcome = state.outcome  # exhausted by emptiness
            summary = {
                "outcome": state.outcome,
                "rounds": state.round,
                "success_round": state.success_round,
                "user_id": catalog.users[handle.user],
                "transcript": [round_line(r) for r in handle.rounds],
            }
            with registry_lock:
                live.pop(session_id, None)
            return {"outcome": state.outcome, "summary": summary}

    @app.get("/api/sessions/{session_id}/state")
    def session_state(session_id: str, top_m: int = 20):
        handle = get_handle(session_id)
        if handle is None:
            return _err(404, "unknown_session")
        with handle.lock:
            handle.last_active = clock()
            state = handle.state
            scores = state.scores
            order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))[:max(top_m, 0)]
            return {
                "session_id": handle.session_id,
                "round": state.round + 1,
                "outcome": state.outcome,
                "nodes": [
                    {
                        "node": i,
                        "words": sorted(catalog.words[w] for w in graph.nodes[i].words),
                        "kind": graph.nodes[i].kind,
                        "score": float(scores[i]),
                        "visited": i in state.visited,
                        "display": display(i),
                    }
                    for i in order
                ],
            }

    @app.delete("/api/sessions/{session_id}")
    def delete_session(session_id: str):
        purge_expired()
        with registry_lock:
            if session_id not in live:
                return _err(404, "unknown_session")
            del live[session_id]
        return {"deleted": True}

    return app
