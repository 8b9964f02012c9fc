"""Catalog: items, words, users, interaction logs.

Handles ingestion from JSON-lines files, temporal train/valid/test
splitting, session sampling for the simulator, and a synthetic dataset
generator with planted word preferences.

File formats (one JSON object per line):
  items:        {"item_id": str, "words": [str, ...]}
  interactions: {"user_id": str, "item_id": str, "label": 0|1, "ts": int}
  queries:      {"user_id": str, "words": [str, ...], "ts": int}   (optional)
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

ITEMS_FILE = "items.jsonl"
INTERACTIONS_FILE = "interactions.jsonl"
QUERIES_FILE = "queries.jsonl"
META_FILE = "meta.json"


class CatalogError(ValueError):
    """Malformed input file (carries the offending line number)."""


@dataclass(frozen=True)
class Item:
    id: int
    label: str
    words: frozenset[int]


@dataclass
class InteractionLog:
    """Per-user histories: positive items, negative items, searched word sets.

    Event tuples are (item_id, ts) and query tuples (word_set, ts); every
    list is sorted by timestamp (stable) after ingestion.
    """

    positives: dict[int, list[tuple[int, int]]] = field(default_factory=dict)
    negatives: dict[int, list[tuple[int, int]]] = field(default_factory=dict)
    queries: dict[int, list[tuple[frozenset[int], int]]] = field(default_factory=dict)

    def users(self) -> list[int]:
        return sorted(set(self.positives) | set(self.negatives) | set(self.queries))

    def events(self, user: int) -> list[tuple[int, int, int]]:
        """Merged (item, ts, label) events for one user, ts-sorted, stable."""
        merged = [(it, ts, 1) for it, ts in self.positives.get(user, [])]
        merged += [(it, ts, 0) for it, ts in self.negatives.get(user, [])]
        merged.sort(key=lambda e: e[1])
        return merged

    def n_events(self, user: int) -> int:
        return len(self.positives.get(user, ())) + len(self.negatives.get(user, ()))

    def add(self, user: int, item: int, ts: int, label: int) -> None:
        bucket = self.positives if label == 1 else self.negatives
        bucket.setdefault(user, []).append((item, ts))

    def sort(self) -> None:
        for d in (self.positives, self.negatives, self.queries):
            for lst in d.values():
                lst.sort(key=lambda e: e[1])


@dataclass
class Catalog:
    items: list[Item]
    words: list[str]
    users: list[str]
    item_ids: dict[str, int]
    word_ids: dict[str, int]
    user_ids: dict[str, int]
    log: InteractionLog
    summary: dict[str, int]

    @property
    def n_items(self) -> int:
        return len(self.items)

    @property
    def n_words(self) -> int:
        return len(self.words)

    @property
    def n_users(self) -> int:
        return len(self.users)


@dataclass(frozen=True)
class SessionSpec:
    """One simulated episode: a candidate pool and the items that satisfy it."""

    user: int
    candidates: tuple[int, ...]
    targets: tuple[int, ...]

    def __post_init__(self):
        if not self.targets:
            raise ValueError("session needs at least one target")
        if len(set(self.candidates)) != len(self.candidates):
            raise ValueError("duplicate candidates")
        if not set(self.targets) <= set(self.candidates):
            raise ValueError("targets must be a subset of candidates")


@dataclass
class SplitLogs:
    train: InteractionLog
    valid: InteractionLog
    test: InteractionLog
    dropped_users: int


def _norm_word(w: str) -> str:
    return w.strip().lower()


def _read_jsonl(path: Path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise CatalogError(f"{path.name}:{lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise CatalogError(f"{path.name}:{lineno}: expected an object")
            yield lineno, obj


def load_catalog(
    items_path: str | Path,
    interactions_path: str | Path,
    queries_path: str | Path | None = None,
) -> Catalog:
    """Load a catalog from JSON-lines files.

    Dense ids are assigned in first-seen order. The word table is the union
    of item word strings (lowercased, trimmed). Items without words and
    interactions naming unknown items are rejected and counted in the
    summary; structurally malformed lines raise CatalogError with the line
    number.
    """
    items_path = Path(items_path)
    interactions_path = Path(interactions_path)

    items: list[Item] = []
    item_ids: dict[str, int] = {}
    words: list[str] = []
    word_ids: dict[str, int] = {}
    summary = {
        "items_loaded": 0,
        "items_rejected": 0,
        "interactions_loaded": 0,
        "interactions_rejected": 0,
        "queries_loaded": 0,
        "queries_rejected": 0,
    }

    for lineno, obj in _read_jsonl(items_path):
        label = obj.get("item_id")
        raw_words = obj.get("words")
        if not isinstance(label, str) or not isinstance(raw_words, list):
            raise CatalogError(f"{items_path.name}:{lineno}: need item_id (str) and words (list)")
        if label in item_ids:
            summary["items_rejected"] += 1
            continue
        wset = set()
        for w in raw_words:
            if not isinstance(w, str):
                raise CatalogError(f"{items_path.name}:{lineno}: words must be strings")
            w = _norm_word(w)
            if not w:
                continue
            if w not in word_ids:
                word_ids[w] = len(words)
                words.append(w)
            wset.add(word_ids[w])
        if not wset:
            summary["items_rejected"] += 1
            continue
        item_ids[label] = len(items)
        items.append(Item(id=len(items), label=label, words=frozenset(wset)))
        summary["items_loaded"] += 1

    users: list[str] = []
    user_ids: dict[str, int] = {}

    def user_of(label: str) -> int:
        if label not in user_ids:
            user_ids[label] = len(users)
            users.append(label)
        return user_ids[label]

    log = InteractionLog()
    seen_at_ts: dict[tuple[int, int, int], int] = {}
    for lineno, obj in _read_jsonl(interactions_path):
        ulabel, ilabel = obj.get("user_id"), obj.get("item_id")
        label_val, ts = obj.get("label"), obj.get("ts")
        if (
            not isinstance(ulabel, str)
            or not isinstance(ilabel, str)
            or label_val not in (0, 1)
            or not isinstance(ts, int)
            or isinstance(ts, bool)
        ):
            raise CatalogError(
                f"{interactions_path.name}:{lineno}: need user_id, item_id, label 0|1, ts int"
            )
        if ilabel not in item_ids:
            summary["interactions_rejected"] += 1
            continue
        u, it = user_of(ulabel), item_ids[ilabel]
        key = (u, it, ts)
        if seen_at_ts.get(key, label_val) != label_val:
            # same (user, item, ts) with contradictory labels
            summary["interactions_rejected"] += 1
            continue
        seen_at_ts[key] = label_val
        log.add(u, it, ts, label_val)
        summary["interactions_loaded"] += 1

    if queries_path is not None:
        queries_path = Path(queries_path)
        for lineno, obj in _read_jsonl(queries_path):
            ulabel, raw_words, ts = obj.get("user_id"), obj.get("words"), obj.get("ts")
            if not isinstance(ulabel, str) or not isinstance(raw_words, list) or not isinstance(ts, int):
                raise CatalogError(f"{queries_path.name}:{lineno}: need user_id, words, ts")
            wset = {word_ids[_norm_word(w)] for w in raw_words
                    if isinstance(w, str) and _norm_word(w) in word_ids}
            if not wset:
                summary["queries_rejected"] += 1
                continue
            u = user_of(ulabel)
            log.queries.setdefault(u, []).append((frozenset(wset), ts))
            summary["queries_loaded"] += 1

    log.sort()
    return Catalog(
        items=items,
        words=words,
        users=users,
        item_ids=item_ids,
        word_ids=word_ids,
        user_ids=user_ids,
        log=log,
        summary=summary,
    )


def load_catalog_dir(path: str | Path) -> Catalog:
    """Load items/interactions/queries from their conventional names in a directory."""
    path = Path(path)
    queries = path / QUERIES_FILE
    return load_catalog(
        path / ITEMS_FILE,
        path / INTERACTIONS_FILE,
        queries if queries.exists() else None,
    )


def temporal_split(
    log: InteractionLog,
    ratios: tuple[float, float, float] = (0.6, 0.2, 0.2),
    min_events: int = 30,
) -> SplitLogs:
    """Split each user's event sequence by time into train/valid/test.

    Users with fewer than ``min_events`` interactions or without a single
    positive item are dropped entirely. Query histories are partitioned at
    the same fractional indices.
    """
    if any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("ratios must be positive and sum to 1")

    train, valid, test = InteractionLog(), InteractionLog(), InteractionLog()
    dropped = 0
    for user in log.users():
        events = log.events(user)
        n = len(events)
        if n < min_events or not log.positives.get(user):
            dropped += 1
            continue
        c1 = int(n * ratios[0])
        c2 = int(n * (ratios[0] + ratios[1]))
        for dest, chunk in zip(
            (train, valid, test), (events[:c1], events[c1:c2], events[c2:])
        ):
            for item, ts, label in chunk:
                dest.add(user, item, ts, label)
        qs = sorted(log.queries.get(user, []), key=lambda e: e[1])
        if qs:
            nq = len(qs)
            q1 = int(nq * ratios[0])
            q2 = int(nq * (ratios[0] + ratios[1]))
            for dest, chunk in zip((train, valid, test), (qs[:q1], qs[q1:q2], qs[q2:])):
                if chunk:
                    dest.queries[user] = list(chunk)
    return SplitLogs(train=train, valid=valid, test=test, dropped_users=dropped)


def build_sessions(
    catalog: Catalog,
    test_log: InteractionLog,
    session_size: int = 30,
    seed: int = 0,
) -> list[SessionSpec]:
    """Sample one session per test user.

    Candidates are a uniform sample (without replacement) of catalog items,
    forced to include at least one of the user's test-period positives;
    targets are all test positives present in the candidate pool. Users
    without test positives are skipped. Deterministic under the seed.
    """
    rng = random.Random(seed)
    pool = list(range(catalog.n_items))
    sessions = []
    for user in test_log.users():
        positives = sorted({it for it, _ in test_log.positives.get(user, [])})
        if not positives:
            continue
        k = min(session_size, len(pool))
        candidates = rng.sample(pool, k)
        if not set(candidates) & set(positives):
            forced = rng.choice(positives)
            candidates[rng.randrange(k)] = forced
        targets = tuple(sorted(set(candidates) & set(positives)))
        sessions.append(SessionSpec(user=user, candidates=tuple(candidates), targets=targets))
    return sessions


def save_sessions(sessions: list[SessionSpec], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in sessions:
            fh.write(json.dumps(
                {"user": s.user, "candidates": list(s.candidates), "targets": list(s.targets)},
                separators=(",", ":"),
            ) + "\n")


def load_sessions(path: str | Path) -> list[SessionSpec]:
    sessions = []
    for _, obj in _read_jsonl(Path(path)):
        sessions.append(SessionSpec(
            user=obj["user"],
            candidates=tuple(obj["candidates"]),
            targets=tuple(obj["targets"]),
        ))
    return sessions


def gen_synthetic(
    n_users: int,
    n_items: int,
    n_words: int,
    words_per_item: int,
    events_per_user: int,
    seed: int,
    out_dir: str | Path,
) -> dict[str, int]:
    """Write a synthetic catalog with planted per-user word preferences.

    Words are grouped into themes and every item draws its words from one
    theme (half the items stick to the theme's core words). Each user
    favors the core of one theme and clicks an observed item iff its words
    all sit inside that core, up to a little symmetric label noise; items
    carrying fringe words are planted as disliked. A recommender that
    reasons over shared words can exploit this. Also emits per-user query
    events drawn from the favorite words, plus a meta.json recording the
    plant. Fixed seed, identical bytes.
    """
    if min(n_users, n_items, n_words, words_per_item, events_per_user) < 1:
        raise ValueError("all counts must be >= 1")
    if words_per_item > n_words:
        raise ValueError("words_per_item cannot exceed n_words")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)

    width = max(4, len(str(n_items)))
    word_names = [f"w{i:0{max(3, len(str(n_words)))}d}" for i in range(n_words)]
    n_themes = max(1, n_words // (3 * words_per_item))
    theme_size = n_words // n_themes
    themes = [list(range(t * theme_size, (t + 1) * theme_size)) for t in range(n_themes)]
    themes[-1].extend(range(n_themes * theme_size, n_words))
    cores = [set(th[:max(words_per_item, (2 * len(th)) // 3)]) for th in themes]
    item_words = []
    for _ in range(n_items):
        t = rng.randrange(n_themes)
        pool = sorted(cores[t]) if rng.random() < 0.5 else themes[t]
        item_words.append(sorted(rng.sample(pool, min(words_per_item, len(pool)))))

    with open(out / ITEMS_FILE, "w", encoding="utf-8") as fh:
        for i, ws in enumerate(item_words):
            fh.write(json.dumps(
                {"item_id": f"i{i:0{width}d}", "words": [word_names[w] for w in ws]},
                separators=(",", ":"),
            ) + "\n")

    favorites = {}
    inter_lines = []
    query_lines = []
    for u in range(n_users):
        ulabel = f"u{u:0{width}d}"
        fav = cores[rng.randrange(n_themes)]
        favorites[ulabel] = sorted(word_names[w] for w in fav)
        events = []
        for t in range(events_per_user):
            item = rng.randrange(n_items)
            p = 0.92 if set(item_words[item]) <= fav else 0.02
            events.append([item, t, 1 if rng.random() < p else 0])
        if not any(lbl for _, _, lbl in events):
            # plant guarantees at least one positive per user
            best = max(range(len(events)),
                       key=lambda j: len(fav & set(item_words[events[j][0]])))
            events[best][2] = 1
        for item, t, lbl in events:
            inter_lines.append(json.dumps(
                {"user_id": ulabel, "item_id": f"i{item:0{width}d}", "label": lbl, "ts": t},
                separators=(",", ":"),
            ))
        for t in range(3, events_per_user, 17):
            qwords = rng.sample(sorted(fav), rng.choice((1, 2)))
            query_lines.append(json.dumps(
                {"user_id": ulabel, "words": [word_names[w] for w in sorted(qwords)], "ts": t},
                separators=(",", ":"),
            ))

    (out / INTERACTIONS_FILE).write_text("\n".join(inter_lines) + "\n", encoding="utf-8")
    (out / QUERIES_FILE).write_text(
        ("\n".join(query_lines) + "\n") if query_lines else "", encoding="utf-8")
    meta = {
        "params": {
            "n_users": n_users, "n_items": n_items, "n_words": n_words,
            "words_per_item": words_per_item, "events_per_user": events_per_user,
            "seed": seed,
        },
        "favorites": favorites,
    }
    (out / META_FILE).write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n",
                                 encoding="utf-8")
    return {
        "items": n_items,
        "interactions": len(inter_lines),
        "queries": len(query_lines),
        "users": n_users,
    }
