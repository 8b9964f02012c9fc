import random

import pytest

from magus.catalog import (
    Catalog,
    InteractionLog,
    Item,
    build_sessions,
    gen_synthetic,
    load_catalog_dir,
    temporal_split,
)
from magus.graph import build_graph
from magus.scorer import train_matfact

# knobs for the planted synthetic benchmark fixture; tests and the
# acceptance suite share one build per pytest session
FIXTURE = dict(n_users=620, n_items=240, n_words=48, words_per_item=4,
               events_per_user=120, seed=7)
FIXTURE_SESSIONS = 500
FIXTURE_SESSION_SEED = 11
FIXTURE_SCORER_EPOCHS = 30
FIXTURE_SCORER_SEED = 3


def make_catalog(item_words: dict[str, list[str]],
                 interactions=(),
                 queries=()) -> Catalog:
    """Assemble an in-memory catalog without touching disk.

    interactions: (user_label, item_label, label, ts)
    queries: (user_label, [word strings], ts)
    """
    items, words, word_ids, item_ids = [], [], {}, {}
    for label, ws in item_words.items():
        wset = set()
        for w in ws:
            w = w.strip().lower()
            if w not in word_ids:
                word_ids[w] = len(words)
                words.append(w)
            wset.add(word_ids[w])
        item_ids[label] = len(items)
        items.append(Item(id=len(items), label=label, words=frozenset(wset)))

    users, user_ids = [], {}

    def uid(label):
        if label not in user_ids:
            user_ids[label] = len(users)
            users.append(label)
        return user_ids[label]

    log = InteractionLog()
    for ulabel, ilabel, lbl, ts in interactions:
        log.add(uid(ulabel), item_ids[ilabel], ts, lbl)
    for ulabel, qwords, ts in queries:
        fs = frozenset(word_ids[w] for w in qwords)
        log.queries.setdefault(uid(ulabel), []).append((fs, ts))
    log.sort()
    return Catalog(items=items, words=words, users=users, item_ids=item_ids,
                   word_ids=word_ids, user_ids=user_ids, log=log,
                   summary={})


def random_catalog(rng: random.Random, max_nodes: int = 50) -> Catalog:
    """Small random catalog for oracle-equivalence sweeps."""
    n_words = rng.randint(4, 9)
    n_items = rng.randint(2, 7)
    item_words = {}
    for i in range(n_items):
        k = rng.randint(1, min(4, n_words))
        ws = rng.sample(range(n_words), k)
        item_words[f"i{i}"] = [f"w{w}" for w in ws]
    queries = []
    for q in range(rng.randint(0, 3)):
        owner = rng.randrange(n_items)
        base = item_words[f"i{owner}"]
        k = rng.randint(1, len(base))
        queries.append((f"u{q % 2}", rng.sample(base, k), q))
    interactions = [("u0", "i0", 1, 0)]
    return make_catalog(item_words, interactions, queries)


@pytest.fixture(scope="session")
def milk_catalog():
    return make_catalog({
        "i_whole": ["milk", "whole", "branda"],
        "i_skim": ["milk", "skim"],
    })


@pytest.fixture(scope="session")
def milk_graph(milk_catalog):
    return build_graph(milk_catalog)


@pytest.fixture(scope="session")
def planted_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("planted")
    gen_synthetic(out_dir=out, **FIXTURE)
    return out


@pytest.fixture(scope="session")
def planted_catalog(planted_dir):
    return load_catalog_dir(planted_dir)


@pytest.fixture(scope="session")
def planted_split(planted_catalog):
    return temporal_split(planted_catalog.log)


@pytest.fixture(scope="session")
def planted_sessions(planted_catalog, planted_split):
    sessions = build_sessions(planted_catalog, planted_split.test,
                              seed=FIXTURE_SESSION_SEED)
    return sessions[:FIXTURE_SESSIONS]


@pytest.fixture(scope="session")
def planted_graph(planted_catalog):
    return build_graph(planted_catalog)


@pytest.fixture(scope="session")
def planted_matfact(planted_catalog, planted_split):
    model, losses = train_matfact(
        planted_split.train, planted_catalog.n_users, planted_catalog.n_items,
        epochs=FIXTURE_SCORER_EPOCHS, seed=FIXTURE_SCORER_SEED)
    return model, losses


@pytest.fixture(scope="session")
def planted_histories(planted_split):
    histories = {}
    for log in (planted_split.train, planted_split.valid):
        for user, qs in log.queries.items():
            histories.setdefault(user, []).extend(fs for fs, _ in qs)
    return histories
