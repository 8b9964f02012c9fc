"""Base recommenders that seed the graph with per-item relevance scores.

Two kinds: a user-independent popularity baseline and a logistic matrix
factorization over (user, item) ids trained on click/no-click labels. Both
emit scores in [0, 1]; the factorization additionally exposes user and item
embeddings for the edge-weight trainer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .catalog import InteractionLog

COLD_SCORE = 0.5
_MAGIC = b"MAGUSSCR1\n"


class ScorerError(RuntimeError):
    pass


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


@dataclass
class ScorerModel:
    kind: str  # "popularity" | "matfact"
    item_pop: np.ndarray | None = None          # popularity: [n_items] in [0,1]
    user_vecs: np.ndarray | None = None         # matfact: [n_users, d]
    item_vecs: np.ndarray | None = None         # matfact: [n_items, d]

    @property
    def d(self) -> int:
        return 0 if self.item_vecs is None else self.item_vecs.shape[1]

    def score(self, user: int, item: int) -> float:
        if self.kind == "popularity":
            if 0 <= item < len(self.item_pop):
                return float(self.item_pop[item])
            return 0.0
        if not (0 <= user < len(self.user_vecs)) or not (0 <= item < len(self.item_vecs)):
            return COLD_SCORE
        return float(_sigmoid(self.user_vecs[user] @ self.item_vecs[item]))


def score_items(model: ScorerModel, user: int, candidates) -> list[float]:
    return [model.score(user, item) for item in candidates]


def train_popularity(train_log: InteractionLog, n_items: int) -> ScorerModel:
    """score(u, v) = clicks(v) / max clicks; never-clicked items score 0."""
    clicks = np.zeros(n_items, dtype=np.float64)
    for events in train_log.positives.values():
        for item, _ in events:
            clicks[item] += 1.0
    peak = clicks.max() if len(clicks) else 0.0
    pop = clicks / peak if peak > 0 else clicks
    return ScorerModel(kind="popularity", item_pop=pop)


def _pairs(log: InteractionLog) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    us, vs, ys = [], [], []
    for user in log.users():
        for item, _ in log.positives.get(user, ()):
            us.append(user)
            vs.append(item)
            ys.append(1.0)
        for item, _ in log.negatives.get(user, ()):
            us.append(user)
            vs.append(item)
            ys.append(0.0)
    return (np.asarray(us, dtype=np.int64), np.asarray(vs, dtype=np.int64),
            np.asarray(ys, dtype=np.float64))


def logloss_and_grads(
    U: np.ndarray, V: np.ndarray,
    us: np.ndarray, vs: np.ndarray, ys: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean log-loss with L2 on the touched embeddings, and its exact gradients."""
    n = len(ys)
    p = _sigmoid(np.einsum("ij,ij->i", U[us], V[vs]))
    eps = 1e-12
    loss = -np.mean(ys * np.log(p + eps) + (1 - ys) * np.log(1 - p + eps))
    loss += l2 * (np.sum(U[us] ** 2) + np.sum(V[vs] ** 2)) / n
    g = (p - ys)[:, None] / n
    dU = np.zeros_like(U)
    dV = np.zeros_like(V)
    np.add.at(dU, us, g * V[vs] + (2 * l2 / n) * U[us])
    np.add.at(dV, vs, g * U[us] + (2 * l2 / n) * V[vs])
    return float(loss), dU, dV


def train_matfact(
    train_log: InteractionLog,
    n_users: int,
    n_items: int,
    d: int = 64,
    epochs: int = 30,
    lr0: float = 5e-2,
    lr_min: float = 5e-3,
    l2: float = 4e-4,
    batch_size: int = 1000,
    seed: int = 0,
) -> tuple[ScorerModel, list[float]]:
    """Fit logistic matrix factorization by minibatch gradient descent.

    Batch gradients are per-sample sums, so lr is a per-sample rate; it
    decays geometrically from lr0 to lr_min. Returns the model and the
    per-epoch training loss trace. Non-finite loss aborts.
    """
    us, vs, ys = _pairs(train_log)
    if not len(ys) or ys.min() == ys.max():
        raise ScorerError("training log needs at least one positive and one negative")
    rng = np.random.default_rng(seed)
    U = rng.normal(0.0, 0.1, size=(n_users, d))
    V = rng.normal(0.0, 0.1, size=(n_items, d))

    losses = []
    order = np.arange(len(ys))
    for epoch in range(epochs):
        if epochs > 1:
            lr = lr0 * (lr_min / lr0) ** (epoch / (epochs - 1))
        else:
            lr = lr0
        rng.shuffle(order)
        for lo in range(0, len(order), batch_size):
            idx = order[lo:lo + batch_size]
            bu, bv, by = us[idx], vs[idx], ys[idx]
            p = _sigmoid(np.einsum("ij,ij->i", U[bu], V[bv]))
            g = (p - by)[:, None]
            dU = np.zeros_like(U)
            dV = np.zeros_like(V)
            np.add.at(dU, bu, g * V[bv] + 2 * l2 * U[bu])
            np.add.at(dV, bv, g * U[bu] + 2 * l2 * V[bv])
            U -= lr * dU
            V -= lr * dV
        loss, _, _ = logloss_and_grads(U, V, us, vs, ys, l2)
        if not np.isfinite(loss):
            raise ScorerError(f"training diverged at epoch {epoch}: loss={loss}")
        losses.append(loss)
    if losses and losses[-1] > losses[0]:
        raise ScorerError("final loss exceeds first-epoch loss; lower the learning rate")
    return ScorerModel(kind="matfact", user_vecs=U, item_vecs=V), losses


def save_scorer(model: ScorerModel, path: str | Path) -> None:
    header = {"kind": model.kind, "d": model.d}
    blocks = []
    if model.kind == "popularity":
        header["n_items"] = len(model.item_pop)
        blocks.append(np.ascontiguousarray(model.item_pop, dtype=np.float64))
    else:
        header["n_users"] = len(model.user_vecs)
        header["n_items"] = len(model.item_vecs)
        blocks.append(np.ascontiguousarray(model.user_vecs, dtype=np.float64))
        blocks.append(np.ascontiguousarray(model.item_vecs, dtype=np.float64))
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        for b in blocks:
            fh.write(b.tobytes())


def load_scorer(path: str | Path) -> ScorerModel:
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise ScorerError(f"{path}: not a scorer snapshot")
        header = json.loads(fh.readline())
        raw = fh.read()
    if header["kind"] == "popularity":
        pop = np.frombuffer(raw, dtype=np.float64, count=header["n_items"]).copy()
        return ScorerModel(kind="popularity", item_pop=pop)
    d, nu, ni = header["d"], header["n_users"], header["n_items"]
    U = np.frombuffer(raw, dtype=np.float64, count=nu * d).reshape(nu, d).copy()
    V = np.frombuffer(raw[nu * d * 8:], dtype=np.float64, count=ni * d).reshape(ni, d).copy()
    return ScorerModel(kind="matfact", user_vecs=U, item_vecs=V)
