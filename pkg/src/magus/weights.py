"""Edge-weight learning by one-layer feature propagation.

Every node gets an embedding (item nodes reuse the base recommender's item
vectors and stay frozen); one message-passing layer mixes each node with the
mean of its improvement neighbors minus the mean of its inhibition
neighbors. Supervision is a log-loss of user-embedding dot products against
browsing labels. Trained edge weights are the squashed similarity of the
propagated endpoint vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catalog import InteractionLog
from .graph import KIND_ITEM, R_PLUS, RelationalGraph
from .scorer import ScorerModel


class WeightTrainingError(RuntimeError):
    pass


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


@dataclass
class NodeEmbeddingTable:
    base: np.ndarray        # [n_nodes, d]
    w1: np.ndarray          # [d, d]
    w2: np.ndarray          # [d, d]
    item_mask: np.ndarray   # [n_nodes] bool, frozen rows

    @property
    def d(self) -> int:
        return self.base.shape[1]


@dataclass
class _Adjacency:
    """Flattened undirected neighbor lists: rows[i] aggregates cols[i]."""

    plus_rows: np.ndarray
    plus_cols: np.ndarray
    plus_count: np.ndarray   # [n_nodes], 1 where empty to keep division safe
    minus_rows: np.ndarray
    minus_cols: np.ndarray
    minus_count: np.ndarray


def _adjacency(graph: RelationalGraph) -> _Adjacency:
    n = graph.n_nodes
    pr, pc, mr, mc = [], [], [], []
    for e in graph.edges:
        if e.rel == R_PLUS:
            pr += [e.a, e.b]
            pc += [e.b, e.a]
        else:
            mr += [e.a, e.b]
            mc += [e.b, e.a]
    p_count = np.zeros(n)
    m_count = np.zeros(n)
    np.add.at(p_count, pr, 1.0)
    np.add.at(m_count, mr, 1.0)
    return _Adjacency(
        plus_rows=np.asarray(pr, dtype=np.int64),
        plus_cols=np.asarray(pc, dtype=np.int64),
        plus_count=np.maximum(p_count, 1.0),
        minus_rows=np.asarray(mr, dtype=np.int64),
        minus_cols=np.asarray(mc, dtype=np.int64),
        minus_count=np.maximum(m_count, 1.0),
    )


def init_table(graph: RelationalGraph, scorer: ScorerModel, d: int = 64,
               seed: int = 0) -> NodeEmbeddingTable:
    if scorer.item_vecs is None:
        raise WeightTrainingError("weight training needs a scorer with item embeddings")
    if scorer.item_vecs.shape[1] != d:
        d = scorer.item_vecs.shape[1]
    rng = np.random.default_rng(seed)
    limit = np.sqrt(6.0 / (2 * d))
    base = rng.uniform(-limit, limit, size=(graph.n_nodes, d))
    item_mask = np.zeros(graph.n_nodes, dtype=bool)
    for node in graph.nodes:
        if node.kind == KIND_ITEM:
            base[node.id] = scorer.item_vecs[node.item_ref]
            item_mask[node.id] = True
    w1 = rng.uniform(-limit, limit, size=(d, d))
    w2 = rng.uniform(-limit, limit, size=(d, d))
    return NodeEmbeddingTable(base=base, w1=w1, w2=w2, item_mask=item_mask)


def _neighbor_stats(E: np.ndarray, adj: _Adjacency):
    """Per-node neighbor-mean vectors and neighbor-mean dot products."""
    n, d = E.shape
    a_plus = np.zeros((n, d))
    a_minus = np.zeros((n, d))
    np.add.at(a_plus, adj.plus_rows, E[adj.plus_cols])
    np.add.at(a_minus, adj.minus_rows, E[adj.minus_cols])
    a_plus /= adj.plus_count[:, None]
    a_minus /= adj.minus_count[:, None]
    s_plus = np.zeros(n)
    s_minus = np.zeros(n)
    if len(adj.plus_rows):
        np.add.at(s_plus, adj.plus_rows,
                  np.einsum("ij,ij->i", E[adj.plus_rows], E[adj.plus_cols]))
    if len(adj.minus_rows):
        np.add.at(s_minus, adj.minus_rows,
                  np.einsum("ij,ij->i", E[adj.minus_rows], E[adj.minus_cols]))
    s_plus /= adj.plus_count
    s_minus /= adj.minus_count
    return a_plus, a_minus, s_plus, s_minus


def propagate_features(graph: RelationalGraph, table: NodeEmbeddingTable,
                       adj: _Adjacency | None = None) -> np.ndarray:
    """One rectified message-passing layer over the base embeddings.

    e_v <- relu( W1 e_v
                 + mean_{v' in N+} [W1 e_v' + (e_v . e_v') W2 e_v]
                 - mean_{v'' in N-} [W1 e_v'' + (e_v . e_v'') W2 e_v] )
    """
    adj = adj or _adjacency(graph)
    E = table.base
    a_plus, a_minus, s_plus, s_minus = _neighbor_stats(E, adj)
    A = E + a_plus - a_minus
    s = s_plus - s_minus
    Z = A @ table.w1.T + s[:, None] * (E @ table.w2.T)
    return np.maximum(Z, 0.0)


def _pairs(log: InteractionLog, graph: RelationalGraph):
    us, nodes, ys = [], [], []
    for user in log.users():
        for item, _ in log.positives.get(user, ()):
            us.append(user)
            nodes.append(graph.item_index[item])
            ys.append(1.0)
        for item, _ in log.negatives.get(user, ()):
            us.append(user)
            nodes.append(graph.item_index[item])
            ys.append(0.0)
    return (np.asarray(us, dtype=np.int64), np.asarray(nodes, dtype=np.int64),
            np.asarray(ys, dtype=np.float64))


def loss_and_grads(
    graph: RelationalGraph,
    table: NodeEmbeddingTable,
    user_vecs: np.ndarray,
    us: np.ndarray,
    target_nodes: np.ndarray,
    ys: np.ndarray,
    adj: _Adjacency | None = None,
):
    """Mean log-loss of sigmoid(e_u . propagated e_v) and exact gradients
    w.r.t. W1, W2, and the trainable (non-item) base embeddings."""
    adj = adj or _adjacency(graph)
    E = table.base
    a_plus, a_minus, s_plus, s_minus = _neighbor_stats(E, adj)
    A = E + a_plus - a_minus
    s = s_plus - s_minus
    ZW2 = E @ table.w2.T
    Z = A @ table.w1.T + s[:, None] * ZW2
    P = np.maximum(Z, 0.0)

    m = len(ys)
    logits = np.einsum("ij,ij->i", user_vecs[us], P[target_nodes])
    prob = _sigmoid(logits)
    eps = 1e-12
    loss = -np.mean(ys * np.log(prob + eps) + (1 - ys) * np.log(1 - prob + eps))

    dP = np.zeros_like(P)
    np.add.at(dP, target_nodes, ((prob - ys) / m)[:, None] * user_vecs[us])
    dZ = dP * (Z > 0.0)

    dW1 = dZ.T @ A
    dW2 = (s[:, None] * dZ).T @ E
    dA = dZ @ table.w1
    ds = np.einsum("ij,ij->i", dZ, ZW2)

    dE = dA.copy()
    dE += (s[:, None] * dZ) @ table.w2
    # neighbor-mean vector terms
    if len(adj.plus_rows):
        np.add.at(dE, adj.plus_cols,
                  dA[adj.plus_rows] / adj.plus_count[adj.plus_rows, None])
    if len(adj.minus_rows):
        np.subtract.at(dE, adj.minus_cols,
                       dA[adj.minus_rows] / adj.minus_count[adj.minus_rows, None])
    # neighbor-mean dot-product terms
    dE += ds[:, None] * (a_plus - a_minus)
    if len(adj.plus_rows):
        np.add.at(dE, adj.plus_cols,
                  (ds[adj.plus_rows] / adj.plus_count[adj.plus_rows])[:, None]
                  * E[adj.plus_rows])
    if len(adj.minus_rows):
        np.subtract.at(dE, adj.minus_cols,
                       (ds[adj.minus_rows] / adj.minus_count[adj.minus_rows])[:, None]
                       * E[adj.minus_rows])
    dE[table.item_mask] = 0.0
    return float(loss), dW1, dW2, dE


def edge_weights_from(graph: RelationalGraph, propagated: np.ndarray) -> list[float]:
    """Squashed endpoint similarity per edge, aligned with graph.edges.

    Similarity is the cosine of the propagated vectors: raw dot products
    saturate the squash for high-norm (item-anchored) nodes, which would
    collapse every item edge to weight 1.
    """
    norms = np.maximum(np.linalg.norm(propagated, axis=1), 1e-12)
    unit = propagated / norms[:, None]
    out = []
    for e in graph.edges:
        w = float(_sigmoid(unit[e.a] @ unit[e.b]))
        out.append(min(1.0, max(0.0, w)))
    return out


def train_weights(
    graph: RelationalGraph,
    scorer: ScorerModel,
    train_log: InteractionLog,
    epochs: int = 30,
    lr0: float = 1e-2,
    lr_min: float = 1e-5,
    d: int = 64,
    seed: int = 0,
) -> tuple[RelationalGraph, NodeEmbeddingTable, list[float]]:
    """Full-batch gradient descent on the propagation log-loss, then replace
    every improvement/inhibition edge weight with the learned similarity.

    Item-node embeddings and user embeddings stay frozen: they anchor the
    base recommender's geometry.
    """
    if scorer.user_vecs is None:
        raise WeightTrainingError("weight training needs a scorer with user embeddings")
    table = init_table(graph, scorer, d=d, seed=seed)
    adj = _adjacency(graph)
    us, target_nodes, ys = _pairs(train_log, graph)
    if not len(ys):
        raise WeightTrainingError("empty training log")

    losses = []
    for epoch in range(epochs):
        if epochs > 1:
            lr = lr0 * (lr_min / lr0) ** (epoch / (epochs - 1))
        else:
            lr = lr0
        loss, dW1, dW2, dE = loss_and_grads(
            graph, table, scorer.user_vecs, us, target_nodes, ys, adj)
        if not np.isfinite(loss):
            raise WeightTrainingError(f"training diverged at epoch {epoch}: loss={loss}")
        losses.append(loss)
        table.w1 -= lr * dW1
        table.w2 -= lr * dW2
        table.base -= lr * dE
    if losses:
        final, _, _, _ = loss_and_grads(
            graph, table, scorer.user_vecs, us, target_nodes, ys, adj)
        if not np.isfinite(final):
            raise WeightTrainingError("training diverged")
        if final > losses[0]:
            raise WeightTrainingError("final loss exceeds initial; lower the learning rate")
        losses.append(final)

    propagated = propagate_features(graph, table, adj)
    weighted = graph.with_weights(edge_weights_from(graph, propagated))
    return weighted, table, losses
