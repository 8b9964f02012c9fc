import math

import pytest

from magus.catalog import SessionSpec
from magus.graph import build_graph, node_lookup
from magus.propagation import (
    Feedback,
    PropagationConfig,
    Recommendation,
    RoundRecord,
    SessionTranscript,
    run_session,
)
from magus.simulator import (
    AMBIGUOUS,
    STRICT,
    UserAgent,
    compute_ra,
    compute_sa,
    compute_sac,
    round_accuracy,
    run_benchmark,
)

from conftest import make_catalog
from test_propagation import FakeScorer


def rec(node, kind="query", pos=1):
    return Recommendation(node=node, kind=kind, position=pos, score_at_emit=0.5)


class TestAgentRespond:
    def _setup(self, targets):
        c = make_catalog({
            "i1": ["m", "w", "b"],
            "i2": ["m", "s"],
            "i3": ["x", "y"],
        })
        g = build_graph(c)
        s = SessionSpec(user=0, candidates=(0, 1, 2),
                        targets=tuple(c.item_ids[t] for t in targets))
        return c, g, s

    def test_strict_yes_on_contained_query(self):
        c, g, s = self._setup(["i1"])
        agent = UserAgent(STRICT, g, s)
        qm = node_lookup(g, {c.word_ids["m"]})
        out = agent.respond([rec(qm, "query", 1), rec(g.item_index[1], "item", 2)])
        assert [f.response for f in out] == ["yes", "no"]

    def test_strict_all_no(self):
        c, g, s = self._setup(["i1"])
        agent = UserAgent(STRICT, g, s)
        qx = node_lookup(g, {c.word_ids["x"]})
        out = agent.respond([
            rec(g.item_index[1], "item", 1),
            rec(g.item_index[2], "item", 2),
            rec(qx, "query", 3),
        ])
        assert [f.response for f in out] == ["no", "no", "no"]

    def test_strict_takes_highest_position(self):
        c, g, s = self._setup(["i1"])
        agent = UserAgent(STRICT, g, s)
        qm = node_lookup(g, {c.word_ids["m"]})
        qw = node_lookup(g, {c.word_ids["w"]})
        out = agent.respond([rec(qw, "query", 1), rec(qm, "query", 2)])
        assert [f.response for f in out] == ["yes", "no"]

    def test_ambiguous_not_care_on_shared_query(self):
        c, g, s = self._setup(["i1", "i2"])
        agent = UserAgent(AMBIGUOUS, g, s)
        qm = node_lookup(g, {c.word_ids["m"]})  # m sits in both targets
        out = agent.respond([rec(qm, "query", 1)])
        assert [f.response for f in out] == ["not_care"]

    def test_ambiguous_yes_on_unique_query(self):
        c, g, s = self._setup(["i1", "i2"])
        agent = UserAgent(AMBIGUOUS, g, s)
        qw = node_lookup(g, {c.word_ids["w"]})  # only in i1
        out = agent.respond([rec(qw, "query", 1)])
        assert [f.response for f in out] == ["yes"]

    def test_ambiguous_item_yes_unaffected(self):
        c, g, s = self._setup(["i1", "i2"])
        agent = UserAgent(AMBIGUOUS, g, s)
        out = agent.respond([rec(g.item_index[0], "item", 1)])
        assert [f.response for f in out] == ["yes"]

    def test_nontarget_item_gets_no_even_if_words_contained(self):
        # i2={m,s} is not a target; its words are irrelevant for item entries
        c, g, s = self._setup(["i1"])
        agent = UserAgent(STRICT, g, s)
        out = agent.respond([rec(g.item_index[1], "item", 1)])
        assert [f.response for f in out] == ["no"]

    def test_purity(self):
        c, g, s = self._setup(["i1"])
        agent = UserAgent(STRICT, g, s)
        qm = node_lookup(g, {c.word_ids["m"]})
        entries = [rec(qm, "query", 1)]
        assert agent.respond(entries) == agent.respond(entries)

    def test_at_most_one_yes(self):
        c, g, s = self._setup(["i1", "i2"])
        agent = UserAgent(STRICT, g, s)
        out = agent.respond([rec(g.item_index[0], "item", 1),
                             rec(g.item_index[1], "item", 2)])
        assert [f.response for f in out] == ["yes", "no"]


def make_transcript(yes_positions, outcome="exhausted", success_round=None, n=3):
    """yes_positions: per round, click position or None."""
    rounds = []
    for k, pos in enumerate(yes_positions, start=1):
        entries = [Recommendation(node=100 + 10 * k + p, kind="query", position=p,
                                  score_at_emit=0.5) for p in range(1, n + 1)]
        fbs = []
        for e in entries:
            resp = "yes" if pos == e.position else "no"
            fbs.append(Feedback(e.node, resp))
        rounds.append(RoundRecord(round=k, entries=entries, feedbacks=fbs,
                                  outcome="pending"))
    t = SessionTranscript(user=0, session=None, rounds=rounds, outcome=outcome,
                          success_round=success_round)
    return t


class TestMetrics:
    def test_ra_position_values(self):
        assert round_accuracy(1) == pytest.approx(1.0, abs=1e-12)
        assert round_accuracy(2) == pytest.approx(1.0 / math.log2(3), abs=1e-12)
        assert round_accuracy(3) == pytest.approx(0.5, abs=1e-12)

    def test_ra_averages_over_all_rounds(self):
        t = make_transcript([1, None, 3])
        assert compute_ra([t], k_max=5) == pytest.approx((1.0 + 0.0 + 0.5) / 3)

    def test_ra_truncates_at_kmax(self):
        t = make_transcript([None, None, 1])
        assert compute_ra([t], k_max=2) == 0.0

    def test_sa_boundary_inclusive(self):
        t = make_transcript([None] * 3, outcome="success", success_round=3)
        assert compute_sa([t], k_max=3) == 1.0
        assert compute_sa([t], k_max=2) == 0.0

    def test_sa_exhausted_zero(self):
        t = make_transcript([None] * 2, outcome="exhausted")
        assert compute_sa([t], k_max=5) == 0.0

    def test_sa_monotone_in_k(self):
        ts = [
            make_transcript([1], outcome="success", success_round=1),
            make_transcript([None, 1], outcome="success", success_round=2),
            make_transcript([None] * 5, outcome="exhausted"),
            make_transcript([None, None, None, 1], outcome="success", success_round=4),
        ]
        values = [compute_sa(ts, k) for k in range(1, 6)]
        assert values == sorted(values)

    def test_sac_rank_cases(self):
        c = make_catalog({f"i{k}": ["w"] for k in range(30)})
        scorer = FakeScorer({i: 1.0 - i / 100 for i in range(30)})
        sessions = [SessionSpec(user=0, candidates=tuple(range(30)), targets=(0,))]
        assert compute_sac(scorer, sessions, n=3) == 1.0
        sessions = [SessionSpec(user=0, candidates=tuple(range(30)), targets=(3,))]
        assert compute_sac(scorer, sessions, n=3) == 0.0  # target ranked 4th
        sessions = [SessionSpec(user=0, candidates=tuple(range(30)),
                                targets=tuple(range(30)))]
        assert compute_sac(scorer, sessions, n=3) == 1.0

    def test_ra_bounds_property(self):
        for pos in range(1, 50):
            v = round_accuracy(pos)
            assert 0 < v <= 1.0
            assert (v == 1.0) == (pos == 1)


class TestSuccessConsistency:
    def test_sa_iff_yes_on_target_item(self):
        c = make_catalog({"i1": ["a", "b"], "i2": ["c", "d"]})
        g = build_graph(c)
        s = SessionSpec(user=0, candidates=(0, 1), targets=(0,))
        cfg = PropagationConfig(n=2, k_max=4)
        t = run_session(g, FakeScorer({0: 0.9, 1: 0.1}), s, UserAgent(STRICT, g, s), cfg)
        yes_on_target = any(
            f.response == "yes" and f.node == g.item_index[0]
            for r in t.rounds for f in r.feedbacks
        )
        assert (t.outcome == "success") == yes_on_target
        assert compute_sa([t], 4) == (1.0 if yes_on_target else 0.0)


class TestRunBenchmark:
    def _inputs(self):
        c = make_catalog({
            "i1": ["a", "b"], "i2": ["b", "c"], "i3": ["c", "d"], "i4": ["d", "e"],
        })
        g = build_graph(c)
        sessions = [
            SessionSpec(user=0, candidates=(0, 1, 2, 3), targets=(0,)),
            SessionSpec(user=1, candidates=(0, 1, 2, 3), targets=(2, 3)),
        ]
        scorer = FakeScorer({0: 0.8, 1: 0.6, 2: 0.4, 3: 0.2})
        return g, scorer, sessions

    def test_grid_over_kmax(self):
        g, scorer, sessions = self._inputs()
        configs = [PropagationConfig(n=3, k_max=k) for k in (2, 3, 4, 5)]
        reports = run_benchmark(g, scorer, sessions, [STRICT], configs)
        assert len(reports) == 4
        sa = [r.sa for r, _ in reports]
        assert sa == sorted(sa)

    def test_grid_over_n(self):
        g, scorer, sessions = self._inputs()
        configs = [PropagationConfig(n=n, k_max=3) for n in (2, 3, 4, 5)]
        reports = run_benchmark(g, scorer, sessions, [STRICT], configs)
        assert len(reports) == 4

    def test_empty_sessions_error(self):
        g, scorer, _ = self._inputs()
        with pytest.raises(ValueError):
            run_benchmark(g, scorer, [], [STRICT], [PropagationConfig()])

    def test_report_aggregates_match_breakdown(self):
        g, scorer, sessions = self._inputs()
        [(report, transcripts)] = run_benchmark(
            g, scorer, sessions, [STRICT], [PropagationConfig(n=2, k_max=3)])
        wins = [
            1.0 if p["outcome"] == "success" and p["success_round"] <= 3 else 0.0
            for p in report.per_session
        ]
        assert report.sa == pytest.approx(sum(wins) / len(wins))
        assert report.n_sessions == 2
        assert report.config["agent"] == STRICT
