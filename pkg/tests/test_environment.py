import numpy as np
import pytest

from graphbandit.environment import (
    FixedTableAdversary,
    StochasticGapAdversary,
    SwitchingAdversary,
    empirical_regret,
    realize_feedback,
    run_episode,
    substream,
)
from graphbandit.errors import ContractError, IngestError
from graphbandit.estimator import Pmf, sample_index
from graphbandit.graph import EdgeProbabilityTable, NominalGraph, out_neighbors


class StubLearner:
    """Plays a fixed index (or draws from a fixed pmf) and ignores feedback."""

    def __init__(self, index=None, pmf=None):
        self.index = index
        self.pmf = pmf
        self.rng = None
        self.events = []

    def reseed(self, seed):
        self.rng = np.random.Generator(np.random.Philox(seed))

    def select(self, t, graph=None, probs=None):
        if self.index is not None:
            return self.index
        return sample_index(self.pmf, self.rng)

    def update(self, feedback):
        self.events.append(feedback)


class TestRealizeFeedback:
    def test_certain_edges_reveal_full_out_neighborhood(self):
        g = NominalGraph.from_edges(4, [(1, 1), (1, 2), (1, 3), (2, 2), (3, 3), (4, 4)])
        p = EdgeProbabilityTable.constant(g, 1.0)
        rng = np.random.default_rng(0)
        event = realize_feedback(g, p, 1, np.array([0.1, 0.2, 0.3, 0.4]), rng, t=5)
        assert event.observed == ((1, 0.1), (2, 0.2), (3, 0.3))
        assert event.incurred_loss == 0.1
        assert event.t == 5

    def test_cross_edge_fires_at_its_probability(self):
        # Lone cross edge at probability 0.05; the empirical inclusion rate
        # over 1e5 rounds must sit within 4 sigma.
        eps = 0.05
        g = NominalGraph.from_edges(2, [(1, 1), (1, 2), (2, 2)])
        p = EdgeProbabilityTable.from_probs(g, np.array([[1.0, eps], [0.0, 1.0]]), epsilon=eps)
        rng = np.random.default_rng(7)
        n = 100_000
        hits = sum(2 in ev.observed_indices() for ev in (realize_feedback(g, p, 1, np.array([0.5, 0.5]), rng) for _ in range(n)))
        sigma = np.sqrt(eps * (1 - eps) / n)
        assert abs(hits / n - eps) <= 4 * sigma

    def test_own_loss_observed_at_self_loop_rate(self):
        g = NominalGraph.bandit(3)
        p = EdgeProbabilityTable.constant(g, 0.5)
        rng = np.random.default_rng(11)
        n = 100_000
        losses = np.array([0.3, 0.6, 0.9])
        hits = sum(1 in ev.observed_indices() for ev in (realize_feedback(g, p, 1, losses, rng) for _ in range(n)))
        sigma = np.sqrt(0.25 / n)
        assert abs(hits / n - 0.5) <= 4 * sigma

    def test_observed_subset_of_out_neighbors(self):
        rng = np.random.default_rng(13)
        for _ in range(300):
            k = int(rng.integers(2, 7))
            adj = rng.random((k, k)) < 0.4
            np.fill_diagonal(adj, True)
            g = NominalGraph(adj)
            p = EdgeProbabilityTable.uniform(g, 0.2, 0.9, rng)
            chosen = int(rng.integers(1, k + 1))
            event = realize_feedback(g, p, chosen, rng.random(k), rng)
            assert set(event.observed_indices()) <= set(out_neighbors(g, chosen))

    def test_loss_out_of_range_rejected(self):
        g = NominalGraph.bandit(2)
        p = EdgeProbabilityTable.constant(g, 1.0)
        with pytest.raises(ContractError):
            realize_feedback(g, p, 1, np.array([1.5, 0.0]), np.random.default_rng(0))


class TestAdversaries:
    def test_fixed_table_validation(self):
        with pytest.raises(ValueError):
            FixedTableAdversary(np.array([[0.5, 1.2]]))

    def test_fixed_table_csv_roundtrip(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,b\n0.1,0.9\n0.2,0.8\n")
        adv = FixedTableAdversary.from_csv(path)
        np.testing.assert_allclose(adv.table, [[0.1, 0.9], [0.2, 0.8]])

    def test_fixed_table_csv_bad_value(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("0.1,0.9\n0.2,oops\n")
        with pytest.raises(IngestError):
            FixedTableAdversary.from_csv(path)

    def test_gap_adversary_means(self):
        adv = StochasticGapAdversary(gap=0.2, best_arm=2)
        table = adv.materialize(50_000, 3, np.random.default_rng(3))
        means = table.mean(axis=0)
        assert means[1] == pytest.approx(0.3, abs=0.02)
        assert means[0] == pytest.approx(0.5, abs=0.02)

    def test_switching_adversary_rotates(self):
        adv = SwitchingAdversary(gap=0.5, period=10)
        table = adv.materialize(60, 3, np.random.default_rng(5))
        # blocks of 10 rounds; best arm cycles 1, 2, 3, 1, 2, 3
        block_means = table.reshape(6, 10, 3).mean(axis=1)
        assert np.argmin(block_means, axis=1).tolist() == [0, 1, 2, 0, 1, 2]


class TestRunEpisode:
    def test_single_expert_zero_regret(self):
        g = NominalGraph.bandit(1)
        p = EdgeProbabilityTable.constant(g, 1.0)
        trace = run_episode(StubLearner(index=1), FixedTableAdversary(np.full((10, 1), 0.7)), g, p, 10, seed=0)
        assert empirical_regret(trace) == pytest.approx(0.0)

    def test_forced_bad_arm_regret_is_horizon(self):
        g = NominalGraph.bandit(2)
        p = EdgeProbabilityTable.constant(g, 1.0)
        table = np.tile([1.0, 0.0], (10, 1))
        trace = run_episode(StubLearner(index=1), FixedTableAdversary(table), g, p, 10, seed=0)
        assert empirical_regret(trace) == pytest.approx(10.0)

    def test_identical_seeds_identical_traces(self):
        g = NominalGraph.complete(3)
        p = EdgeProbabilityTable.constant(g, 0.5)
        adv = StochasticGapAdversary(gap=0.1)
        pmf = Pmf(np.array([0.2, 0.3, 0.5]))
        t1 = run_episode(StubLearner(pmf=pmf), adv, g, p, 200, seed=123)
        t2 = run_episode(StubLearner(pmf=pmf), adv, g, p, 200, seed=123)
        np.testing.assert_array_equal(t1.chosen, t2.chosen)
        np.testing.assert_array_equal(t1.incurred, t2.incurred)
        np.testing.assert_array_equal(t1.loss_table, t2.loss_table)

    def test_loss_table_depends_only_on_seed(self):
        g = NominalGraph.complete(3)
        p = EdgeProbabilityTable.constant(g, 0.5)
        adv = StochasticGapAdversary(gap=0.1)
        t1 = run_episode(StubLearner(index=1), adv, g, p, 100, seed=9)
        t2 = run_episode(StubLearner(index=3), adv, g, p, 100, seed=9)
        np.testing.assert_array_equal(t1.loss_table, t2.loss_table)

    def test_own_loss_fraction_matches_pmf_weighted_self_loop_rate(self):
        g = NominalGraph.bandit(3)
        diag = np.diag([0.2, 0.5, 0.8])
        p = EdgeProbabilityTable.from_probs(g, diag, epsilon=0.2)
        pmf = Pmf(np.array([0.5, 0.3, 0.2]))
        learner = StubLearner(pmf=pmf)
        trace = run_episode(learner, StochasticGapAdversary(gap=0.1), g, p, 50_000, seed=31)
        seen = np.fromiter(
            (ev.chosen in ev.observed_indices() for ev in learner.events), dtype=bool
        )
        expected = float(pmf.probs @ np.diag(diag))
        sigma = np.sqrt(expected * (1 - expected) / seen.size)
        assert abs(seen.mean() - expected) <= 4 * sigma


class TestEmpiricalRegret:
    def test_identical_losses_zero(self):
        g = NominalGraph.bandit(2)
        p = EdgeProbabilityTable.constant(g, 1.0)
        table = np.full((20, 2), 0.4)
        trace = run_episode(StubLearner(index=2), FixedTableAdversary(table), g, p, 20, seed=0)
        assert empirical_regret(trace) == pytest.approx(0.0)

    def test_uniform_random_learner_on_one_good_arm(self):
        # K=2, one arm at loss 0 and one at loss 1: a uniform learner pays
        # about T/2 with a binomial 4-sigma band.
        g = NominalGraph.bandit(2)
        p = EdgeProbabilityTable.constant(g, 1.0)
        table = np.tile([0.0, 1.0], (1000, 1))
        learner = StubLearner(pmf=Pmf(np.array([0.5, 0.5])))
        trace = run_episode(learner, FixedTableAdversary(table), g, p, 1000, seed=77)
        assert abs(empirical_regret(trace) - 500) <= 4 * np.sqrt(1000 * 0.25)


def test_substreams_are_disjoint():
    a = substream(5, 0).random(8)
    b = substream(5, 1).random(8)
    assert not np.allclose(a, b)


class TestTimeVaryingGraphs:
    @staticmethod
    def _sources():
        k = 4
        complete = NominalGraph.complete(k)
        star = NominalGraph.from_edges(k, [(1, 1), (1, 2), (1, 3), (1, 4), (2, 2), (3, 3), (4, 4)])
        p_complete = EdgeProbabilityTable.constant(complete, 0.5)
        p_star = EdgeProbabilityTable.constant(star, 0.5)

        def graphs(t):
            return (star, p_star) if t % 2 else (complete, p_complete)

        return complete, p_complete, graphs

    def test_informed_family_accepts_round_graphs(self):
        from graphbandit.policies import LearnerConfig, make_learner
        from graphbandit.schedulers import FixedEta

        complete, p_complete, graphs = self._sources()
        adv = StochasticGapAdversary(gap=0.2)
        for algorithm in ("exp3-ip", "exp3-dom", "exp3"):
            probs = p_complete if algorithm == "exp3-ip" else None
            learner = make_learner(LearnerConfig(algorithm, FixedEta(0.2)), complete, probs=probs)
            trace = run_episode(learner, adv, complete, p_complete, 50, seed=3, graphs=graphs)
            assert trace.horizon == 50

    def test_uninformative_learners_reject_varying_graphs(self):
        from graphbandit.errors import ProtocolError
        from graphbandit.policies import LearnerConfig, make_learner
        from graphbandit.schedulers import FixedEta

        complete, p_complete, graphs = self._sources()
        for algorithm in ("exp3-up", "exp3-gr"):
            learner = make_learner(
                LearnerConfig(algorithm, FixedEta(0.2), min_observations=2), complete
            )
            with pytest.raises(ProtocolError, match="static"):
                run_episode(learner, StochasticGapAdversary(gap=0.2), complete, p_complete,
                            50, seed=3, graphs=graphs)
