import math

import numpy as np
import pytest
from scipy import stats

from shared.config.settings import settings
from shared.models.dataset import build_dataset
from shared.models.sampler_state import SamplerState
from shared.utils.exceptions import DistributionException
from shared.utils.logging_config import get_logger, setup_logging
from hebart_engine.core.marginal_likelihood import (
    collect_suff_stats,
    collect_tree_suff_stats,
    forest_log_marginal,
    node_log_marginal,
    tree_suff_stats,
)

setup_logging(
        log_level=settings.log_level,
        log_file=settings.log_file,
        log_to_console=settings.log_to_console
    )
logger = get_logger(__name__)


def dense_log_marginal(residuals, groups, tau, k1, k2, n_trees):
    """Log-density of MVN(0, tau^-1 (I + c1 MM^T + c2 11^T)) built densely."""
    n = residuals.size
    membership = (groups[:, None] == np.unique(groups)[None, :]).astype(float)
    c1 = 0.0 if k1 is None else k1 / n_trees
    cov = (np.eye(n) + c1 * membership @ membership.T + (k2 / n_trees) * np.ones((n, n))) / tau
    return stats.multivariate_normal(mean=np.zeros(n), cov=cov).logpdf(residuals)


def all_rows(n):
    return np.arange(n)


class TestCollectSuffStats:

    def test_hand_sums(self):
        s = collect_suff_stats(np.array([1.0, 2.0, 3.0]), all_rows(3), np.array([1, 1, 2]))
        assert s.group_stats() == {1: (2, 3.0), 2: (1, 3.0)}
        assert (s.n, s.total, s.sum_sq) == (3, 6.0, 14.0)

    def test_single_row(self):
        s = collect_suff_stats(np.array([0.0, -1.5]), np.array([1]), np.array([0, 4]))
        assert s.n == 1
        assert s.sum_sq == pytest.approx(2.25)
        assert s.group_stats() == {4: (1, -1.5)}

    def test_matches_naive_loop(self):
        rng = np.random.default_rng(2)
        r = rng.normal(size=200)
        g = rng.integers(0, 7, size=200)
        rows = np.flatnonzero(rng.random(200) < 0.6)
        s = collect_suff_stats(r, rows, g)
        naive_counts, naive_sums = {}, {}
        for i in rows:
            naive_counts[g[i]] = naive_counts.get(g[i], 0) + 1
            naive_sums[g[i]] = naive_sums.get(g[i], 0.0) + r[i]
        for group, (count, total) in s.group_stats().items():
            assert count == naive_counts[group]
            assert total == pytest.approx(naive_sums[group], abs=1e-12)
        assert s.n == int(np.sum(s.counts)) == rows.size
        assert s.total == pytest.approx(float(np.sum(s.sums)), abs=1e-12)
        assert s.sum_sq >= s.total ** 2 / s.n

    def test_empty_node(self):
        with pytest.raises(DistributionException):
            collect_suff_stats(np.ones(3), np.array([], dtype=int), np.zeros(3, dtype=int))

    def test_tree_pass_matches_per_node(self):
        rng = np.random.default_rng(9)
        r = rng.normal(size=100)
        g = rng.integers(0, 4, size=100)
        assignment = rng.choice([1, 3, 4], size=100)
        by_tree = collect_tree_suff_stats(r, assignment, g, 4)
        assert sorted(by_tree) == [1, 3, 4]
        for node_id, s in by_tree.items():
            direct = collect_suff_stats(r, assignment == node_id, g)
            np.testing.assert_array_equal(s.groups, direct.groups)
            np.testing.assert_array_equal(s.counts, direct.counts)
            np.testing.assert_allclose(s.sums, direct.sums, atol=1e-12)
            assert s.sum_sq == pytest.approx(direct.sum_sq, abs=1e-12)


class TestNodeLogMarginal:

    def test_independent_limit(self):
        r = np.array([0.3, -1.2, 2.0, 0.5])
        s = collect_suff_stats(r, all_rows(4), np.array([0, 1, 0, 2]))
        tau = 1.7
        expected = 2.0 * math.log(tau / (2 * math.pi)) - 0.5 * tau * float(r @ r)
        assert node_log_marginal(s, tau, 1e-12, 1e-12, 1) == pytest.approx(expected, abs=1e-9)

    def test_scalar_variance_two(self):
        s = collect_suff_stats(np.array([2.0]), all_rows(1), np.array([0]))
        expected = -0.5 * math.log(2 * math.pi) - 0.5 * math.log(2.0) - 1.0
        assert node_log_marginal(s, 1.0, 1.0, 1e-15, 1) == pytest.approx(expected, abs=1e-9)

    @pytest.mark.parametrize("layout,cases", [("random", 300), ("one_group", 100), ("singletons", 100)])
    def test_matches_dense_oracle(self, layout, cases):
        rng = np.random.default_rng({"random": 1, "one_group": 2, "singletons": 3}[layout])
        for _ in range(cases):
            n = int(rng.integers(1, 41))
            if layout == "one_group":
                g = np.zeros(n, dtype=int)
            elif layout == "singletons":
                g = rng.permutation(n)
            else:
                g = rng.integers(0, int(rng.integers(1, 7)), size=n)
            r = rng.normal(scale=rng.uniform(0.2, 3.0), size=n) + rng.normal(size=n)[g % n]
            tau, k1, k2 = rng.uniform(0.2, 5.0), rng.uniform(0.1, 20.0), rng.uniform(0.1, 10.0)
            n_trees = int(rng.integers(1, 20))
            s = collect_suff_stats(r, all_rows(n), g)
            fast = node_log_marginal(s, tau, k1, k2, n_trees)
            assert fast == pytest.approx(dense_log_marginal(r, g, tau, k1, k2, n_trees), abs=1e-8)
        logger.info(f"✓ dense oracle agreement ({layout}, {cases} cases) passed")

    def test_bart_mode_matches_dense_oracle(self):
        rng = np.random.default_rng(31)
        r = rng.normal(size=12)
        g = rng.integers(0, 3, size=12)
        s = collect_suff_stats(r, all_rows(12), g)
        assert node_log_marginal(s, 2.0, None, 5.0, 4) == pytest.approx(
            dense_log_marginal(r, g, 2.0, None, 5.0, 4), abs=1e-8)

    def test_group_permutation_invariance(self):
        rng = np.random.default_rng(7)
        r = rng.normal(size=30)
        g = rng.integers(0, 5, size=30)
        relabel = np.array([3, 0, 4, 1, 2])
        base = node_log_marginal(collect_suff_stats(r, all_rows(30), g), 1.3, 4.0, 2.0, 5)
        permuted = node_log_marginal(collect_suff_stats(r, all_rows(30), relabel[g]), 1.3, 4.0, 2.0, 5)
        assert permuted == pytest.approx(base, abs=1e-12)

    def test_between_group_spread_favours_interior_k1(self):
        rng = np.random.default_rng(13)
        g = np.repeat(np.arange(6), 8)
        r = np.array([-3.0, -1.5, 0.0, 1.5, 3.0, 4.0])[g] + rng.normal(scale=0.3, size=g.size)
        s = collect_suff_stats(r, all_rows(g.size), g)
        grid = np.geomspace(1e-3, 1e4, 60)
        curve = np.array([node_log_marginal(s, 1.0, k1, 1.0, 1) for k1 in grid])
        dense = np.array([dense_log_marginal(r, g, 1.0, k1, 1.0, 1) for k1 in grid])
        np.testing.assert_allclose(curve, dense, atol=1e-6)
        peak = int(np.argmax(curve))
        assert 0 < peak < grid.size - 1

    def test_rejects_non_positive_scales(self):
        s = collect_suff_stats(np.ones(2), all_rows(2), np.zeros(2, dtype=int))
        for tau, k1, k2 in [(0.0, 1.0, 1.0), (1.0, -1.0, 1.0), (1.0, 1.0, 0.0)]:
            with pytest.raises(DistributionException):
                node_log_marginal(s, tau, k1, k2, 1)


class TestForestLogMarginal:

    @pytest.fixture
    def dataset(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(size=(40, 2))
        return build_dataset(x, rng.normal(size=40), [str(v) for v in rng.integers(0, 4, 40)])

    def test_stumps_sum_single_node_marginals(self, dataset):
        state = SamplerState.initial(dataset, num_trees=3, tau=1.5, k1=2.0)
        state.tree_fits = [np.full(dataset.n, v) for v in (0.1, -0.2, 0.3)]
        state.fitted = sum(state.tree_fits)
        expected = 0.0
        for p in range(3):
            r = state.partial_residuals(dataset.response, p)
            expected += node_log_marginal(collect_suff_stats(r, all_rows(dataset.n), dataset.group), 1.5, 2.0, 5.0, 3)
        assert forest_log_marginal(state, dataset, 2.0, 5.0) == pytest.approx(expected, abs=1e-10)

    def test_pure_function(self, dataset):
        state = SamplerState.initial(dataset, num_trees=2, tau=1.0, k1=1.0)
        assert forest_log_marginal(state, dataset, 3.0, 5.0) == forest_log_marginal(state, dataset, 3.0, 5.0)

    def test_single_tree_uses_response(self, dataset):
        state = SamplerState.initial(dataset, num_trees=1, tau=0.8, k1=4.0)
        tree = state.forest[0].grow(0, 1, float(np.median(dataset.covariates[:, 1])))
        state.forest[0] = tree
        state.node_assignment[0] = tree.route_rows(dataset.covariates)
        expected = sum(
            node_log_marginal(s, 0.8, 4.0, 5.0, 1)
            for s in tree_suff_stats(tree, dataset.response, dataset).values()
        )
        assert forest_log_marginal(state, dataset, 4.0, 5.0) == pytest.approx(expected, abs=1e-10)
