import math

import numpy as np
import pytest

from shared.config.settings import settings
from shared.utils.constants import RngStreams
from shared.utils.exceptions import SimulationException
from shared.utils.logging_config import get_logger, setup_logging
from hebart_engine.core.distributions import RngStream
from hebart_engine.core.simulate import simulate_grouped_data

setup_logging(
        log_level=settings.log_level,
        log_file=settings.log_file,
        log_to_console=settings.log_to_console
    )
logger = get_logger(__name__)


def generator_groups(dataset):
    """Generator group index (label - 1) of every row."""
    return np.array(dataset.label_table.labels)[dataset.group].astype(int) - 1


def generating_mean(dataset, truth):
    x = dataset.covariates[:, 0]
    j = generator_groups(dataset)
    total = np.zeros(dataset.n)
    for p in range(truth.trees):
        region = (x >= truth.cutpoints[p]).astype(int)
        total += truth.group_mus[p, region, j]
    return total


class TestSimulateGroupedData:

    def test_default_configuration_shape(self):
        dataset, truth = simulate_grouped_data(500, 10, 10, k1=8.0, k2=5.0, rng=RngStream(0, RngStreams.SIMULATION))
        assert dataset.n == 500
        assert dataset.n_covariates == 1
        assert dataset.n_groups == 10
        assert dataset.covariate_names == ("X1",)
        assert (dataset.response_name, dataset.group_name) == ("y", "group")
        assert truth.group_mus.shape == (10, 2, 10)
        assert np.all(np.isfinite(dataset.raw_response))
        assert set(dataset.label_table.labels) == {str(j) for j in range(1, 11)}

    def test_same_seed_is_bit_identical(self):
        first, truth_a = simulate_grouped_data(200, 5, 3, 8.0, 5.0, rng=RngStream(7))
        second, truth_b = simulate_grouped_data(200, 5, 3, 8.0, 5.0, rng=RngStream(7))
        np.testing.assert_array_equal(first.raw_response, second.raw_response)
        np.testing.assert_array_equal(first.covariates, second.covariates)
        assert truth_a.tau == truth_b.tau

    def test_small_k1_collapses_group_means(self):
        _, truth = simulate_grouped_data(300, 6, 4, k1=1e-12, k2=5.0, rng=RngStream(3), tau=1.0)
        spread = truth.group_mus - truth.mus[:, :, None]
        assert np.max(np.abs(spread)) < 1e-4

    def test_cutpoints_split_observed_values(self):
        dataset, truth = simulate_grouped_data(100, 4, 5, 8.0, 5.0, rng=RngStream(11))
        x = dataset.covariates[:, 0]
        for c in truth.cutpoints:
            assert c in x
            assert np.any(x < c) and np.any(x >= c)

    def test_response_is_generating_mean_plus_noise(self):
        tau = 2.0
        dataset, truth = simulate_grouped_data(100_000, 10, 1, 8.0, 5.0, rng=RngStream(5), tau=tau)
        noise = dataset.raw_response - generating_mean(dataset, truth)
        var = 1.0 / tau
        assert abs(noise.mean()) < 4 * math.sqrt(var / noise.size)
        assert abs(noise.var() - var) < 4 * var * math.sqrt(2.0 / noise.size)
        logger.info("✓ test_response_is_generating_mean_plus_noise passed")

    def test_group_frequencies(self):
        dataset, _ = simulate_grouped_data(20_000, 8, 1, 8.0, 5.0, rng=RngStream(6), tau=1.0)
        freq = np.bincount(generator_groups(dataset), minlength=8) / dataset.n
        se = math.sqrt((1 / 8) * (7 / 8) / dataset.n)
        assert np.all(np.abs(freq - 1 / 8) < 4 * se)

    def test_tau_drawn_from_prior_when_not_fixed(self):
        taus = [simulate_grouped_data(20, 2, 1, 8.0, 5.0, rng=RngStream(s))[1].tau for s in range(300)]
        # Ga(0.5, 1) has mean 0.5 and sd sqrt(0.5)
        assert abs(np.mean(taus) - 0.5) < 4 * math.sqrt(0.5 / 300)

    @pytest.mark.parametrize("n, groups, trees", [(1, 1, 1), (5, 10, 2), (10, 0, 1), (10, 2, 0)])
    def test_invalid_sizes(self, n, groups, trees):
        with pytest.raises(SimulationException):
            simulate_grouped_data(n, groups, trees, 8.0, 5.0, rng=RngStream(0))

    def test_smallest_accepted_size(self):
        dataset, truth = simulate_grouped_data(2, 1, 1, 8.0, 5.0, rng=RngStream(0))
        assert dataset.n == 2 and truth.trees == 1

    def test_invalid_scale(self):
        with pytest.raises(SimulationException):
            simulate_grouped_data(50, 2, 1, k1=-1.0, k2=5.0, rng=RngStream(0), tau=1.0)

    def test_flat_truth_has_every_value(self):
        _, truth = simulate_grouped_data(50, 3, 2, 8.0, 5.0, rng=RngStream(1))
        flat = truth.to_flat_dict()
        assert flat["sqrt_k1_over_tau"] == pytest.approx(math.sqrt(8.0 / truth.tau))
        assert len([k for k in flat if k.startswith("group_mu[")]) == 2 * 2 * 3
        assert flat["mu[1,0]"] == truth.mus[1, 0]
