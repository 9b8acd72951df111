"""
Synthetic grouped data from a sum of single-split trees with group-specific region means.

For each of P trees a cutpoint r splits X ~ Uniform(0, 1) into two regions;
region means are mu_pr ~ N(0, (k2/P)/tau) and group means are
mu_jpr ~ N(mu_pr, (k1/P)/tau); y = sum_p mu_{j,p,r(x)} + N(0, 1/tau).
"""

from typing import Optional

import numpy as np

from hebart_engine.core.distributions import (
    RngStream,
    sample_gamma,
    sample_multinomial_indices,
    sample_normal_vector,
)
from shared.models.dataset import Dataset, build_dataset
from shared.models.simulation_truth import SimulationTruth
from shared.utils.exceptions import DistributionException, SimulationException
from shared.utils.logging_config import get_logger

logger = get_logger(__name__)

DEFAULT_TAU_PRIOR = (0.5, 1.0)


def simulate_grouped_data(
    n: int,
    n_groups: int,
    n_trees: int,
    k1: float,
    k2: float,
    tau_prior: tuple[float, float] = DEFAULT_TAU_PRIOR,
    rng: Optional[RngStream] = None,
    tau: Optional[float] = None,
) -> tuple[Dataset, SimulationTruth]:
    """
    Draw a grouped dataset and its generating values.

    Args:
        n: Number of rows
        n_groups: Number of equiprobable groups J, labelled "1".."J"
        n_trees: Number of single-split trees P
        k1: Group-mean precision scaling
        k2: Region-mean precision scaling
        tau_prior: (shape, rate) of the Gamma prior tau is drawn from
        rng: Random source, seed 0 stream 0 when omitted
        tau: Fixed noise precision instead of a prior draw

    Returns:
        (Dataset with covariate "X1", response "y" and group column "group", truth)

    Raises:
        SimulationException: On invalid sizes or scale parameters
    """
    if n_groups < 1 or n_trees < 1 or n < max(n_groups, 2):
        raise SimulationException(
            f"Need n >= max(groups, 2), groups >= 1 and trees >= 1; got n={n}, groups={n_groups}, trees={n_trees}"
        )
    rng = rng or RngStream(0)

    try:
        if tau is None:
            tau = sample_gamma(tau_prior[0], tau_prior[1], rng)
        x = rng.generator.uniform(0.0, 1.0, size=n)
        group = sample_multinomial_indices(np.ones(n_groups), n, rng)

        candidates = np.unique(x)[1:]
        cutpoints = np.empty(n_trees)
        mus = np.empty((n_trees, 2))
        group_mus = np.empty((n_trees, 2, n_groups))
        y = np.zeros(n)
        for p in range(n_trees):
            cutpoints[p] = candidates[rng.integer(candidates.size)]
            region = (x >= cutpoints[p]).astype(np.int64)
            mus[p] = sample_normal_vector(0.0, tau * n_trees / k2, 2, rng)
            for r in range(2):
                group_mus[p, r] = sample_normal_vector(mus[p, r], tau * n_trees / k1, n_groups, rng)
            y += group_mus[p, region, group]
        y += sample_normal_vector(0.0, tau, n, rng)
    except DistributionException as e:
        raise SimulationException(f"Invalid simulation parameters: {e}") from e

    dataset = build_dataset(
        covariates=x.reshape(-1, 1),
        raw_response=y,
        raw_groups=[str(g + 1) for g in group],
        covariate_names=("X1",),
        response_name="y",
        group_name="group",
    )
    truth = SimulationTruth(
        tau=float(tau),
        k1=float(k1),
        k2=float(k2),
        n=n,
        groups=n_groups,
        trees=n_trees,
        seed=rng.seed,
        cutpoints=cutpoints,
        mus=mus,
        group_mus=group_mus,
    )
    logger.info(
        "Simulated grouped dataset",
        extra={"n": n, "groups": n_groups, "trees": n_trees, "tau": round(float(tau), 6), "seed": rng.seed},
    )
    return dataset, truth
