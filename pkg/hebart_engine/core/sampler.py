"""
Metropolis-within-Gibbs sampler for HE-BART and its BART special case.

One sweep visits every tree p in order:
  1. MH update of the tree structure on the partial residuals R_p,
  2. a draw of mu_b for every terminal (group means integrated out),
  3. a draw of mu_bj given mu_b for every group present in the terminal,
then draws tau and, in HE-BART mode, runs the k1 Metropolis-Hastings step.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from tqdm import tqdm

from hebart_engine.core.distributions import (
    RngStream,
    metropolis_accept,
    sample_gamma,
    sample_normal,
    sample_uniform,
    weibull_logpdf,
)
from hebart_engine.core.marginal_likelihood import (
    NodeSuffStats,
    collect_tree_suff_stats,
    forest_suff_stats,
    sum_forest_log_marginal,
    tree_log_marginal,
)
from hebart_engine.core.tree_ops import MoveProposal, log_tree_prior, propose
from shared.models.dataset import Dataset
from shared.models.hyperparams import Hyperparams
from shared.models.posterior_draws import PosteriorDraws
from shared.models.sampler_state import SamplerState
from shared.utils.constants import FitMode
from shared.utils.exceptions import DistributionException, SamplerException
from shared.utils.logging_config import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class SweepProgress:
    """What the progress observer sees after each sweep."""
    iteration: int
    tau: float
    k1: Optional[float]
    accepted: tuple[bool, ...]
    k1_accepted: bool = False


ProgressCallback = Callable[[SweepProgress], None]


@dataclass
class ChainConfig:
    """
    Run options of one chain.

    update_trees=False keeps every tree a stump and update_tau=False pins tau
    at initial_tau; both exist for conjugate checks against closed forms.
    """
    hyperparams: Hyperparams
    mode: FitMode = FitMode.HEBART
    store_trees: bool = True
    progress_callback: Optional[ProgressCallback] = None
    show_progress: bool = False
    update_trees: bool = True
    update_tau: bool = True
    initial_tau: Optional[float] = None
    label: str = "chain"

    @property
    def grouped(self) -> bool:
        return self.mode == FitMode.HEBART


# ---------- conditional posteriors ----------

def partial_residuals(state: SamplerState, dataset: Dataset, p: int) -> np.ndarray:
    """y minus the contribution of every tree except p."""
    return state.partial_residuals(dataset.response, p)


def node_mu_posterior(
    stats: NodeSuffStats, tau: float, k1: Optional[float], k2: float, n_trees: int
) -> tuple[float, float]:
    """
    (mean, precision) of mu_b with the node's group means integrated out.

    mean = t / (s + P/k2), precision = tau (s + P/k2) where s and t are the
    group-shrunk count and sum of the node's residuals.
    """
    c1 = 0.0 if k1 is None else k1 / n_trees
    d = 1.0 + c1 * stats.counts
    s = float(np.sum(stats.counts / d))
    t = float(np.sum(stats.sums / d))
    denominator = s + n_trees / k2
    return t / denominator, tau * denominator


def group_mu_posterior(
    mu_b: float, count: int, total: float, tau: float, k1: float, n_trees: int
) -> tuple[float, float]:
    """(mean, precision) of mu_bj given mu_b and the group's residual count and sum."""
    prior_precision = n_trees / k1
    denominator = count + prior_precision
    return (prior_precision * mu_b + total) / denominator, tau * denominator


def sample_node_mu(
    stats: NodeSuffStats, tau: float, k1: Optional[float], k2: float, n_trees: int, rng: RngStream
) -> float:
    mean, precision = node_mu_posterior(stats, tau, k1, k2, n_trees)
    return sample_normal(mean, precision, rng)


def sample_group_mu(
    mu_b: float, count: int, total: float, tau: float, k1: float, n_trees: int, rng: RngStream
) -> float:
    mean, precision = group_mu_posterior(mu_b, count, total, tau, k1, n_trees)
    return sample_normal(mean, precision, rng)


def tau_posterior_params(
    state: SamplerState, dataset: Dataset, hyperparams: Hyperparams
) -> tuple[float, float]:
    """
    (shape, rate) of the tau full conditional.

    Only instantiated parameters are counted: every terminal mean and every
    (terminal, present group) mean.
    """
    n_trees = state.num_trees
    n_terminal = 0
    n_group = 0
    mu_sq = 0.0
    group_sq = 0.0
    for tree in state.forest:
        for node_id in tree.terminal_ids():
            node = tree.nodes[node_id]
            n_terminal += 1
            mu_sq += node.mu ** 2
            if state.k1 is not None:
                for value in node.group_mus.values():
                    n_group += 1
                    group_sq += (value - node.mu) ** 2

    sse = float(np.sum((dataset.response - state.fitted) ** 2))
    shape = 0.5 * (dataset.n + n_group + n_terminal) + hyperparams.tau_shape
    rate = 0.5 * sse + n_trees / (2.0 * hyperparams.k2) * mu_sq + hyperparams.tau_rate
    if state.k1 is not None:
        rate += n_trees / (2.0 * state.k1) * group_sq
    return shape, rate


def sample_tau(state: SamplerState, dataset: Dataset, hyperparams: Hyperparams, rng: RngStream) -> float:
    shape, rate = tau_posterior_params(state, dataset, hyperparams)
    return sample_gamma(shape, rate, rng)


# ---------- the chain ----------

@dataclass
class _DrawBuffer:
    taus: list = field(default_factory=list)
    k1s: list = field(default_factory=list)
    iterations: list = field(default_factory=list)
    tree_accepts: list = field(default_factory=list)
    k1_accepted: list = field(default_factory=list)
    forests: list = field(default_factory=list)
    fitted: list = field(default_factory=list)


class GibbsSampler:
    """
    Owns one chain: its state, its random stream and its stored draws.

    Attributes:
        dataset: Training data (standardized response)
        config: Run options
        rng: The chain's random stream
        state: Current SamplerState
    """

    def __init__(self, dataset: Dataset, config: ChainConfig, rng: RngStream):
        self.dataset = dataset
        self.config = config
        self.hyperparams = config.hyperparams
        self.rng = rng

        k1 = self.hyperparams.initial_k1 if config.grouped else None
        tau = config.initial_tau if config.initial_tau is not None else self.hyperparams.initial_tau
        self.state = SamplerState.initial(dataset, self.hyperparams.num_trees, tau, k1)
        stump_prior = log_tree_prior(
            self.state.forest[0], self.hyperparams.tree_alpha, self.hyperparams.tree_beta, dataset
        )
        self.state.log_tree_priors = [stump_prior] * self.state.num_trees

        logger.debug(
            "Chain initialized",
            extra={
                "chain": config.label,
                "mode": config.mode.value,
                "n": dataset.n,
                "groups": dataset.n_groups,
                "trees": self.hyperparams.num_trees,
                "tau": tau,
                "k1": k1,
            },
        )

    # ---------- tree step ----------

    def _tree_stats(self, residuals: np.ndarray, assignment: np.ndarray) -> dict[int, NodeSuffStats]:
        return collect_tree_suff_stats(residuals, assignment, self.dataset.group, self.dataset.n_groups)

    def mh_tree_update(self, p: int, proposal: Optional[MoveProposal] = None) -> bool:
        """
        Metropolis-Hastings update of tree p's structure.

        Args:
            p: Tree index
            proposal: Proposal to evaluate; drawn from the current tree when omitted

        Returns:
            True when the proposal was accepted and installed
        """
        state = self.state
        hp = self.hyperparams
        tree = state.forest[p]
        if proposal is None:
            proposal = propose(tree, self.dataset, self.rng, hp.move_probabilities)
        if proposal.is_noop:
            return False

        residuals = partial_residuals(state, self.dataset, p)
        new_assignment = proposal.new_tree.route_rows(self.dataset.covariates)
        new_prior = log_tree_prior(proposal.new_tree, hp.tree_alpha, hp.tree_beta, self.dataset)
        if new_prior == -math.inf:
            return False

        n_trees = state.num_trees
        current = tree_log_marginal(
            self._tree_stats(residuals, state.node_assignment[p]), state.tau, state.k1, hp.k2, n_trees
        )
        candidate = tree_log_marginal(
            self._tree_stats(residuals, new_assignment), state.tau, state.k1, hp.k2, n_trees
        )
        log_ratio = candidate + new_prior - current - state.log_tree_priors[p] + proposal.log_proposal_ratio
        if not metropolis_accept(log_ratio, self.rng):
            return False

        # node parameters are refreshed right after, so the old fit stays until then
        state.forest[p] = proposal.new_tree
        state.node_assignment[p] = new_assignment
        state.log_tree_priors[p] = new_prior
        return True

    def draw_terminal_params(self, p: int) -> None:
        """Draw mu_b then mu_bj for every terminal of tree p and refresh the cached fit."""
        state = self.state
        hp = self.hyperparams
        tree = state.forest[p]
        assignment = state.node_assignment[p]
        residuals = partial_residuals(state, self.dataset, p)
        stats = self._tree_stats(residuals, assignment)
        n_trees = state.num_trees

        params = {}
        for node_id in tree.terminal_ids():
            node_stats = stats.get(node_id)
            if node_stats is None:
                # unreachable by training rows: draw from the prior
                mu_b = sample_normal(0.0, state.tau * n_trees / hp.k2, self.rng)
                params[node_id] = (mu_b, {})
                continue
            mu_b = sample_node_mu(node_stats, state.tau, state.k1, hp.k2, n_trees, self.rng)
            group_mus = {}
            if state.k1 is not None:
                for group, count, total in zip(node_stats.groups, node_stats.counts, node_stats.sums):
                    group_mus[int(group)] = sample_group_mu(
                        mu_b, int(count), float(total), state.tau, state.k1, n_trees, self.rng
                    )
            params[node_id] = (mu_b, group_mus)

        new_tree = tree.with_terminal_params(params)
        tree_fit = new_tree.contributions(assignment, self.dataset.group, self.dataset.n_groups)
        state.install_tree(p, new_tree, assignment, tree_fit)

    # ---------- scalar steps ----------

    def gibbs_tau_update(self) -> float:
        self.state.tau = sample_tau(self.state, self.dataset, self.hyperparams, self.rng)
        return self.state.tau

    def mh_k1_update(self, k1_star: Optional[float] = None) -> bool:
        """
        Independence MH step for k1 with a Uniform(a, b) proposal and Weibull prior.

        Args:
            k1_star: Proposed value; drawn from the uniform proposal when omitted

        Returns:
            True when k1_star was accepted
        """
        state = self.state
        hp = self.hyperparams
        if state.k1 is None:
            return False
        if k1_star is None:
            k1_star = sample_uniform(hp.k1_proposal_low, hp.k1_proposal_high, self.rng)
        if k1_star <= 0:
            return False

        stats = forest_suff_stats(state, self.dataset)
        n_trees = state.num_trees
        log_ratio = (
            sum_forest_log_marginal(stats, state.tau, k1_star, hp.k2, n_trees)
            - sum_forest_log_marginal(stats, state.tau, state.k1, hp.k2, n_trees)
            + weibull_logpdf(k1_star, hp.weibull_scale, hp.weibull_shape)
            - weibull_logpdf(state.k1, hp.weibull_scale, hp.weibull_shape)
        )
        if metropolis_accept(log_ratio, self.rng):
            state.k1 = float(k1_star)
            return True
        return False

    # ---------- sweeps ----------

    def sweep(self, iteration: int) -> SweepProgress:
        """One full pass over the trees followed by the tau and k1 steps."""
        accepted = []
        try:
            for p in range(self.state.num_trees):
                accepted.append(self.mh_tree_update(p) if self.config.update_trees else False)
                self.draw_terminal_params(p)
            self.state.fitted = np.sum(self.state.tree_fits, axis=0)

            if self.config.update_tau:
                self.gibbs_tau_update()
            k1_accepted = False
            if self.config.grouped and self.hyperparams.update_k1:
                k1_accepted = self.mh_k1_update()
        except DistributionException as e:
            raise SamplerException(f"Sweep {iteration} failed: {e}") from e

        if not math.isfinite(self.state.tau) or (self.state.k1 is not None and not math.isfinite(self.state.k1)):
            raise SamplerException(f"Sweep {iteration} produced a non-finite parameter")
        return SweepProgress(
            iteration=iteration,
            tau=self.state.tau,
            k1=self.state.k1,
            accepted=tuple(accepted),
            k1_accepted=k1_accepted,
        )

    def _is_kept(self, i: int) -> bool:
        burn_in = self.hyperparams.burn_in
        return i >= burn_in and (i - burn_in + 1) % self.hyperparams.thin == 0

    def run(self) -> PosteriorDraws:
        """Run every sweep and collect the kept draws."""
        hp = self.hyperparams
        buffer = _DrawBuffer()
        iterator = tqdm(
            range(hp.iterations),
            desc=f"{self.config.label} ({self.config.mode.value})",
            disable=not self.config.show_progress,
        )
        total_accepts = 0
        total_k1_accepts = 0
        for i in iterator:
            progress = self.sweep(i + 1)
            total_accepts += sum(progress.accepted)
            total_k1_accepts += int(progress.k1_accepted)
            if self.config.progress_callback is not None:
                self.config.progress_callback(progress)
            if self._is_kept(i):
                self._store(buffer, progress)

        tree_rate = total_accepts / (hp.iterations * hp.num_trees)
        k1_rate = total_k1_accepts / hp.iterations if self.config.grouped else None
        logger.info(
            "Chain finished",
            extra={
                "chain": self.config.label,
                "mode": self.config.mode.value,
                "draws": len(buffer.taus),
                "tree_acceptance": round(tree_rate, 4),
                "k1_acceptance": None if k1_rate is None else round(k1_rate, 4),
            },
        )
        return self._to_posterior(buffer, tree_rate, k1_rate)

    def _store(self, buffer: _DrawBuffer, progress: SweepProgress) -> None:
        buffer.taus.append(progress.tau)
        buffer.k1s.append(progress.k1)
        buffer.iterations.append(progress.iteration)
        buffer.tree_accepts.append(sum(progress.accepted))
        buffer.k1_accepted.append(progress.k1_accepted)
        if self.config.store_trees:
            buffer.forests.append(list(self.state.forest))
        else:
            buffer.fitted.append(self.state.fitted.copy())

    def _to_posterior(self, buffer: _DrawBuffer, tree_rate: float, k1_rate: Optional[float]) -> PosteriorDraws:
        grouped = self.config.grouped
        return PosteriorDraws(
            mode=self.config.mode,
            hyperparams=self.hyperparams,
            taus=np.asarray(buffer.taus, dtype=float),
            k1s=np.asarray(buffer.k1s, dtype=float) if grouped else None,
            iterations=np.asarray(buffer.iterations, dtype=np.int64),
            tree_accepts=np.asarray(buffer.tree_accepts, dtype=np.int64),
            k1_accepted=np.asarray(buffer.k1_accepted, dtype=bool),
            response_transform=self.dataset.response_transform,
            label_table=self.dataset.label_table,
            covariate_names=self.dataset.covariate_names,
            trained_groups=frozenset(int(g) for g in self.dataset.trained_groups()),
            forests=buffer.forests if self.config.store_trees else None,
            train_fitted=None if self.config.store_trees else np.asarray(buffer.fitted, dtype=float).reshape(
                len(buffer.fitted), self.dataset.n
            ),
            metadata={
                "seed": self.rng.seed,
                "stream_id": self.rng.stream_id,
                "n": self.dataset.n,
                "tree_acceptance_rate": tree_rate,
                "k1_acceptance_rate": k1_rate,
            },
        )


def run_chain(dataset: Dataset, config: ChainConfig, rng: RngStream) -> PosteriorDraws:
    """Fit HE-BART (or BART when config.mode says so) and return the kept draws."""
    if config.mode == FitMode.BART:
        return run_bart_mode(dataset, config, rng)
    return GibbsSampler(dataset, config, rng).run()


def run_bart_mode(dataset: Dataset, config: ChainConfig, rng: RngStream) -> PosteriorDraws:
    """Fit the same loop with the group layer disabled."""
    ignored = config.hyperparams.explicit_k1_fields()
    if ignored:
        logger.warning("BART mode ignores k1 settings", extra={"fields": ignored})
    config = replace(config, mode=FitMode.BART)
    return GibbsSampler(dataset, config, rng).run()
