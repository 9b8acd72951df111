"""
Posterior predictive evaluation over stored forest draws.

Per stored draw, a row's prediction is the sum over trees of its terminal's
contribution:
  - group present in the terminal: mu_bj;
  - group trained but absent from the terminal: a fresh draw from
    N(mu_b, (k1/P) / tau) at that draw's k1 and tau, shared by every row
    of that group in the terminal;
  - group unknown or never trained: mu_b.
"""

from typing import Iterable, Optional, Sequence

import numpy as np

from hebart_engine.core.distributions import RngStream, sample_normal_vector
from shared.models.posterior_draws import PosteriorDraws
from shared.models.prediction import Prediction, PredictionBatch, RmseSummary
from shared.models.tree import Tree
from shared.utils.constants import CI_Z_95, RngStreams
from shared.utils.exceptions import PredictionException


def _resolve_groups(draws: PosteriorDraws, groups: Optional[Iterable[Optional[str]]], n_rows: int) -> np.ndarray:
    """Dense index of every row's group, -1 for unknown or untrained groups."""
    if groups is None:
        return np.full(n_rows, -1, dtype=np.int64)
    encoded = draws.label_table.encode(groups)
    if encoded.shape[0] != n_rows:
        raise PredictionException(f"Got {encoded.shape[0]} group labels for {n_rows} rows")
    trained = np.array(sorted(draws.trained_groups), dtype=np.int64)
    encoded[~np.isin(encoded, trained)] = -1
    return encoded


def _tree_values(
    tree: Tree,
    covariates: np.ndarray,
    groups: np.ndarray,
    tau: float,
    k1: Optional[float],
    n_trees: int,
    rng: RngStream,
) -> np.ndarray:
    assignment = tree.route_rows(covariates)
    out = np.empty(covariates.shape[0], dtype=float)
    for node_id in tree.terminal_ids():
        rows = np.flatnonzero(assignment == node_id)
        if rows.size == 0:
            continue
        node = tree.nodes[node_id]
        values = np.full(rows.size, node.mu, dtype=float)
        row_groups = groups[rows]
        if node.group_mus:
            present = np.array([g in node.group_mus for g in row_groups], dtype=bool)
            values[present] = [node.group_mus[g] for g in row_groups[present]]
        else:
            present = np.zeros(rows.size, dtype=bool)
        absent = (row_groups >= 0) & ~present
        if k1 is not None and np.any(absent):
            # one mu_bj per (terminal, group) within a draw
            missing, inverse = np.unique(row_groups[absent], return_inverse=True)
            fresh = sample_normal_vector(node.mu, tau * n_trees / k1, missing.size, rng)
            values[absent] = fresh[inverse]
        out[rows] = values
    return out


def predict_rows(
    draws: PosteriorDraws,
    covariates: np.ndarray,
    groups: Optional[Sequence[Optional[str]]] = None,
    level: Optional[float] = None,
    rng: Optional[RngStream] = None,
) -> PredictionBatch:
    """
    Posterior predictive summaries for a batch of rows.

    Args:
        draws: Chain output with stored forests
        covariates: (rows, d) covariate matrix
        groups: Raw group label per row, None for no group information
        level: Credible level, defaults to the fitted hyperparams' level
        rng: Stream for fresh group draws, defaults to the prediction stream of the fit seed

    Returns:
        PredictionBatch on the raw response scale

    Raises:
        PredictionException: If forests were not stored or the covariate width differs
    """
    if not draws.has_forests:
        raise PredictionException("Posterior draws carry no stored forests")
    if draws.draw_count == 0:
        raise PredictionException("No posterior draws were kept (burn_in and thin leave none)")
    covariates = np.asarray(covariates, dtype=float)
    if covariates.ndim == 1:
        covariates = covariates.reshape(-1, max(draws.n_covariates, 1))
    if covariates.ndim != 2 or covariates.shape[1] != draws.n_covariates:
        raise PredictionException(
            f"Expected {draws.n_covariates} covariate columns, got shape {covariates.shape}"
        )
    level = draws.hyperparams.credible_level if level is None else float(level)
    if not 0.0 < level < 1.0:
        raise PredictionException(f"Credible level must lie in (0, 1), got {level}")
    if rng is None:
        rng = RngStream(draws.hyperparams.rng_seed, RngStreams.PREDICTION)

    n_rows = covariates.shape[0]
    dense_groups = _resolve_groups(draws, groups, n_rows)
    per_draw = np.zeros((n_rows, draws.draw_count), dtype=float)
    for s, forest in enumerate(draws.forests):
        tau = float(draws.taus[s])
        k1 = None if draws.k1s is None else float(draws.k1s[s])
        for tree in forest:
            per_draw[:, s] += _tree_values(tree, covariates, dense_groups, tau, k1, len(forest), rng)

    standardized = per_draw.mean(axis=1)
    tail = 0.5 * (1.0 - level)
    low, high = np.quantile(per_draw, [tail, 1.0 - tail], axis=1)
    transform = draws.response_transform
    points = transform.inverse(standardized)
    # the inverse transform is increasing, so clipping on either scale agrees
    lowers = np.minimum(transform.inverse(low), points)
    uppers = np.maximum(transform.inverse(high), points)
    return PredictionBatch(
        points=points,
        lowers=lowers,
        uppers=uppers,
        standardized_points=standardized,
        draws=per_draw,
        level=level,
    )


def predict_row(
    draws: PosteriorDraws,
    x: Sequence[float] | np.ndarray,
    group: Optional[str] = None,
    level: Optional[float] = None,
    rng: Optional[RngStream] = None,
) -> Prediction:
    """Single-row form of predict_rows."""
    row = np.asarray(x, dtype=float).reshape(1, -1)
    return predict_rows(draws, row, None if group is None else [group], level, rng)[0]


def rmse(predictions: Sequence[float] | np.ndarray, truth: Sequence[float] | np.ndarray) -> float:
    predictions = np.asarray(predictions, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if predictions.shape != truth.shape or predictions.size == 0:
        raise PredictionException(
            f"RMSE needs equal non-empty vectors, got {predictions.shape} and {truth.shape}"
        )
    return float(np.sqrt(np.mean((predictions - truth) ** 2)))


def rmse_summary(values: Sequence[float] | np.ndarray, z: float = CI_Z_95) -> RmseSummary:
    """Mean of fold RMSEs with mean +/- z * sd / sqrt(k), sd with k - 1 degrees of freedom."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise PredictionException("Cannot summarize an empty RMSE list")
    mean = float(values.mean())
    sd = float(values.std(ddof=1)) if values.size > 1 else 0.0
    half = z * sd / np.sqrt(values.size)
    return RmseSummary(mean=mean, lower=mean - half, upper=mean + half, sd=sd, count=int(values.size))
