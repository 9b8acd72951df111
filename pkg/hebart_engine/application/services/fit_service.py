"""
Fit workflow: ingest, optional holdout split, one chain, artifacts and summary.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from hebart_engine.application.services.config_service import ResolvedConfig
from hebart_engine.core.distributions import RngStream
from hebart_engine.core.predict import predict_rows, rmse
from hebart_engine.core.sampler import ChainConfig, run_chain
from hebart_engine.infrastructure.repositories.dataset_repository import ingest_csv
from hebart_engine.infrastructure.repositories.model_repository import ModelRepository
from shared.models.dataset import Dataset
from shared.models.posterior_draws import PosteriorDraws
from shared.models.prediction import PredictionBatch
from shared.utils.constants import ArtifactNames, RngStreams
from shared.utils.exceptions import DatasetIngestException
from shared.utils.logging_config import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class FitRequest:
    data_path: str
    response_col: str
    group_col: str
    covariate_cols: tuple[str, ...]
    out_dir: str
    config: ResolvedConfig
    holdout_groups: tuple[str, ...] = ()
    holdout_fraction: Optional[float] = None
    show_progress: bool = False


@dataclass(frozen=True)
class Scores:
    """RMSE of a prediction batch on both response scales."""
    standardized: float
    raw: float

    def to_dict(self) -> dict:
        return {"standardized": self.standardized, "raw": self.raw}


@dataclass
class FitResult:
    draws: PosteriorDraws
    train: Dataset
    test: Optional[Dataset]
    train_scores: Scores
    test_scores: Optional[Scores]
    summary: dict = field(default_factory=dict)
    out_dir: Optional[Path] = None


def group_labels(dataset: Dataset) -> list[str]:
    return [dataset.label_table.label_of(int(g)) for g in dataset.group]


def split_holdout(
    dataset: Dataset,
    holdout_groups: Sequence[str] = (),
    holdout_fraction: Optional[float] = None,
    seed: int = 0,
) -> tuple[Dataset, Optional[Dataset]]:
    """
    Move whole groups and then a seeded fraction of the remaining rows to a test set.

    Both subsets keep the full dataset's label table and response transform, so
    held-out groups stay known labels that the chain never trains on.

    Raises:
        DatasetIngestException: Unknown holdout label, bad fraction or no training rows left
    """
    test_mask = np.zeros(dataset.n, dtype=bool)
    for label in holdout_groups:
        index = dataset.label_table.index_of(label)
        if index is None:
            raise DatasetIngestException(f"Holdout group {label!r} does not occur in column {dataset.group_name!r}")
        test_mask |= dataset.group == index

    if holdout_fraction is not None:
        if not 0.0 < holdout_fraction < 1.0:
            raise DatasetIngestException(f"holdout fraction must lie in (0, 1), got {holdout_fraction}")
        remaining = np.flatnonzero(~test_mask)
        order = RngStream(seed, RngStreams.HOLDOUT_SPLIT).generator.permutation(remaining)
        test_mask[order[: int(round(holdout_fraction * remaining.size))]] = True

    if not test_mask.any():
        return dataset, None
    if test_mask.all():
        raise DatasetIngestException("Holdout leaves no training rows")
    return dataset.subset(np.flatnonzero(~test_mask)), dataset.subset(np.flatnonzero(test_mask))


def score(batch: PredictionBatch, dataset: Dataset) -> Scores:
    return Scores(
        standardized=rmse(batch.standardized_points, dataset.response),
        raw=rmse(batch.points, dataset.raw_response),
    )


def predict_dataset(draws: PosteriorDraws, dataset: Dataset, level: Optional[float] = None) -> PredictionBatch:
    """Predict a dataset's rows with their group labels on a fresh prediction stream."""
    rng = RngStream(draws.hyperparams.rng_seed, RngStreams.PREDICTION)
    return predict_rows(draws, dataset.covariates, group_labels(dataset), level, rng)


def fit_chain(
    dataset: Dataset,
    config: ResolvedConfig,
    stream_id: int = RngStreams.SAMPLER,
    show_progress: bool = False,
    label: str = "fit",
) -> PosteriorDraws:
    chain_config = ChainConfig(
        hyperparams=config.hyperparams,
        mode=config.mode,
        store_trees=True,
        show_progress=show_progress,
        label=label,
    )
    return run_chain(dataset, chain_config, RngStream(config.hyperparams.rng_seed, stream_id))


def _interval(values: np.ndarray, level: float) -> dict:
    tail = 0.5 * (1.0 - level)
    lower, upper = np.quantile(values, [tail, 1.0 - tail])
    return {"mean": float(values.mean()), "lower": float(lower), "upper": float(upper)}


def summarize(draws: PosteriorDraws, train_scores: Scores, test_scores: Optional[Scores]) -> dict:
    """Posterior means, sqrt(k1/tau) on both scales, RMSEs and acceptance rates."""
    level = draws.hyperparams.credible_level
    summary = {
        "mode": draws.mode.value,
        "draws": draws.draw_count,
        "seed": draws.hyperparams.rng_seed,
        "credible_level": level,
        "response_transform": draws.response_transform.to_dict(),
        "tau": _interval(draws.taus, level) if draws.draw_count else None,
        "k1": None,
        "sqrt_k1_over_tau": None,
        "train_rmse": train_scores.to_dict(),
        "test_rmse": None if test_scores is None else test_scores.to_dict(),
        "tree_acceptance_rate": draws.metadata.get("tree_acceptance_rate"),
        "k1_acceptance_rate": draws.metadata.get("k1_acceptance_rate"),
    }
    ratio = draws.sqrt_k1_over_tau()
    if ratio is not None and draws.draw_count:
        summary["k1"] = _interval(draws.k1s, level)
        summary["sqrt_k1_over_tau"] = {
            "standardized": _interval(ratio, level),
            "raw": _interval(ratio * draws.response_transform.scale, level),
        }
    return summary


def prediction_frame(dataset: Dataset, batch: PredictionBatch) -> pd.DataFrame:
    frame = pd.DataFrame(np.asarray(dataset.covariates), columns=list(dataset.covariate_names))
    frame[dataset.group_name] = group_labels(dataset)
    frame[dataset.response_name] = dataset.raw_response
    frame["point"] = batch.points
    frame["lower"] = batch.lowers
    frame["upper"] = batch.uppers
    return frame


class FitService:
    """
    Runs the fit command end to end.

    Attributes:
        repository_factory: Builds the artifact repository for an output directory
    """

    def __init__(self, repository_factory=ModelRepository):
        self.repository_factory = repository_factory

    def fit(self, request: FitRequest) -> FitResult:
        """
        Fit one chain and write every artifact.

        Writes draws.csv, model.hebart, summary.json, config.resolved.json and,
        when a holdout was requested, holdout_predictions.csv.
        """
        hp = request.config.hyperparams
        dataset = ingest_csv(request.data_path, request.response_col, request.group_col, request.covariate_cols)
        train, test = split_holdout(dataset, request.holdout_groups, request.holdout_fraction, hp.rng_seed)

        logger.info(
            "Fitting",
            extra={
                "mode": request.config.mode.value,
                "train_rows": train.n,
                "test_rows": 0 if test is None else test.n,
                "seed": hp.rng_seed,
                "iterations": hp.iterations,
            },
        )
        draws = fit_chain(train, request.config, show_progress=request.show_progress)
        draws.metadata.update({
            "response_name": dataset.response_name,
            "group_name": dataset.group_name,
        })

        train_scores = score(predict_dataset(draws, train), train)
        test_scores = None
        test_batch = None
        if test is not None:
            test_batch = predict_dataset(draws, test)
            test_scores = score(test_batch, test)

        summary = summarize(draws, train_scores, test_scores)
        summary.update({"train_rows": train.n, "test_rows": 0 if test is None else test.n})

        repository = self.repository_factory(request.out_dir).ensure()
        repository.write_draws(draws)
        repository.save_model(draws)
        repository.write_json(summary, ArtifactNames.SUMMARY)
        repository.write_json(self._resolved_config(request), ArtifactNames.RESOLVED_CONFIG)
        if test is not None:
            repository.write_frame(prediction_frame(test, test_batch), ArtifactNames.HOLDOUT_PREDICTIONS)

        logger.info(
            "Fit finished",
            extra={
                "out_dir": str(repository.root),
                "train_rmse": round(train_scores.standardized, 6),
                "test_rmse": None if test_scores is None else round(test_scores.standardized, 6),
            },
        )
        return FitResult(
            draws=draws,
            train=train,
            test=test,
            train_scores=train_scores,
            test_scores=test_scores,
            summary=summary,
            out_dir=repository.root,
        )

    @staticmethod
    def _resolved_config(request: FitRequest) -> dict:
        resolved = request.config.to_dict()
        resolved["data"] = {
            "path": request.data_path,
            "response": request.response_col,
            "group": request.group_col,
            "covariates": list(request.covariate_cols),
            "holdout_groups": list(request.holdout_groups),
            "holdout_fraction": request.holdout_fraction,
        }
        return resolved
