"""
K-fold cross-validation of HE-BART against its BART-mode baseline.
"""

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from hebart_engine.application.services.config_service import ResolvedConfig
from hebart_engine.application.services.fit_service import fit_chain, predict_dataset, score
from hebart_engine.core.distributions import RngStream
from hebart_engine.core.predict import rmse_summary
from hebart_engine.infrastructure.repositories.dataset_repository import ingest_csv
from hebart_engine.infrastructure.repositories.model_repository import ModelRepository
from shared.models.dataset import Dataset
from shared.models.prediction import RmseSummary
from shared.utils.constants import ArtifactNames, FitMode, RngStreams
from shared.utils.exceptions import CrossValidationException
from shared.utils.logging_config import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class CrossvalRequest:
    data_path: str
    response_col: str
    group_col: str
    covariate_cols: tuple[str, ...]
    config: ResolvedConfig
    folds: int = 30
    baseline: Optional[FitMode] = None
    jobs: int = 1
    out_dir: Optional[str] = None


@dataclass(frozen=True)
class FoldResult:
    fold: int
    model: str
    n_train: int
    n_test: int
    train_rmse: float
    test_rmse: float


@dataclass
class CrossvalReport:
    folds: list[FoldResult]
    summaries: dict[str, dict[str, RmseSummary]]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([vars(f) for f in self.folds], columns=list(FoldResult.__dataclass_fields__))

    def format_table(self) -> str:
        """One line per model: mean [lower,upper] of train and test RMSE."""
        lines = [f"{'model':<8} {'train_rmse':<22} {'test_rmse':<22}"]
        for model, summary in self.summaries.items():
            lines.append(f"{model:<8} {summary['train'].format():<22} {summary['test'].format():<22}")
        return "\n".join(lines) + "\n"


def fold_assignment(n: int, folds: int, seed: int) -> list[np.ndarray]:
    """
    Seeded shuffle of the row ids split into contiguous, near-equal blocks.

    Raises:
        CrossValidationException: folds < 2 or folds > n
    """
    if folds < 2 or folds > n:
        raise CrossValidationException(f"folds must lie in [2, n={n}], got {folds}")
    order = RngStream(seed, RngStreams.FOLD_SPLIT).generator.permutation(n)
    return [np.sort(block) for block in np.array_split(order, folds)]


def fold_stream_id(fold: int, mode: FitMode) -> int:
    return RngStreams.FOLD_BASE + 2 * fold + (1 if mode == FitMode.BART else 0)


def _run_fold(dataset: Dataset, test_rows: np.ndarray, fold: int, config: ResolvedConfig) -> FoldResult:
    mask = np.zeros(dataset.n, dtype=bool)
    mask[test_rows] = True
    train = dataset.subset(np.flatnonzero(~mask))
    test = dataset.subset(np.flatnonzero(mask))
    draws = fit_chain(
        train, config, stream_id=fold_stream_id(fold, config.mode), label=f"fold {fold} {config.mode.value}"
    )
    train_scores = score(predict_dataset(draws, train), train)
    test_scores = score(predict_dataset(draws, test), test)
    return FoldResult(
        fold=fold,
        model=config.mode.value,
        n_train=train.n,
        n_test=test.n,
        train_rmse=train_scores.standardized,
        test_rmse=test_scores.standardized,
    )


class CrossvalService:
    """
    Runs every (fold, model) fit in a joblib worker pool.

    Each worker builds its own chain and stream from (seed, fold, model), so the
    report does not depend on the pool size.
    """

    def __init__(self, repository_factory=ModelRepository):
        self.repository_factory = repository_factory

    def run(self, request: CrossvalRequest) -> CrossvalReport:
        dataset = ingest_csv(request.data_path, request.response_col, request.group_col, request.covariate_cols)
        seed = request.config.hyperparams.rng_seed
        blocks = fold_assignment(dataset.n, request.folds, seed)

        configs = [request.config]
        if request.baseline is not None and request.baseline != request.config.mode:
            configs.append(replace(request.config, mode=request.baseline))

        logger.info(
            "Cross-validation started",
            extra={
                "rows": dataset.n,
                "folds": request.folds,
                "models": [c.mode.value for c in configs],
                "jobs": request.jobs,
                "seed": seed,
            },
        )
        results = Parallel(n_jobs=request.jobs)(
            delayed(_run_fold)(dataset, rows, fold, config)
            for fold, rows in enumerate(blocks)
            for config in configs
        )
        results = sorted(results, key=lambda r: (r.fold, r.model))

        summaries = {}
        for config in configs:
            model = config.mode.value
            rows = [r for r in results if r.model == model]
            summaries[model] = {
                "train": rmse_summary([r.train_rmse for r in rows]),
                "test": rmse_summary([r.test_rmse for r in rows]),
            }
            logger.info(
                "Cross-validation model summary",
                extra={"model": model, "test_rmse": summaries[model]["test"].format()},
            )

        report = CrossvalReport(folds=results, summaries=summaries)
        if request.out_dir is not None:
            self._write(report, request.out_dir)
        return report

    def _write(self, report: CrossvalReport, out_dir: str | Path) -> None:
        repository = self.repository_factory(out_dir).ensure()
        repository.write_frame(report.to_frame(), ArtifactNames.CROSSVAL_FOLDS)
        repository.write_text(report.format_table(), ArtifactNames.CROSSVAL_SUMMARY)
