"""
Predict workflow: load a fitted model, predict a CSV, report RMSE when truth is present.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import pandas as pd

from hebart_engine.core.predict import predict_rows, rmse
from hebart_engine.infrastructure.repositories.dataset_repository import has_column, read_prediction_frame
from hebart_engine.infrastructure.repositories.model_repository import ModelRepository, write_frame_csv
from shared.models.prediction import PredictionBatch
from shared.utils.exceptions import PredictionException
from shared.utils.logging_config import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class PredictRequest:
    model_dir: str
    data_path: str
    out_path: str
    group_col: Optional[str] = None
    response_col: Optional[str] = None
    level: Optional[float] = None


@dataclass(frozen=True)
class PredictResult:
    batch: PredictionBatch
    out_path: Path
    rmse_standardized: Optional[float] = None
    rmse_raw: Optional[float] = None


class PredictionService:
    """Serves posterior predictions from a model output directory."""

    def __init__(self, repository_factory=ModelRepository):
        self.repository_factory = repository_factory

    def predict(self, request: PredictRequest) -> PredictResult:
        """
        Predict every row of request.data_path and write point/lower/upper.

        The truth column is request.response_col, or the model's response column
        when the CSV has it. Without a group column every row is predicted from
        the overall terminal means.
        """
        draws = self.repository_factory(request.model_dir).load_model()
        response_col = request.response_col
        if response_col is None:
            model_response = draws.metadata.get("response_name")
            if model_response and has_column(request.data_path, model_response):
                response_col = model_response

        frame = read_prediction_frame(
            request.data_path, draws.covariate_names, request.group_col, response_col
        )
        batch = predict_rows(draws, frame.covariates, frame.groups, request.level)

        output = pd.DataFrame({"point": batch.points, "lower": batch.lowers, "upper": batch.uppers})
        out_path = write_frame_csv(output, request.out_path)

        rmse_standardized = rmse_raw = None
        if frame.truth is not None:
            if frame.truth.shape[0] != len(batch):
                raise PredictionException("Truth column length does not match the predictions")
            transform = draws.response_transform
            rmse_standardized = rmse(batch.standardized_points, transform.apply(frame.truth))
            rmse_raw = rmse(batch.points, frame.truth)

        logger.info(
            "Predictions written",
            extra={
                "out_path": str(out_path),
                "rows": len(batch),
                "grouped": frame.groups is not None,
                "rmse": rmse_standardized,
            },
        )
        return PredictResult(batch=batch, out_path=out_path, rmse_standardized=rmse_standardized, rmse_raw=rmse_raw)
