import numpy as np
import pandas as pd
import pytest

from shared.config.settings import settings
from shared.utils.constants import ArtifactNames, FitMode
from shared.utils.logging_config import get_logger, setup_logging
from hebart_engine.application.services.config_service import resolve_config
from hebart_engine.application.services.fit_service import FitRequest, FitService

setup_logging(
        log_level=settings.log_level,
        log_file=settings.log_file,
        log_to_console=settings.log_to_console
    )
logger = get_logger(__name__)

pytestmark = [
    pytest.mark.slow,
    pytest.mark.skipif(not settings.sleepstudy_csv, reason="HEBART_SLEEPSTUDY_CSV is not set"),
]

UNSEEN_SUBJECTS = ("308", "309", "351")


def sleepstudy_fit(out_dir, mode=FitMode.HEBART, holdout_groups=(), holdout_fraction=None):
    return FitService().fit(FitRequest(
        data_path=settings.sleepstudy_csv,
        response_col="Reaction",
        group_col="Subject",
        covariate_cols=("Days",),
        out_dir=str(out_dir),
        config=resolve_config(overrides={"rng_seed": 0}, mode=mode.value),
        holdout_groups=holdout_groups,
        holdout_fraction=holdout_fraction,
    ))


class TestAllSubjectsInTraining:

    def test_rmse_and_ordering(self, tmp_path):
        hebart = sleepstudy_fit(tmp_path / "hebart", holdout_fraction=0.2)
        bart = sleepstudy_fit(tmp_path / "bart", mode=FitMode.BART, holdout_fraction=0.2)
        logger.info(
            f"HE-BART train {hebart.train_scores.standardized:.3f} test {hebart.test_scores.standardized:.3f}; "
            f"BART test {bart.test_scores.standardized:.3f}"
        )
        assert hebart.train.n + hebart.test.n == 180
        assert hebart.test_scores.standardized <= 0.65
        assert hebart.train_scores.standardized <= 0.55
        assert bart.test_scores.standardized > hebart.test_scores.standardized


class TestMissingSubjects:

    def test_rmse_and_identical_unseen_intervals(self, tmp_path):
        result = sleepstudy_fit(tmp_path / "missing", holdout_groups=UNSEEN_SUBJECTS)
        assert result.test.n == 30
        assert result.test_scores.standardized <= 1.1
        assert result.train_scores.standardized <= 0.50

        holdout = pd.read_csv(result.out_dir / ArtifactNames.HOLDOUT_PREDICTIONS)
        assert set(holdout["Subject"].astype(str)) == set(UNSEEN_SUBJECTS)
        for _, rows in holdout.groupby("Days"):
            for column in ("point", "lower", "upper"):
                assert np.unique(rows[column].to_numpy()).size == 1
