import numpy as np
import pytest

from shared.config.settings import settings
from shared.models.hyperparams import Hyperparams
from shared.utils.constants import FitMode, RngStreams
from shared.utils.logging_config import get_logger, setup_logging
from hebart_engine.application.services.config_service import resolve_config
from hebart_engine.application.services.crossval_service import CrossvalRequest, CrossvalService
from hebart_engine.application.services.simulation_service import SimulateRequest, SimulationService
from hebart_engine.core.distributions import RngStream
from hebart_engine.core.sampler import ChainConfig, run_chain
from hebart_engine.core.simulate import simulate_grouped_data

setup_logging(
        log_level=settings.log_level,
        log_file=settings.log_file,
        log_to_console=settings.log_to_console
    )
logger = get_logger(__name__)

pytestmark = pytest.mark.slow


class TestGroupSpreadRecovery:

    def test_interval_covers_generating_value(self):
        covered = 0
        for seed in range(10):
            dataset, truth = simulate_grouped_data(
                500, 10, 10, k1=8.0, k2=5.0, rng=RngStream(seed, RngStreams.SIMULATION)
            )
            draws = run_chain(dataset, ChainConfig(hyperparams=Hyperparams(rng_seed=seed)), RngStream(seed))
            raw_ratio = draws.sqrt_k1_over_tau() * draws.response_transform.scale
            lower, upper = np.quantile(raw_ratio, [0.025, 0.975])
            hit = lower <= truth.sqrt_k1_over_tau <= upper
            covered += int(hit)
            logger.info(
                f"seed {seed}: truth {truth.sqrt_k1_over_tau:.3f} interval [{lower:.3f}, {upper:.3f}] covered={hit}"
            )
        assert covered >= 8


class TestSimulatedCrossval:

    def test_hebart_beats_bart_mode(self, tmp_path):
        simulated = SimulationService().simulate(SimulateRequest(
            n=500, groups=10, trees=10, k1=8.0, k2=5.0, seed=0, out_path=str(tmp_path / "sim.csv")
        ))
        report = CrossvalService().run(CrossvalRequest(
            data_path=str(simulated.data_path),
            response_col="y",
            group_col="group",
            covariate_cols=("X1",),
            config=resolve_config(overrides={"rng_seed": 0}),
            folds=10,
            baseline=FitMode.BART,
            jobs=settings.default_jobs,
            out_dir=str(tmp_path / "cv"),
        ))
        logger.info("\n" + report.format_table())
        hebart = report.summaries["hebart"]["test"]
        bart = report.summaries["bart"]["test"]
        assert hebart.mean < bart.mean
        assert 0.70 <= hebart.mean <= 1.00
