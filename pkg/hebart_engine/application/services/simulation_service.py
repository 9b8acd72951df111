"""
Simulate workflow: draw a grouped dataset and write it with its truth sidecar.
"""

from dataclasses import dataclass
from pathlib import Path

from hebart_engine.core.distributions import RngStream
from hebart_engine.core.simulate import DEFAULT_TAU_PRIOR, simulate_grouped_data
from hebart_engine.infrastructure.repositories.dataset_repository import (
    truth_sidecar_path,
    write_dataset_csv,
    write_truth_sidecar,
)
from shared.models.simulation_truth import SimulationTruth
from shared.utils.constants import RngStreams
from shared.utils.logging_config import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class SimulateRequest:
    n: int
    groups: int
    trees: int
    k1: float
    k2: float
    seed: int
    out_path: str
    tau_shape: float = DEFAULT_TAU_PRIOR[0]
    tau_rate: float = DEFAULT_TAU_PRIOR[1]


@dataclass(frozen=True)
class SimulateResult:
    data_path: Path
    truth_path: Path
    truth: SimulationTruth


class SimulationService:
    def simulate(self, request: SimulateRequest) -> SimulateResult:
        """Write <out>.csv (columns X1, y, group) and <out>.truth.txt next to it."""
        rng = RngStream(request.seed, RngStreams.SIMULATION)
        dataset, truth = simulate_grouped_data(
            n=request.n,
            n_groups=request.groups,
            n_trees=request.trees,
            k1=request.k1,
            k2=request.k2,
            tau_prior=(request.tau_shape, request.tau_rate),
            rng=rng,
        )
        data_path = write_dataset_csv(dataset, request.out_path)
        truth_path = write_truth_sidecar(truth, truth_sidecar_path(data_path))
        logger.info(
            "Simulation written",
            extra={"data_path": str(data_path), "truth_path": str(truth_path), "sqrt_k1_over_tau": truth.sqrt_k1_over_tau},
        )
        return SimulateResult(data_path=data_path, truth_path=truth_path, truth=truth)
