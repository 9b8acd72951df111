"""
Hyperparameter model for the HE-BART sampler.
"""

import math
from typing import Any, Mapping, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from shared.utils.constants import MoveKind
from shared.utils.exceptions import ConfigurationException

# fields that only matter when group parameters are sampled
K1_FIELDS: tuple[str, ...] = (
    "weibull_scale",
    "weibull_shape",
    "k1_proposal_low",
    "k1_proposal_high",
    "k1_initial",
    "update_k1",
)


class MoveProbabilities(BaseModel):
    """Probabilities of picking each tree proposal kind."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    grow: float = Field(default=0.25, ge=0.0, le=1.0)
    prune: float = Field(default=0.25, ge=0.0, le=1.0)
    change: float = Field(default=0.40, ge=0.0, le=1.0)
    swap: float = Field(default=0.10, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _sums_to_one(self) -> "MoveProbabilities":
        total = self.grow + self.prune + self.change + self.swap
        if not math.isclose(total, 1.0, abs_tol=1e-9):
            raise ValueError(f"move probabilities must sum to 1, got {total}")
        return self

    def of(self, kind: MoveKind) -> float:
        return getattr(self, kind.value)

    def weights(self) -> list[float]:
        """Weights in MoveKind declaration order."""
        return [self.of(kind) for kind in MoveKind]


class Hyperparams(BaseModel):
    """
    Every fixed constant of the model and the MCMC schedule.

    Weibull parameters follow (scale, shape) naming: the k1 prior density is
    (shape/scale) (x/scale)^(shape-1) exp(-(x/scale)^shape).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    num_trees: int = Field(default=10, gt=0)
    tree_alpha: float = Field(default=0.95, gt=0.0, lt=1.0)
    tree_beta: float = Field(default=2.0, gt=0.0)
    k2: float = Field(default=5.0, gt=0.0)
    tau_shape: float = Field(default=0.5, gt=0.0)
    tau_rate: float = Field(default=1.0, gt=0.0)
    weibull_scale: float = Field(default=10.0, gt=0.0)
    weibull_shape: float = Field(default=1.0, gt=0.0)
    k1_proposal_low: float = Field(default=0.0, ge=0.0)
    k1_proposal_high: float = Field(default=20.0, gt=0.0)
    k1_initial: Optional[float] = Field(default=None, gt=0.0)
    update_k1: bool = True
    iterations: int = Field(default=1500, gt=0)
    burn_in: int = Field(default=500, ge=0)
    thin: int = Field(default=1, gt=0)
    rng_seed: int = Field(default=0, ge=0, lt=2**64)
    credible_level: float = Field(default=0.95, gt=0.0, lt=1.0)
    move_probabilities: MoveProbabilities = Field(default_factory=MoveProbabilities)

    @model_validator(mode="after")
    def _cross_field_bounds(self) -> "Hyperparams":
        errors = []
        if self.k1_proposal_high <= self.k1_proposal_low:
            errors.append("k1_proposal_high must exceed k1_proposal_low")
        if self.burn_in >= self.iterations:
            errors.append("burn_in must be smaller than iterations")
        if self.k1_initial is not None and not (
            self.k1_proposal_low <= self.k1_initial <= self.k1_proposal_high
        ):
            errors.append("k1_initial must lie within [k1_proposal_low, k1_proposal_high]")
        if errors:
            raise ValueError("; ".join(errors))
        return self

    @property
    def initial_k1(self) -> float:
        if self.k1_initial is not None:
            return self.k1_initial
        return 0.5 * (self.k1_proposal_low + self.k1_proposal_high)

    @property
    def initial_tau(self) -> float:
        """Prior mean of tau."""
        return self.tau_shape / self.tau_rate

    @property
    def expected_draw_count(self) -> int:
        return (self.iterations - self.burn_in) // self.thin

    def explicit_k1_fields(self) -> list[str]:
        """k1-related fields the caller set explicitly."""
        return [name for name in K1_FIELDS if name in self.model_fields_set]

    def to_dict(self) -> dict:
        return self.model_dump(mode="json")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Hyperparams":
        """Validate a mapping, converting pydantic errors to ConfigurationException."""
        try:
            return cls.model_validate(dict(data))
        except ValidationError as e:
            problems = [
                f"{'.'.join(str(p) for p in err['loc']) or 'hyperparams'}: {err['msg']}"
                for err in e.errors()
            ]
            raise ConfigurationException(
                f"Invalid hyperparameters: {'; '.join(problems)}"
            ) from e

    def merged(self, overrides: Mapping[str, Any]) -> "Hyperparams":
        """New instance with non-None overrides applied on top of the set fields."""
        data = self.model_dump(exclude_unset=True)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return Hyperparams.from_dict(data)
