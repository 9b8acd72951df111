"""Custom exceptions for the HE-BART library and command-line tool."""


class HebartException(Exception):
    """Base exception for all HE-BART errors."""
    pass


class DatasetIngestException(HebartException):
    """Raised when a dataset file cannot be read or fails schema checks."""
    pass


class StandardizationException(HebartException):
    """Raised when a column cannot be standardized (e.g. constant values)."""
    pass


class ConfigurationException(HebartException):
    """Raised when hyperparameters or configuration files are invalid."""
    pass


class DistributionException(HebartException):
    """Raised on invalid distribution parameters or non-finite log-densities."""
    pass


class TreeStructureException(HebartException):
    """Raised when a tree violates its structural invariants."""
    pass


class SamplerException(HebartException):
    """Raised when the MCMC chain reaches an invalid state."""
    pass


class PredictionException(HebartException):
    """Raised when predictions cannot be produced from posterior draws."""
    pass


class ModelStoreException(HebartException):
    """Raised when persisted artifacts cannot be written or read back."""
    pass


class SimulationException(HebartException):
    """Raised when simulated-data generation receives invalid sizes."""
    pass


class CrossValidationException(HebartException):
    """Raised when a cross-validation run is misconfigured."""
    pass
