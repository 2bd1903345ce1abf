"""Large-deviation apparatus for discrete-time stochastic neural networks
with correlated Gaussian synaptic weights."""

__version__ = "0.1.0"

from .errors import ConfigError, NumericError, PSDError
from .model import (
    CorrelationKernel,
    GainFunction,
    InitLaw,
    ModelParams,
    kernel_eval,
    kernel_fourier,
    validate_params,
)

__all__ = [
    "ConfigError",
    "CorrelationKernel",
    "GainFunction",
    "InitLaw",
    "ModelParams",
    "NumericError",
    "PSDError",
    "kernel_eval",
    "kernel_fourier",
    "validate_params",
]
