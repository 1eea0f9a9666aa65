"""Phase-space Bell-CHSH tests of a qubit-oscillator cat state under open-system dynamics."""
from .bell import (
    TSIRELSON,
    BellResult,
    BellSettings,
    CorrelationModel,
    OptimizerConfig,
    PureStateModel,
    bell_value,
    max_bell_curve,
    maximize_bell,
    parameter_threshold,
    violation_windows,
)
from .brownian import BrownianModel, BrownianParams
from .errors import CatBellError, ConfigError
from .markov import AdCvModel, AdSpinModel, PdCvModel, PdCvTruncation, PdSpinModel
from .phasespace import CatState, MeasurementSetting
from .postmarkov import PostMarkovModel, PostMarkovParams
from .spinstar import SpinStarModel, SpinStarParams, trace_distance

__version__ = "0.1.0"

__all__ = [
    "TSIRELSON", "BellResult", "BellSettings", "CorrelationModel", "OptimizerConfig", "PureStateModel",
    "bell_value", "max_bell_curve", "maximize_bell", "parameter_threshold", "violation_windows",
    "BrownianModel", "BrownianParams", "CatBellError", "ConfigError",
    "AdCvModel", "AdSpinModel", "PdCvModel", "PdCvTruncation", "PdSpinModel",
    "CatState", "MeasurementSetting", "PostMarkovModel", "PostMarkovParams",
    "SpinStarModel", "SpinStarParams", "trace_distance",
]
