"""Time-frequency super-resolution with a mode-selective pulse gate.

Estimation of the separation between two incoherent, equally bright
Gaussian sources, either from an intensity-only spectrometer or from
Hermite-Gauss mode projections implemented by a pulse gate.
"""

from .errors import (ConfigurationError, NumericalError, SingularCalibrationError,
                     TFSuperresError)
from .fisher import fisher_direct, fisher_model, quantum_limit_variance
from .modes import HermiteGaussMode, PointSpreadFunction, SourceMixture, ideal_projection_prob
from .montecarlo import ExperimentSpec, SummaryStats, compare_bounds, run_experiment
from .pulsegate import (GateModel, InputSignal, PulseGateConfig, closed_form_ratio,
                        corrected_estimator, raw_estimator, upconversion_probs)
from .tomography import CalibrationSet, CountRecord, TomographyModel, fit_coefficients, ml_fit

__version__ = "0.1.0"
