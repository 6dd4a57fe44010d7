"""Sample-rate adjustment for LSTM audio-effect models.

Inserts designed fractional-delay (or advance) FIR filters into the
recurrent state feedback loop so a model trained at one rate can run at
another, and predicts filter safety via linearised stability analysis.
"""

from .analysis import (FixedPoint, LinearisedSystem, StabilityReport,
                       build_companion, find_fixed_point, lstm_jacobian,
                       poles_dense, poles_structured, predict_stability)
from .evaluation import (ContingencyTable, ExperimentRecord, SnrResult,
                         batch_experiment, run_case, snr)
from .filters import (DelaySpec, FirCoefficients, FrequencyResponse,
                      delta_for_ratio, frequency_response, identity_filter,
                      lagrange_coeffs, minimax_coeffs)
from .io import AudioBuffer, load_model, read_wav, write_wav
from .model import (LinearModel, RnnModel, UnstableOutputError,
                    process_adjusted, process_native)
from .resample import dft_resample, trim_for_ratio

__version__ = "0.1.0"
