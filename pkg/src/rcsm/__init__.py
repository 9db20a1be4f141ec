"""Index detection for repetition-coded generalized spatial modulation (RCSM).

Detectors (correlator, exhaustive Gaussian-approximation ML, variational
CAVI), pairwise-error analysis and a seeded Monte Carlo harness.  The
CAVI sweep and the ML search run in a compiled extension when it is
built; :data:`rcsm.kernels.BACKEND` says which one is active.
"""
from .detectors import (DetectionResult, cavi_detect, correlator_detect,
                        exact_mixture_ml_detect, gauss_approx_metric, ml_ga_detect,
                        pairwise_hamming)
from .errors import (ArgumentError, CapacityError, NumericalDomainError, RCSMError,
                     SingularUpdateError)
from .kernels import BACKEND
from .model import (IndexVector, NoiseModel, ReceivedSlot, SystemDims, bits_per_symbol,
                    im_bit_count, qam_constellation)

__version__ = "0.1.0"
