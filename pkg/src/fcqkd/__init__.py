"""Frequency-coded single-photon QKD over a dispersive, attenuating fiber."""

from .channel import (FiberChannel, effective_broadening, group_delay, sample_arrival_time,
                      survival_probability)
from .config import SessionConfig, paper_config, parse_config
from .protocol import (DetectorKind, Round, SessionReport, SignalKind, Verdict, run_session,
                       sift, timing_analysis)
from .security import (SystemParams, eve_min_time, max_secure_length, max_secure_length_lossy,
                       paper_system, secrecy_margin, validate_parameters)
from .wavepacket import (PulseParams, SampledField, analytic_field, moments, numeric_propagate,
                         spectral_width, temporal_width)

__version__ = "0.1.0"
