"""Fiber channel: loss, group delay, dispersion renormalisation, arrival times."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .wavepacket import DomainError, PulseParams, broadening_factor, temporal_width

DB_PER_KM_DEFAULT = 0.35
# n_g / c for silica fiber is ~4.9e-9 s/m; round number used as default.
GROUP_SLOWNESS_DEFAULT = 5e-9


@dataclass(frozen=True)
class FiberChannel:
    """Propagation medium, all SI.

    ``alpha`` is the group slowness (s/m), ``beta_re``/``beta_im`` the real and
    imaginary quadratic dispersion (s**2/m); frequency-flat loss is carried
    separately by ``loss_db_per_km``.
    """

    length: float
    alpha: float = GROUP_SLOWNESS_DEFAULT
    beta_re: float = 0.0
    beta_im: float = 0.0
    loss_db_per_km: float = DB_PER_KM_DEFAULT

    def __post_init__(self):
        errors = []
        if not self.length >= 0:
            errors.append(f"length must be >= 0, got {self.length}")
        if not self.alpha > 0:
            errors.append(f"alpha must be > 0, got {self.alpha}")
        if not self.beta_im >= 0:
            errors.append(f"beta_im must be >= 0, got {self.beta_im}")
        if not self.loss_db_per_km >= 0:
            errors.append(f"loss_db_per_km must be >= 0, got {self.loss_db_per_km}")
        if not math.isfinite(self.beta_re):
            errors.append(f"beta_re must be finite, got {self.beta_re}")
        if errors:
            raise ValueError("; ".join(errors))

    @property
    def beta(self) -> complex:
        return complex(self.beta_re, self.beta_im)


def _check_x(ch: FiberChannel, x: float) -> None:
    if not 0 <= x <= ch.length:
        raise ValueError(f"position {x} m outside channel [0, {ch.length}] m")


def survival_probability(ch: FiberChannel, x: float) -> float:
    """Probability that the photon is not absorbed over ``x`` metres."""
    _check_x(ch, x)
    return 10.0 ** (-ch.loss_db_per_km * (x / 1e3) / 10.0)


def group_delay(ch: FiberChannel, x: float) -> float:
    _check_x(ch, x)
    return ch.alpha * x


def effective_broadening(ch: FiberChannel, sigma: float, x: float) -> float:
    """Dispersion broadening renormalised by absorption.

    Ratio of the propagated RMS duration to the transform-limited duration of
    the absorption-narrowed spectrum::

        sqrt(((1 + u)**2 + 4 beta_re**2 x**2 sigma**4) / (1 + u)**2),  u = 2 sigma**2 beta_im x

    Equal to the lossless factor ``sqrt(1 + 4 beta_re**2 x**2 sigma**4)`` when
    ``beta_im == 0``.
    """
    if ch.beta_im == 0.0:
        return broadening_factor(sigma, ch.beta_re, x)
    one_u = 1.0 + 2.0 * sigma * sigma * ch.beta_im * x
    if not one_u > 0:
        raise DomainError(f"absorption model breaks down: 1 + 2 sigma^2 beta_im x = {one_u}")
    g = ch.beta_re * x * sigma * sigma
    return math.sqrt((one_u * one_u + 4.0 * g * g) / (one_u * one_u))


def arrival_width(ch: FiberChannel, p: PulseParams, x: float) -> float:
    """RMS spread of the detection time after ``x`` metres (s)."""
    if ch.beta_im == 0.0:
        return temporal_width(p, ch.beta_re, x)
    one_u = 1.0 + 2.0 * p.sigma * p.sigma * ch.beta_im * x
    limited = math.sqrt(one_u) / (math.sqrt(2.0) * p.sigma)
    return limited * effective_broadening(ch, p.sigma, x)


def sample_arrival_time(rng: np.random.Generator, ch: FiberChannel, p: PulseParams,
                        x: float, t_emit, size=None):
    """Draw detection times from the normalised intensity envelope at ``x``.

    Normal with mean ``t_emit + alpha*x`` and standard deviation
    :func:`arrival_width`. Only ``rng`` is mutated.
    """
    mean = np.asarray(t_emit, dtype=np.float64) + group_delay(ch, x)
    return rng.normal(mean, arrival_width(ch, p, x), size=size)
