"""Gaussian single-photon wavepackets in a quadratic-dispersion channel.

Fields are complex envelopes in the carrier frame: the factor
``exp(-i*omega0*t)`` and the constant phase ``k0*x`` are dropped, so the
spectrum is a function of the detuning ``nu = omega - omega0``. The spectral
amplitude is ``A(nu) = (2*sqrt(pi)/sigma)**0.5 * exp(-nu**2 / (2*sigma**2))``
and the time-domain envelope is ``E(t) = (1/2pi) * int A(nu) exp(-i nu t) dnu``,
which normalises ``int |E(0, t)|**2 dt`` to one.

Propagation over ``x`` multiplies each mode by ``exp(i*(alpha*nu + beta*nu**2)*x)``
with complex ``beta = beta_re + 1j*beta_im``; ``beta_im > 0`` absorbs the
spectral wings. With ``a = 1/(2 sigma**2) - 1j*beta*x`` the closed form is::

    E(x, t) = (1 / (4 pi sigma**2))**0.25 / sqrt(a) * exp(-(t - alpha x)**2 / (4 a))

Its intensity has variance ``|a|**2 / Re(a)``, i.e.
``(1/(2 sigma**2)) * (1 + 4 beta**2 x**2 sigma**4)`` for real ``beta``.
All quantities are SI: rad/s, s, m, s**2/m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels


class DomainError(ValueError):
    """The effective Gaussian width left the physical (normalisable) domain."""


class GridError(ValueError):
    """A sampling grid is too coarse or too short for the requested pulse."""


@dataclass(frozen=True)
class PulseParams:
    """Gaussian wavepacket: carrier ``omega0`` and spectral parameter ``sigma`` (rad/s).

    ``sigma`` is the parameter in ``exp(-(omega-omega0)**2 / (2 sigma**2))``;
    the RMS width of the spectral density is ``sigma / sqrt(2)``.
    """

    omega0: float
    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0 and self.omega0 > 0):
            raise ValueError(f"sigma and omega0 must be positive, got {self!r}")
        if not self.sigma < self.omega0:
            raise ValueError(f"pulse must be narrowband (sigma < omega0), got {self!r}")


@dataclass(frozen=True)
class SampledField:
    """Complex envelope samples on the uniform grid ``t_start + j*dt``."""

    t_start: float
    dt: float
    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.ndim != 1 or samples.shape[0] < 2:
            raise ValueError("a sampled field needs at least 2 samples")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.shape[0]

    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(len(self))

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.samples) ** 2) * self.dt))


@dataclass(frozen=True)
class Moments:
    mean: float
    rms_width: float
    norm: float


@dataclass(frozen=True)
class TimeGrid:
    """Sampling grid placed around the group delay: ``t = alpha*x + offset + (j - n//2)*dt``."""

    n: int
    dt: float
    offset: float = 0.0

    def __post_init__(self):
        if self.n < 2 or not self.dt > 0:
            raise ValueError(f"invalid grid {self!r}")

    def relative_times(self) -> np.ndarray:
        return self.offset + self.dt * (np.arange(self.n) - self.n // 2)


def _as_complex_beta(beta) -> complex:
    return complex(beta)


def _complex_width(sigma: float, beta: complex, x: float) -> complex:
    a = 1.0 / (2.0 * sigma * sigma) - 1j * beta * x
    if not a.real > 0:
        raise DomainError(
            f"effective width has non-positive real part (sigma={sigma}, beta={beta}, x={x})"
        )
    return a


def spectral_density(p: PulseParams, omega):
    """Normalised photon spectral density ``|E(0, omega)|**2``.

    Gaussian in ``omega`` with mean ``omega0`` and variance ``sigma**2 / 2``;
    integrates to one over the real line.
    """
    nu = np.asarray(omega, dtype=np.float64) - p.omega0
    out = np.exp(-(nu / p.sigma) ** 2) / math.sqrt(math.pi * p.sigma**2)
    return out if out.ndim else float(out)


def analytic_field(p: PulseParams, beta, alpha: float, x: float, t):
    """Closed-form envelope ``E(x, t)`` after quadratic dispersion ``beta`` over ``x``.

    Raises
    ------
    DomainError
        If ``1/(2 sigma**2) + beta_im*x <= 0`` (gain regime, not normalisable).
    """
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x}")
    beta = _as_complex_beta(beta)
    a = _complex_width(p.sigma, beta, x)
    tau = np.asarray(t, dtype=np.float64) - alpha * x
    pref = (1.0 / (4.0 * math.pi * p.sigma**2)) ** 0.25 / np.sqrt(a)
    out = pref * np.exp(-(tau * tau) / (4.0 * a))
    return out if out.ndim else complex(out)


def intensity(p: PulseParams, beta, alpha: float, x: float, t):
    """``|E(x, t)|**2``; integrates to one in time when ``beta`` is real."""
    e = analytic_field(p, beta, alpha, x, t)
    out = np.abs(e) ** 2
    return out if np.ndim(out) else float(out)


def temporal_variance(p: PulseParams, beta, x: float) -> float:
    a = _complex_width(p.sigma, _as_complex_beta(beta), x)
    return (a.real**2 + a.imag**2) / a.real


def temporal_width(p: PulseParams, beta, x: float) -> float:
    """RMS duration of the propagated intensity (s).

    ``1/(sqrt(2) sigma)`` at the input; for real ``beta`` it grows as
    ``sqrt(1 + 4 beta**2 x**2 sigma**4)``. Complex ``beta`` is accepted and
    includes the narrowing of the spectrum by absorption.
    """
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x}")
    return math.sqrt(temporal_variance(p, beta, x))


def broadening_factor(sigma: float, beta_re: float, x: float) -> float:
    """Lossless ratio of output to input RMS duration."""
    g = beta_re * x * sigma * sigma
    return math.sqrt(1.0 + 4.0 * g * g)


def spectral_width(p: PulseParams) -> float:
    """RMS width of the photon spectral density, ``sigma / sqrt(2)``."""
    return p.sigma / math.sqrt(2.0)


# ----------------------------------------------------------- numerical path


def auto_grid(p: PulseParams, beta, x: float, *, span_widths: float = 10.0,
              spectral_span: float = 10.0) -> TimeGrid:
    """Smallest power-of-two grid that meets the resolution checks of :func:`numeric_propagate`.

    ``span_widths`` output RMS widths on either side of the group delay and a
    Nyquist band of ``+/- spectral_span * sigma``.
    """
    w_out = temporal_width(p, beta, x)
    dt = math.pi / (spectral_span * p.sigma)
    # Frequency step sigma/(32*sqrt(2)) -> window length >= 2*pi*32*sqrt(2)/sigma.
    window = max(2.0 * span_widths * w_out, 2.0 * math.pi * 32.0 * math.sqrt(2.0) / p.sigma)
    n = 1 << max(1, math.ceil(math.log2(window / dt)))
    return TimeGrid(n=n, dt=dt)


def check_grid(p: PulseParams, beta, x: float, n: int, dt: float) -> None:
    """Raise :class:`GridError` unless the grid resolves the pulse at ``x``.

    Requirements: the window covers +/-8 output RMS widths, the frequency step
    gives at least 32 points per spectral RMS width, and the Nyquist band
    covers +/-8 sigma.
    """
    problems = []
    w_out = temporal_width(p, beta, x)
    if n * dt < 16.0 * w_out:
        problems.append(f"window {n * dt:.3e} s < 16 output RMS widths ({16 * w_out:.3e} s)")
    dnu = 2.0 * math.pi / (n * dt)
    if dnu > spectral_width(p) / 32.0:
        problems.append(f"frequency step {dnu:.3e} rad/s > RMS spectral width / 32")
    if math.pi / dt < 8.0 * p.sigma:
        problems.append(f"Nyquist band {math.pi / dt:.3e} rad/s < 8 sigma")
    if problems:
        raise GridError("grid under-resolved: " + "; ".join(problems))


def sampled_spectrum(p: PulseParams, nu: np.ndarray) -> np.ndarray:
    """Spectral amplitude ``A(nu)`` (carrier frame) normalised by Parseval."""
    return math.sqrt(2.0 * math.sqrt(math.pi) / p.sigma) * np.exp(-0.5 * (nu / p.sigma) ** 2)


def numeric_propagate(p: PulseParams, beta, alpha: float, x: float, *,
                      field: Optional[SampledField] = None,
                      grid: Optional[TimeGrid] = None,
                      check: bool = True) -> SampledField:
    """Propagate by mode-by-mode phase and discrete Fourier synthesis.

    Without ``field`` the input spectrum is the sampled Gaussian of ``p`` on
    the frequency grid conjugate to ``grid`` (default :func:`auto_grid`); the
    output is then the discrete Fourier sum of those modes, independent of
    the closed forms. With ``field`` (a time-domain envelope at ``x = 0``), its
    DFT supplies the modes and the output keeps its grid shifted by
    ``alpha*x``.

    Raises
    ------
    GridError
        When the grid fails :func:`check_grid`.
    """
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x}")
    beta = _as_complex_beta(beta)
    _complex_width(p.sigma, beta, x)
    if field is None:
        grid = grid or auto_grid(p, beta, x)
        n, dt = grid.n, grid.dt
        tau0 = grid.offset - (n // 2) * dt
        nu = 2.0 * math.pi * np.fft.fftfreq(n, dt)
        modes = sampled_spectrum(p, nu)
    else:
        n, dt = len(field), field.dt
        tau0 = field.t_start
        nu = 2.0 * math.pi * np.fft.fftfreq(n, dt)
        # A_k = dt * sum_j f_j exp(i nu_k t_j)
        modes = dt * n * np.fft.ifft(field.samples) * np.exp(1j * nu * tau0)
    if check:
        check_grid(p, beta, x, n, dt)
    dnu = 2.0 * math.pi / (n * dt)
    # Group delay handled by placing the output window at alpha*x.
    phase = np.exp(1j * beta * x * nu * nu)
    samples = dnu / (2.0 * math.pi) * np.fft.fft(modes * phase * np.exp(-1j * nu * tau0))
    return SampledField(t_start=alpha * x + tau0, dt=dt, samples=samples)


def moments(f: SampledField, backend=None) -> Moments:
    """Mean, RMS width and integral of ``|f|**2`` by the trapezoidal rule."""
    w = np.abs(f.samples) ** 2
    norm, mean, var = _kernels.trapezoid_moments(w, f.t_start, f.dt, backend=backend)
    if not norm > 0:
        raise ValueError("field has zero norm")
    return Moments(mean=mean, rms_width=math.sqrt(max(var, 0.0)), norm=norm)


def spectral_moments(f: SampledField, omega0: float = 0.0, backend=None) -> Moments:
    """Moments of the field's spectral density ``|A(nu)|**2 / 2pi`` (rad/s).

    The mean is reported in absolute frequency, ``omega0 + mean detuning``.
    """
    n, dt = len(f), f.dt
    a = dt * n * np.fft.ifft(f.samples)
    dens = np.fft.fftshift(np.abs(a) ** 2) / (2.0 * math.pi)
    dnu = 2.0 * math.pi / (n * dt)
    nu0 = -(n // 2) * dnu
    norm, mean, var = _kernels.trapezoid_moments(dens, nu0, dnu, backend=backend)
    if not norm > 0:
        raise ValueError("field has zero norm")
    return Moments(mean=omega0 + mean, rms_width=math.sqrt(max(var, 0.0)), norm=norm)
