"""Secrecy bounds for the frequency-coded scheme.

Two families of numbers are reported side by side:

* *paper form*: the published closed forms, kept verbatim so the headline
  estimate (about 1000 km for 1e9 rad/s separation, 1e12 rad/s reference
  bandwidth, 1 ps**2/km) reproduces exactly;
* *consistent form*: the same conditions evaluated with the widths of
  :mod:`fcqkd.wavepacket`, which carry the factor 4 in front of
  ``beta**2 x**2 sigma**4``. The two differ by an O(1) factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Callable, Optional

from .channel import FiberChannel, effective_broadening
from .wavepacket import PulseParams, temporal_width

TIMESCALE_WARN_RATIO = 10.0


@dataclass(frozen=True)
class SystemParams:
    """Emission states, detector bandwidths and secrecy margin (rad/s)."""

    omega1: float
    omega2: float
    omega0: float
    sigma1: float
    sigma2: float
    sigma_inf: float
    gamma1: float
    gamma2: float
    gamma_inf: float
    margin_kappa: float = 1.0

    @property
    def delta_omega(self) -> float:
        return abs(self.omega1 - self.omega2)

    def pulse(self, kind: int) -> PulseParams:
        """Wavepacket for signal kind 0 (Narrow1), 1 (Narrow2) or 2 (Broadband)."""
        return PulseParams(*(
            (self.omega1, self.sigma1),
            (self.omega2, self.sigma2),
            (self.omega0, self.sigma_inf),
        )[kind])

    def detector(self, kind: int) -> tuple[float, float]:
        """``(centre, bandwidth)`` for detector kind 0, 1 or 2 (Wideband)."""
        return (
            (self.omega1, self.gamma1),
            (self.omega2, self.gamma2),
            (self.omega0, self.gamma_inf),
        )[kind]


def paper_system(delta_omega: float = 1e9, sigma_inf: float = 1e12,
                 omega0: float = 1e15, sigma_narrow: float = 1e8,
                 margin_kappa: float = 1.0) -> SystemParams:
    """Parameter set of the published numerical estimate.

    The narrow linewidths are not given there; ``1e8`` rad/s is the largest
    round value meeting ``delta_omega > 3 (sigma1 + sigma2)``.
    """
    return SystemParams(
        omega1=omega0 - delta_omega / 2,
        omega2=omega0 + delta_omega / 2,
        omega0=omega0,
        sigma1=sigma_narrow,
        sigma2=sigma_narrow,
        sigma_inf=sigma_inf,
        gamma1=sigma_narrow,
        gamma2=sigma_narrow,
        gamma_inf=sigma_inf,
        margin_kappa=margin_kappa,
    )


# --------------------------------------------------------------- validation


@dataclass(frozen=True)
class Check:
    name: str
    ratio: float
    passed: bool
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[Check, ...]
    warnings: tuple[str, ...] = field(default=())

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def ratio(self, name: str) -> float:
        for c in self.checks:
            if c.name == name:
                return c.ratio
        raise KeyError(name)


def validate_parameters(sys: SystemParams) -> ValidationReport:
    """Check frequency distinguishability and the timescale separation.

    * distinguishability: ``delta_omega / (3 (sigma1 + sigma2)) > 1``
    * timescale: ``Dt12 / Dt_inf = sigma_inf / delta_omega > 1``, with a
      warning below 10

    Raises
    ------
    ValueError
        If any frequency, width or bandwidth is non-positive, or kappa < 1.
    """
    bad = [f.name for f in fields(sys)
           if f.name != "margin_kappa" and not getattr(sys, f.name) > 0]
    if bad:
        raise ValueError("non-positive parameters: " + ", ".join(bad))
    if not sys.margin_kappa >= 1:
        raise ValueError(f"margin_kappa must be >= 1, got {sys.margin_kappa}")

    dw = sys.delta_omega
    dist = dw / (3.0 * (sys.sigma1 + sys.sigma2))
    scale = sys.sigma_inf / dw
    checks = (
        Check("distinguishability", dist, dist > 1.0,
              f"delta_omega / 3(sigma1+sigma2) = {dist:.4g}"),
        Check("timescale", scale, scale > 1.0,
              f"sigma_inf / delta_omega = {scale:.4g}"),
    )
    warnings = []
    if scale < TIMESCALE_WARN_RATIO:
        warnings.append(
            f"timescale ratio {scale:.3g} < {TIMESCALE_WARN_RATIO:g}: "
            "broadband timing is not much sharper than the narrow-band measurement time"
        )
    return ValidationReport(checks=checks, warnings=tuple(warnings))


# ------------------------------------------------------------------- bounds


def eve_min_time(sys: SystemParams, ch: FiberChannel, x_e: float,
                 which: Optional[int] = None) -> float:
    """Shortest narrow-band measure-and-prepare time for an interceptor at ``x_e``.

    ``broadening(sigma_which, x_e) / delta_omega``; ``which`` is 1 or 2, and
    ``None`` takes the smaller of the two (the interceptor's best case).
    """
    if x_e < 0:
        raise ValueError(f"x_e must be non-negative, got {x_e}")
    if which is None:
        return min(eve_min_time(sys, ch, x_e, 1), eve_min_time(sys, ch, x_e, 2))
    if which not in (1, 2):
        raise ValueError(f"which must be 1, 2 or None, got {which}")
    sigma = sys.sigma1 if which == 1 else sys.sigma2
    return effective_broadening(ch, sigma, x_e) / sys.delta_omega


def reference_width(sys: SystemParams, ch: FiberChannel, x: float) -> float:
    """RMS arrival-time spread of the broadband reference pulse at ``x``."""
    return temporal_width(sys.pulse(2), ch.beta, x)


def secrecy_margin(sys: SystemParams, ch: FiberChannel, x: float, x_e: float = 0.0,
                   which: Optional[int] = None) -> float:
    """``Dt_E(x_e) / Dt_B(x)``; secrecy holds while this is at least ``margin_kappa``."""
    return eve_min_time(sys, ch, x_e, which) / reference_width(sys, ch, x)


@dataclass(frozen=True)
class SecureLength:
    """Maximum secure length (m). ``inf`` in both fields when unbounded."""

    paper: float
    consistent: float
    unbounded: bool = False


def _paper_bound(beta_mag: float, delta_omega: float, sigma_inf: float) -> float:
    return 1.0 / (delta_omega * sigma_inf * beta_mag)


def max_secure_length(sys: SystemParams, ch: FiberChannel) -> SecureLength:
    """Lossless bound: published ``1 / (delta_omega sigma_inf beta)`` and the consistent root.

    The consistent form solves ``secrecy_margin(x, x_e=0) = margin_kappa`` for
    real ``beta``; it is 0 when the margin is already below kappa at ``x = 0``.
    """
    beta = abs(ch.beta_re)
    if beta == 0.0:
        return SecureLength(math.inf, math.inf, True)
    s = sys.sigma_inf
    radicand = 2.0 * s * s / (sys.margin_kappa * sys.delta_omega) ** 2 - 1.0
    consistent = math.sqrt(radicand) / (2.0 * beta * s * s) if radicand > 0 else 0.0
    return SecureLength(_paper_bound(beta, sys.delta_omega, s), consistent)


@dataclass(frozen=True)
class LossyBound:
    """Bounds with absorption-renormalised dispersion (m).

    ``weak_attenuation``: published closed form with ``|beta|``.
    ``exact``: root of the published renormalised condition, RHS taken as
    ``(sigma_inf / delta_omega)**2``.
    ``consistent``: root of ``secrecy_margin = margin_kappa`` with complex beta.
    """

    weak_attenuation: float
    exact: float
    consistent: float
    weak_unbounded: bool = False
    exact_unbounded: bool = False


def renormalised_condition_lhs(sys: SystemParams, ch: FiberChannel, x: float) -> float:
    s2 = sys.sigma_inf ** 2
    one = 1.0 + s2 * ch.beta_im * x
    g = ch.beta_re * x * s2
    return (one * one + g * g) / (one * one)


def _bisect(g: Callable[[float], float], lo: float, hi: float, rtol: float) -> float:
    """Root of an increasing ``g`` with ``g(lo) <= 0 < g(hi)``."""
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _bracket(g: Callable[[float], float], start: float, limit: float = 1e30) -> Optional[float]:
    hi = max(start, 1.0)
    while g(hi) <= 0:
        hi *= 2.0
        if hi > limit:
            return None
    return hi


def max_secure_length_lossy(sys: SystemParams, ch: FiberChannel,
                            rtol: float = 1e-12) -> LossyBound:
    """Secure length with ``beta = beta_re + i beta_im``.

    With ``beta_im == 0`` the weak-attenuation form equals
    ``max_secure_length(...).paper`` bit for bit and the consistent field
    equals ``max_secure_length(...).consistent``.
    """
    mag = math.hypot(ch.beta_im, ch.beta_re)
    if mag == 0.0:
        return LossyBound(math.inf, math.inf, math.inf, True, True)
    lossless = max_secure_length(sys, ch) if ch.beta_re != 0.0 else None
    weak = _paper_bound(mag, sys.delta_omega, sys.sigma_inf)

    rhs = (sys.sigma_inf / sys.delta_omega) ** 2
    # LHS saturates at 1 + (beta_re/beta_im)**2 as x -> inf.
    if ch.beta_re == 0.0 or (ch.beta_im > 0 and 1.0 + (ch.beta_re / ch.beta_im) ** 2 <= rhs):
        exact, exact_unbounded = math.inf, True
    elif rhs <= 1.0:
        exact, exact_unbounded = 0.0, False
    else:
        def g(x):
            return renormalised_condition_lhs(sys, ch, x) - rhs

        exact = _bisect(g, 0.0, _bracket(g, weak), rtol)
        exact_unbounded = False

    if ch.beta_im == 0.0:
        consistent = lossless.consistent
    elif secrecy_margin(sys, ch, 0.0) < sys.margin_kappa:
        consistent = 0.0
    else:
        def h(x):
            return sys.margin_kappa - secrecy_margin(sys, ch, x)

        consistent = _bisect(h, 0.0, _bracket(h, weak), rtol)
    return LossyBound(weak, exact, consistent, False, exact_unbounded)
