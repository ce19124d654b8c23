"""Key distribution rounds, sifting and the timing check.

Each round consumes eight uniforms from the session generator in a fixed
order (Alice's state, intercept, photon reaching Eve, Eve's guess, Bob's
detector, click, and two for the Box-Muller arrival-time normals). Drawing
``(n, 8)`` at once therefore reproduces ``n`` consecutive :func:`run_round`
calls exactly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import _kernels
from .channel import arrival_width, survival_probability
from .config import SessionConfig
from .security import eve_min_time, reference_width, secrecy_margin

DRAWS_PER_ROUND = 8
CHUNK = 1 << 18
PERIOD_FACTOR = 100.0


class SignalKind(enum.IntEnum):
    NARROW1 = 0
    NARROW2 = 1
    BROADBAND = 2

    @property
    def narrow(self) -> bool:
        return self is not SignalKind.BROADBAND


class DetectorKind(enum.IntEnum):
    NARROW1 = 0
    NARROW2 = 1
    WIDEBAND = 2

    @property
    def narrow(self) -> bool:
        return self is not DetectorKind.WIDEBAND


class Verdict(str, enum.Enum):
    CLEAN = "Clean"
    DETECTED = "EavesdropperDetected"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class Intercepted:
    measured: SignalKind
    resend_delay: float


@dataclass(frozen=True)
class Round:
    """One trial. ``t_b`` is ``None`` unless Bob's detector clicked.

    Sifting only looks at the announced detector *class*; Bob's exact
    narrow-band frequency enters solely through ``key_bit_b``.
    """

    index: int
    alice: SignalKind
    t_a: float
    bob: DetectorKind
    clicked: bool
    t_b: Optional[float] = None
    eve_action: Optional[Intercepted] = None

    @property
    def class_match(self) -> bool:
        return self.alice.narrow == self.bob.narrow

    @property
    def kept(self) -> bool:
        return self.clicked and self.class_match

    @property
    def for_key(self) -> bool:
        return self.kept and self.alice.narrow

    @property
    def for_timing(self) -> bool:
        return self.kept and not self.alice.narrow

    @property
    def key_bit_a(self) -> Optional[int]:
        return int(self.alice) if self.for_key else None

    @property
    def key_bit_b(self) -> Optional[int]:
        return int(self.bob) if self.for_key else None

    def residual(self, expected_delay: float) -> Optional[float]:
        if self.t_b is None:
            return None
        return self.t_b - self.t_a - expected_delay


@dataclass(frozen=True)
class TimingStats:
    n_check: int
    mean_residual: float
    std_residual: float
    threshold: float
    z_score: float


@dataclass(frozen=True)
class SessionReport:
    rounds: int
    sifted_key_a: tuple[int, ...]
    sifted_key_b: tuple[int, ...]
    qber: float
    discard_breakdown: dict
    timing: TimingStats
    verdict: Verdict
    security_margin: float
    eve_intercepts: int = 0


class Sifted(NamedTuple):
    key_a: list
    key_b: list
    discards: dict
    timing: list


# ----------------------------------------------------------------- elements


def _check_priors(priors) -> np.ndarray:
    pr = np.asarray(priors, dtype=np.float64)
    if pr.shape != (3,) or np.any(pr < 0) or not math.isclose(float(pr.sum()), 1.0, abs_tol=1e-9):
        raise ValueError(f"priors must be three non-negative numbers summing to 1, got {priors!r}")
    return pr


def _cumulative(priors) -> tuple[float, float]:
    pr = _check_priors(priors)
    c0 = float(pr[0])
    c1 = float(pr[0] + pr[1])
    # A zero-probability tail must never be drawn.
    if pr[2] == 0:
        c1 = 2.0
    if pr[1] == 0 and pr[2] == 0:
        c0 = 2.0
    return c0, c1


def alice_choose(rng: np.random.Generator, priors=(1 / 3, 1 / 3, 1 / 3), *,
                 index: int = 0, period: float = 0.0) -> tuple[SignalKind, float]:
    """Random emission state and its time on the ``index * period`` clock."""
    c0, c1 = _cumulative(priors)
    u = rng.random()
    kind = 0 if u < c0 else (1 if u < c1 else 2)
    return SignalKind(kind), index * period


def detector_click_probability(signal: tuple[float, float], det: tuple[float, float],
                               survival: float = 1.0, efficiency: float = 1.0) -> float:
    """Click probability of a Gaussian detector for a Gaussian-spectrum photon.

    ``signal = (omega_s, sigma_s)``, ``det = (omega_d, gamma_d)``. The photon
    density has variance ``sigma_s**2`` and the detector response is
    ``exp(-(omega - omega_d)**2 / (2 gamma_d**2))``::

        survival * efficiency * gamma_d / sqrt(sigma_s**2 + gamma_d**2)
                 * exp(-(omega_s - omega_d)**2 / (2 (sigma_s**2 + gamma_d**2)))
    """
    ws, ss = signal
    wd, gd = det
    if not (ss > 0 and gd > 0):
        raise ValueError("spectral widths must be positive")
    s2 = ss * ss + gd * gd
    d = ws - wd
    return survival * efficiency * gd / math.sqrt(s2) * math.exp(-d * d / (2.0 * s2))


def eve_intercept(rng: np.random.Generator, signal: SignalKind, cfg: SessionConfig,
                  x_e: Optional[float] = None) -> Intercepted:
    """Best-case intercept-resend: exact narrow discrimination, minimal delay.

    Narrow inputs are identified correctly; a broadband input gives a fair
    coin between the two narrow states. The resend leaves after
    :func:`fcqkd.security.eve_min_time` for the measured state.
    """
    x_e = cfg.eve.x_e if x_e is None else x_e
    signal = SignalKind(signal)
    if signal.narrow:
        measured = signal
    else:
        measured = SignalKind.NARROW1 if rng.random() < 0.5 else SignalKind.NARROW2
    delay = eve_min_time(cfg.system, cfg.channel, x_e, which=int(measured) + 1)
    return Intercepted(measured, delay)


def emission_period(cfg: SessionConfig) -> float:
    if cfg.run.emission_period is not None:
        return cfg.run.emission_period
    ch, sys, x = cfg.channel, cfg.system, cfg.channel.length
    widest = max(arrival_width(ch, sys.pulse(k), x) for k in range(3))
    return PERIOD_FACTOR * widest


def round_tables(cfg: SessionConfig) -> dict:
    """Per-kind click probabilities, widths and delays for the round kernel."""
    sys, ch, eve = cfg.system, cfg.channel, cfg.eve
    x = ch.length
    x_e = eve.x_e if eve.enabled else 0.0
    eff = cfg.run.efficiency
    c0, c1 = _cumulative(cfg.run.priors)

    surv = survival_probability(ch, x)
    surv_after = survival_probability(ch, x - x_e)
    p_direct = np.array([[detector_click_probability((sys.pulse(a).omega0, sys.pulse(a).sigma),
                                                     sys.detector(b), surv, eff)
                          for b in range(3)] for a in range(3)])
    p_eve = np.array([[detector_click_probability((sys.pulse(k).omega0, sys.pulse(k).sigma),
                                                  sys.detector(b), surv_after, eff)
                       for b in range(3)] for k in range(2)])
    return dict(
        cum0=c0, cum1=c1,
        eve_on=eve.enabled,
        p_intercept=eve.intercept_probability,
        p_reach_eve=survival_probability(ch, x_e),
        p_direct=p_direct,
        delay_direct=ch.alpha * x,
        width_direct=np.array([arrival_width(ch, sys.pulse(a), x) for a in range(3)]),
        delay_to_eve=ch.alpha * x_e,
        width_to_eve=np.array([arrival_width(ch, sys.pulse(a), x_e) for a in range(3)]),
        eve_delay=np.array([eve_min_time(sys, ch, x_e, which=k + 1) for k in range(2)]),
        delay_from_eve=ch.alpha * (x - x_e),
        width_from_eve=np.array([arrival_width(ch, sys.pulse(k), x - x_e) for k in range(2)]),
        p_eve=p_eve,
    )


def _normals(u: np.ndarray) -> np.ndarray:
    # Box-Muller on the last two draws; 1 - u keeps the log argument in (0, 1].
    r = np.sqrt(-2.0 * np.log1p(-u[:, 6]))
    phi = 2.0 * math.pi * u[:, 7]
    return np.stack([r * np.cos(phi), r * np.sin(phi)], axis=1)


@dataclass
class RoundTable:
    """Column-wise record of consecutive rounds starting at ``start``."""

    start: int
    alice: np.ndarray
    bob: np.ndarray
    eve_kind: np.ndarray
    clicked: np.ndarray
    t_a: np.ndarray
    t_b: np.ndarray
    eve_delay: np.ndarray
    expected_delay: float

    def __len__(self):
        return self.alice.shape[0]

    @property
    def residual(self) -> np.ndarray:
        return self.t_b - self.t_a - self.expected_delay

    @property
    def kept(self) -> np.ndarray:
        return self.clicked & ((self.alice < 2) == (self.bob < 2))

    @property
    def for_key(self) -> np.ndarray:
        return self.kept & (self.alice < 2)

    @property
    def for_timing(self) -> np.ndarray:
        return self.kept & (self.alice == 2)

    def round(self, i: int) -> Round:
        k = int(self.eve_kind[i])
        action = Intercepted(SignalKind(k), float(self.eve_delay[k])) if k >= 0 else None
        clicked = bool(self.clicked[i])
        return Round(
            index=self.start + i,
            alice=SignalKind(int(self.alice[i])),
            t_a=float(self.t_a[i]),
            bob=DetectorKind(int(self.bob[i])),
            clicked=clicked,
            t_b=float(self.t_b[i]) if clicked else None,
            eve_action=action,
        )

    def rounds(self) -> list[Round]:
        return [self.round(i) for i in range(len(self))]


def simulate_block(cfg: SessionConfig, u: np.ndarray, start: int = 0, *,
                   tables: Optional[dict] = None, period: Optional[float] = None,
                   backend=None) -> RoundTable:
    """Resolve rounds ``start .. start+len(u)-1`` from their uniforms ``u`` of shape ``(n, 8)``."""
    tables = tables if tables is not None else round_tables(cfg)
    period = emission_period(cfg) if period is None else period
    n = u.shape[0]
    t_a = (start + np.arange(n, dtype=np.float64)) * period
    alice, bob, eve_kind, clicked, t_b = _kernels.simulate_rounds(
        u[:, :6], _normals(u), t_a, backend=backend, **tables)
    return RoundTable(start, alice, bob, eve_kind, clicked, t_a, t_b,
                      tables["eve_delay"], cfg.channel.alpha * cfg.channel.length)


def run_round(rng: np.random.Generator, cfg: SessionConfig, index: int, *, backend=None) -> Round:
    """Alice -> (Eve) -> fiber -> Bob for a single trial."""
    u = rng.random((1, DRAWS_PER_ROUND))
    return simulate_block(cfg, u, index, backend=backend).round(0)


def simulate(cfg: SessionConfig, n_rounds: Optional[int] = None, seed: Optional[int] = None,
             *, backend=None) -> RoundTable:
    """All rounds of a session as one table (memory grows with ``n_rounds``)."""
    n = cfg.run.n_rounds if n_rounds is None else n_rounds
    rng = np.random.default_rng(cfg.run.master_seed if seed is None else seed)
    return simulate_block(cfg, rng.random((n, DRAWS_PER_ROUND)), 0, backend=backend)


# ------------------------------------------------------------------- sifting


def sift(rounds: Sequence[Round]) -> Sifted:
    """Public discussion: keep clicked rounds whose announced classes agree.

    Narrow/narrow rounds give key bits (omega1 -> 0, omega2 -> 1);
    broadband/wideband rounds go to the timing pool. Discards are counted as
    ``no_click`` (takes precedence) or ``type_mismatch``.
    """
    key_a, key_b, timing = [], [], []
    discards = {"no_click": 0, "type_mismatch": 0}
    for r in rounds:
        if not r.clicked:
            discards["no_click"] += 1
        elif not r.class_match:
            discards["type_mismatch"] += 1
        elif r.alice.narrow:
            key_a.append(r.key_bit_a)
            key_b.append(r.key_bit_b)
        else:
            timing.append(r)
    return Sifted(key_a, key_b, discards, timing)


def timing_threshold(cfg: SessionConfig, n: int) -> float:
    width = reference_width(cfg.system, cfg.channel, cfg.channel.length)
    stat = cfg.run.threshold_k * width / math.sqrt(n) if n > 0 else math.inf
    return max(stat, cfg.run.threshold_f / cfg.system.delta_omega)


def timing_from_residuals(residuals, cfg: SessionConfig) -> tuple[TimingStats, Verdict]:
    r = np.asarray(residuals, dtype=np.float64)
    n = r.shape[0]
    width = reference_width(cfg.system, cfg.channel, cfg.channel.length)
    threshold = timing_threshold(cfg, n)
    if n == 0:
        return TimingStats(0, math.nan, math.nan, threshold, math.nan), Verdict.INCONCLUSIVE
    mean = float(np.mean(r))
    std = float(np.std(r, ddof=1)) if n > 1 else 0.0
    z = mean / (width / math.sqrt(n))
    stats = TimingStats(n, mean, std, threshold, z)
    if n < cfg.run.min_check_rounds:
        return stats, Verdict.INCONCLUSIVE
    return stats, (Verdict.DETECTED if mean > threshold else Verdict.CLEAN)


def timing_analysis(rounds: Sequence[Round], cfg: SessionConfig) -> tuple[TimingStats, Verdict]:
    """One-sided test on ``t_B - t_A - alpha*L`` over broadband-kept rounds.

    Eavesdropping is declared when the mean residual exceeds
    ``max(k * Dt_B / sqrt(n), f / delta_omega)``; fewer than
    ``min_check_rounds`` pool rounds give ``Inconclusive``.
    """
    expected = cfg.channel.alpha * cfg.channel.length
    pool = [r.residual(expected) for r in rounds if r.for_timing]
    return timing_from_residuals(pool, cfg)


def _report(cfg, n, key_a, key_b, discards, residuals, intercepts) -> SessionReport:
    key_a = tuple(int(b) for b in key_a)
    key_b = tuple(int(b) for b in key_b)
    errors = sum(a != b for a, b in zip(key_a, key_b))
    stats, verdict = timing_from_residuals(residuals, cfg)
    return SessionReport(
        rounds=n,
        sifted_key_a=key_a,
        sifted_key_b=key_b,
        qber=errors / len(key_a) if key_a else 0.0,
        discard_breakdown=dict(discards),
        timing=stats,
        verdict=verdict,
        security_margin=secrecy_margin(cfg.system, cfg.channel, cfg.channel.length, 0.0),
        eve_intercepts=int(intercepts),
    )


def report_from_table(cfg: SessionConfig, table: RoundTable) -> SessionReport:
    key = table.for_key
    discards = {
        "no_click": int(np.count_nonzero(~table.clicked)),
        "type_mismatch": int(np.count_nonzero(table.clicked & ~table.kept)),
    }
    return _report(cfg, len(table), table.alice[key], table.bob[key], discards,
                   table.residual[table.for_timing], np.count_nonzero(table.eve_kind >= 0))


def run_session(cfg: SessionConfig, n_rounds: Optional[int] = None, seed: Optional[int] = None,
                *, backend=None) -> SessionReport:
    """Run, sift and analyse a full session in bounded-memory chunks.

    Reproducible from ``(cfg, seed)``; ``seed`` defaults to ``cfg.run.master_seed``.
    """
    n = cfg.run.n_rounds if n_rounds is None else n_rounds
    rng = np.random.default_rng(cfg.run.master_seed if seed is None else seed)
    tables = round_tables(cfg)
    period = emission_period(cfg)
    key_a, key_b, residuals = [], [], []
    discards = {"no_click": 0, "type_mismatch": 0}
    intercepts = 0
    for start in range(0, n, CHUNK):
        m = min(CHUNK, n - start)
        t = simulate_block(cfg, rng.random((m, DRAWS_PER_ROUND)), start,
                           tables=tables, period=period, backend=backend)
        k = t.for_key
        key_a.append(t.alice[k])
        key_b.append(t.bob[k])
        residuals.append(t.residual[t.for_timing])
        discards["no_click"] += int(np.count_nonzero(~t.clicked))
        discards["type_mismatch"] += int(np.count_nonzero(t.clicked & ~t.kept))
        intercepts += int(np.count_nonzero(t.eve_kind >= 0))
    cat = (lambda parts, dt: np.concatenate(parts) if parts else np.empty(0, dt))
    return _report(cfg, n, cat(key_a, np.int8), cat(key_b, np.int8), discards,
                   cat(residuals, np.float64), intercepts)


def expected_key_fraction(cfg: SessionConfig) -> float:
    """Kept-for-key probability per round by enumerating the 3x3 choice matrix (no Eve)."""
    t = round_tables(cfg.with_eve(False))
    pr = _check_priors(cfg.run.priors)
    return float(sum(pr[a] / 3.0 * t["p_direct"][a, b] for a in range(2) for b in range(2)))
