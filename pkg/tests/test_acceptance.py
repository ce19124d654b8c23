"""Acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line with the measured figures
and then asserts. Run ``pytest tests/test_acceptance.py -v -s`` to see the
lines inline, or ``python tests/test_acceptance.py`` for the summary alone.
"""

import json
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from fcqkd import cli, protocol, security  # noqa: E402
from fcqkd.channel import FiberChannel  # noqa: E402
from fcqkd.protocol import Verdict  # noqa: E402
from fcqkd.wavepacket import (  # noqa: E402
    PulseParams,
    analytic_field,
    auto_grid,
    moments,
    numeric_propagate,
    spectral_moments,
    temporal_width,
)
from oracles import quad_gaussian_overlap  # noqa: E402

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
ALPHA = 5e-9
SIGMAS = (1e9, 1e10, 1e12)
XS = (0.0, 1e4, 1e6)
BETAS = (0.0, 1e-27)
SESSIONS = 1000
ROUNDS_PER_SESSION = 10_000


def report(name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    print(line)
    return ok, line


def paper_cfg():
    return cli.load_config(CONFIGS / "paper.yaml")


# ----------------------------------------------------------------- checks


def check_bound():
    t0 = time.perf_counter()
    code, text = cli.cmd_bound(paper_cfg())
    doc = json.loads(cli.cmd_bound(paper_cfg(), "structured")[1])
    dt = time.perf_counter() - t0
    ok = (code == 0 and "x_B (paper form): 1000 km" in text.splitlines()
          and doc["bound"]["x_b_paper_m"] == 1e6 and dt < 1.0)
    return report("1 bound reproduction", ok,
                  f"x_B = {doc['bound']['x_b_paper_m']!r} m, {dt * 1e3:.1f} ms")


def check_oracle():
    t0 = time.perf_counter()
    worst = 0.0
    for s in SIGMAS:
        for x in XS:
            for b in BETAS:
                p = PulseParams(1e15, s)
                f = numeric_propagate(p, b, ALPHA, x)
                ref = f.samples
                err = np.linalg.norm(analytic_field(p, b, ALPHA, x, f.times()) - ref) / np.linalg.norm(ref)
                worst = max(worst, float(err))
    dt = time.perf_counter() - t0
    ok = worst < 1e-6 and dt < 30
    return report("2 oracle equivalence", ok, f"max rel L2 = {worst:.2e} over 18 points, {dt:.2f} s")


def check_moments():
    t0 = time.perf_counter()
    worst_rms = worst_spec = 0.0
    for s in SIGMAS:
        for b in BETAS:
            p = PulseParams(1e15, s)
            grid = auto_grid(p, b, max(XS))
            spec0 = None
            for x in XS:
                f = numeric_propagate(p, b, ALPHA, x, grid=grid)
                closed = math.sqrt((1 / (2 * s * s)) * (1 + 4 * b * b * x * x * s**4))
                worst_rms = max(worst_rms, abs(moments(f).rms_width / closed - 1))
                sw = spectral_moments(f, p.omega0).rms_width
                spec0 = sw if spec0 is None else spec0
                worst_spec = max(worst_spec, abs(sw / spec0 - 1))
    dt = time.perf_counter() - t0
    ok = worst_rms < 1e-4 and worst_spec < 1e-9 and dt < 30
    return report("3 moment laws", ok,
                  f"RMS rel err {worst_rms:.2e}, spectral drift {worst_spec:.2e}, {dt:.2f} s")


def brute_force_key_fraction(cfg):
    sys_ = cfg.system
    total = 0.0
    for a in range(2):
        for b in range(2):
            sig, det = sys_.pulse(a), sys_.detector(b)
            total += (1 / 3) * (1 / 3) * quad_gaussian_overlap(sig.omega0, sig.sigma, *det)
    return total


def check_protocol_stats():
    t0 = time.perf_counter()
    cfg = paper_cfg()
    rep = protocol.run_session(cfg, n_rounds=100_000)
    frac = len(rep.sifted_key_a) / rep.rounds
    expected = brute_force_key_fraction(cfg)
    dt = time.perf_counter() - t0
    ok = rep.qber < 1e-3 and abs(frac - expected) <= 0.005 and dt < 60
    return report("4 protocol statistics", ok,
                  f"qber = {rep.qber:.2e}, key fraction {frac:.4f} vs {expected:.4f}, {dt:.2f} s")


def check_detection_power():
    t0 = time.perf_counter()
    base = paper_cfg().with_run(n_rounds=ROUNDS_PER_SESSION)
    detected = false_alarms = 0
    min_checks = math.inf
    for seed in range(SESSIONS):
        with_eve = protocol.run_session(base.with_eve(True), seed=seed)
        clean = protocol.run_session(base, seed=seed)
        min_checks = min(min_checks, with_eve.timing.n_check, clean.timing.n_check)
        detected += with_eve.verdict is Verdict.DETECTED
        false_alarms += clean.verdict is Verdict.DETECTED
    dt = time.perf_counter() - t0
    power, fa = detected / SESSIONS, false_alarms / SESSIONS
    ok = min_checks >= 100 and power >= 0.99 and fa <= 0.01 and dt < 600
    return report("5 detection power", ok,
                  f"power {power:.3f}, false alarms {fa:.3f}, min checks {min_checks}, "
                  f"{SESSIONS} sessions x {ROUNDS_PER_SESSION} rounds, {dt:.1f} s")


def check_bound_consistency():
    worst = 0.0
    bitwise = True
    for kappa in (1.0, 2.0, 10.0, 100.0):
        for beta in (1e-27, 2.5e-27, 1e-26):
            s = security.paper_system(margin_kappa=kappa)
            ch = FiberChannel(1e6, beta_re=beta)
            lossless = security.max_secure_length(s, ch)
            m = security.secrecy_margin(s, ch, lossless.consistent)
            worst = max(worst, abs(m / kappa - 1))
            lossy = security.max_secure_length_lossy(s, ch)
            bitwise &= (lossy.weak_attenuation == lossless.paper
                        and lossy.consistent == lossless.consistent)
    ok = worst < 1e-9 and bitwise
    return report("6 bound consistency", ok,
                  f"max |margin/kappa - 1| = {worst:.1e}, lossy == lossless bitwise: {bitwise}")


def check_determinism():
    for eve in (False, True):
        cfg = paper_cfg().with_eve(eve, intercept_probability=0.5)
        a = cli.cmd_simulate(cfg, "structured")[1].encode()
        b = cli.cmd_simulate(cfg, "structured")[1].encode()
        if a != b:
            return report("7 determinism", False, f"reports differ (eve={eve})")
    return report("7 determinism", True, f"structured reports byte-identical ({len(a)} bytes)")


CHECKS = [check_bound, check_oracle, check_moments, check_protocol_stats,
          check_detection_power, check_bound_consistency, check_determinism]


@pytest.mark.parametrize("check", CHECKS, ids=[c.__name__ for c in CHECKS])
def test_acceptance(check, capsys):
    with capsys.disabled():
        print()
        ok, line = check()
    assert ok, line


if __name__ == "__main__":
    results = [c()[0] for c in CHECKS]
    print(f"{sum(results)}/{len(results)} criteria passed")
    sys.exit(0 if all(results) else 1)
