"""``fcqkd`` command line: validate | bound | simulate | sweep.

Exit codes: 0 success / Clean, 1 configuration error, 2 usage error,
3 parameter validation failed, 4 Inconclusive, 5 EavesdropperDetected.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import protocol, security
from .config import ConfigError, SessionConfig, config_to_dict, parse_config, parse_quantity

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_USAGE = 2
EXIT_INVALID = 3
EXIT_INCONCLUSIVE = 4
EXIT_DETECTED = 5

VERDICT_EXIT = {
    protocol.Verdict.CLEAN: EXIT_OK,
    protocol.Verdict.INCONCLUSIVE: EXIT_INCONCLUSIVE,
    protocol.Verdict.DETECTED: EXIT_DETECTED,
}

SWEEP_AXES = {"length": "length", "delta_omega": "frequency", "sigma_inf": "frequency",
              "beta": "gvd"}


def _finite(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return _finite(obj)


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _km(v: float) -> str:
    return "unbounded" if math.isinf(v) else f"{v / 1e3:.6g} km"


# ------------------------------------------------------------------ commands


def validation_dict(cfg: SessionConfig) -> dict:
    rep = security.validate_parameters(cfg.system)
    return {
        "passed": rep.passed,
        "checks": {c.name: {"ratio": c.ratio, "passed": c.passed} for c in rep.checks},
        "warnings": list(rep.warnings),
    }


def cmd_validate(cfg: SessionConfig, fmt: str = "text") -> tuple[int, str]:
    rep = security.validate_parameters(cfg.system)
    if fmt == "structured":
        text = dumps({"validation": validation_dict(cfg), "config": config_to_dict(cfg)})
    else:
        lines = [f"{'check':<20} {'ratio':>12}  result"]
        for c in rep.checks:
            lines.append(f"{c.name:<20} {c.ratio:>12.4g}  {'pass' if c.passed else 'FAIL'}")
        lines += [f"warning: {w}" for w in rep.warnings]
        lines.append(f"overall: {'pass' if rep.passed else 'FAIL'}")
        text = "\n".join(lines) + "\n"
    return (EXIT_OK if rep.passed else EXIT_INVALID), text


def bound_dict(cfg: SessionConfig) -> dict:
    sys_, ch = cfg.system, cfg.channel
    lossless = security.max_secure_length(sys_, ch)
    lossy = security.max_secure_length_lossy(sys_, ch)
    x = ch.length
    return {
        "x_b_paper_m": lossless.paper,
        "x_b_consistent_m": lossless.consistent,
        "unbounded": lossless.unbounded,
        "x_b_lossy_weak_m": lossy.weak_attenuation,
        "x_b_lossy_exact_m": lossy.exact,
        "x_b_lossy_consistent_m": lossy.consistent,
        "length_m": x,
        "dt_b_s": security.reference_width(sys_, ch, x),
        "dt_e_s": security.eve_min_time(sys_, ch, 0.0, cfg.eve.which),
        "secrecy_margin": security.secrecy_margin(sys_, ch, x, 0.0, cfg.eve.which),
        "margin_kappa": sys_.margin_kappa,
    }


def cmd_bound(cfg: SessionConfig, fmt: str = "text") -> tuple[int, str]:
    b = bound_dict(cfg)
    if fmt == "structured":
        return EXIT_OK, dumps({"bound": b, "config": config_to_dict(cfg)})
    lines = [
        f"x_B (paper form): {_km(b['x_b_paper_m'])}",
        f"x_B (consistent form, kappa={b['margin_kappa']:g}): {_km(b['x_b_consistent_m'])}",
        f"x_B (weak attenuation): {_km(b['x_b_lossy_weak_m'])}",
        f"x_B (renormalised, exact): {_km(b['x_b_lossy_exact_m'])}",
        f"x_B (renormalised, consistent): {_km(b['x_b_lossy_consistent_m'])}",
        f"secrecy margin at {_km(b['length_m'])}: {b['secrecy_margin']:.6g} "
        f"(Dt_E = {b['dt_e_s']:.4g} s, Dt_B = {b['dt_b_s']:.4g} s)",
    ]
    return EXIT_OK, "\n".join(lines) + "\n"


def report_dict(cfg: SessionConfig, rep: protocol.SessionReport) -> dict:
    t = rep.timing
    return {
        "master_seed": cfg.run.master_seed,
        "config": config_to_dict(cfg),
        "rounds": rep.rounds,
        "verdict": rep.verdict.value,
        "qber": rep.qber,
        "key_length": len(rep.sifted_key_a),
        "sifted_key_a": "".join(map(str, rep.sifted_key_a)),
        "sifted_key_b": "".join(map(str, rep.sifted_key_b)),
        "discard_breakdown": rep.discard_breakdown,
        "eve_intercepts": rep.eve_intercepts,
        "timing": asdict(t),
        "margins": {
            "security_margin": rep.security_margin,
            "margin_kappa": cfg.system.margin_kappa,
            **{k: v for k, v in bound_dict(cfg).items() if k.startswith("x_b")},
        },
    }


LOG_HEADER = ["index", "alice_kind", "bob_kind", "clicked", "t_A_s", "t_B_s", "residual_s",
              "kept", "bit_A", "bit_B", "eve_intercepted"]


def write_round_log(table: protocol.RoundTable, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(LOG_HEADER)
    res = table.residual
    kept = table.kept
    key = table.for_key
    for i in range(len(table)):
        clicked = bool(table.clicked[i])
        w.writerow([
            table.start + i,
            protocol.SignalKind(int(table.alice[i])).name,
            protocol.DetectorKind(int(table.bob[i])).name,
            int(clicked),
            repr(float(table.t_a[i])),
            repr(float(table.t_b[i])) if clicked else "",
            repr(float(res[i])) if clicked else "",
            int(kept[i]),
            int(table.alice[i]) if key[i] else "",
            int(table.bob[i]) if key[i] else "",
            int(table.eve_kind[i] >= 0),
        ])


def cmd_simulate(cfg: SessionConfig, fmt: str = "text", out: Optional[Path] = None,
                 log: Optional[Path] = None, backend=None) -> tuple[int, str]:
    code, vtext = cmd_validate(cfg)
    if code != EXIT_OK:
        return code, vtext
    if log is not None:
        table = protocol.simulate(cfg, backend=backend)
        rep = protocol.report_from_table(cfg, table)
        with open(log, "w", newline="") as fh:
            write_round_log(table, fh)
    else:
        rep = protocol.run_session(cfg, backend=backend)
    doc = dumps(report_dict(cfg, rep))
    if out is not None:
        Path(out).write_text(doc)
    if fmt == "structured":
        text = doc
    else:
        t = rep.timing
        text = "\n".join([
            f"rounds: {rep.rounds}  eve: {'on' if cfg.eve.enabled else 'off'}  seed: {cfg.run.master_seed}",
            f"sifted key: {len(rep.sifted_key_a)} bits, qber = {rep.qber:.3g}",
            f"discarded: no-click {rep.discard_breakdown['no_click']}, "
            f"type-mismatch {rep.discard_breakdown['type_mismatch']}",
            f"timing: n = {t.n_check}, mean residual = {t.mean_residual:.4g} s, "
            f"threshold = {t.threshold:.4g} s, z = {t.z_score:.3g}",
            f"security margin (Dt_E/Dt_B): {rep.security_margin:.4g}",
            f"verdict: {rep.verdict.value}",
        ]) + "\n"
    return VERDICT_EXIT[rep.verdict], text


def apply_axis(cfg: SessionConfig, axis: str, value: float) -> SessionConfig:
    if axis == "length":
        cfg = cfg.with_channel(length=value)
        if cfg.eve.x_e > value:
            cfg = replace(cfg, eve=replace(cfg.eve, x_e=value))
        return cfg
    if axis == "beta":
        return cfg.with_channel(beta_re=value)
    s = cfg.system
    if axis == "delta_omega":
        mid = 0.5 * (s.omega1 + s.omega2)
        sign = 1.0 if s.omega2 >= s.omega1 else -1.0
        return cfg.with_system(omega1=mid - sign * value / 2, omega2=mid + sign * value / 2)
    if axis == "sigma_inf":
        kw = {"sigma_inf": value}
        if s.gamma_inf == s.sigma_inf:
            kw["gamma_inf"] = value
        return cfg.with_system(**kw)
    raise ValueError(f"unknown sweep axis {axis!r}")


def detection_power(cfg: SessionConfig, sessions: int, backend=None) -> float:
    cfg = cfg.with_eve(True)
    hits = sum(
        protocol.run_session(cfg, seed=cfg.run.master_seed + i, backend=backend).verdict
        is protocol.Verdict.DETECTED
        for i in range(sessions)
    )
    return hits / sessions


def cmd_sweep(cfg: SessionConfig, axis: str, values, mc: bool = False,
              mc_sessions: int = 100, backend=None) -> tuple[int, str]:
    if axis not in SWEEP_AXES:
        raise ValueError(f"axis must be one of {sorted(SWEEP_AXES)}")
    kind = {"length": "m", "frequency": "rad_s", "gvd": "s2_m"}[SWEEP_AXES[axis]]
    header = [f"{axis}_{kind}", "dt_b_s", "dt_e_s", "margin", "x_b_paper_m",
              "x_b_consistent_m", "x_b_lossy_weak_m"]
    if mc:
        header.append("mc_power")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for v in values:
        c = apply_axis(cfg, axis, float(v))
        b = bound_dict(c)
        row = [v, b["dt_b_s"], b["dt_e_s"], b["secrecy_margin"], b["x_b_paper_m"],
               b["x_b_consistent_m"], b["x_b_lossy_weak_m"]]
        if mc:
            row.append(detection_power(c, mc_sessions, backend=backend))
        w.writerow([repr(float(x)) for x in row])
    return EXIT_OK, buf.getvalue()


def sweep_values(axis: str, start: str, stop: str, steps: int, log_scale: bool):
    kind = SWEEP_AXES[axis]
    a = parse_quantity(_num_or_str(start), kind, key="--start")
    b = parse_quantity(_num_or_str(stop), kind, key="--stop")
    if steps < 1:
        raise ConfigError(["--steps: must be >= 1"])
    if log_scale:
        if not (a > 0 and b > 0):
            raise ConfigError(["--log-scale needs a positive range"])
        return np.geomspace(a, b, steps).tolist()
    if a < 0 or b < 0:
        raise ConfigError(["sweep range must be non-negative"])
    return np.linspace(a, b, steps).tolist()


def _num_or_str(s: str):
    try:
        return float(s)
    except ValueError:
        return s


# ---------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fcqkd", description=__doc__.splitlines()[0])
    p.add_argument("--backend", choices=("numba", "numpy"), default=None,
                   help="kernel backend (default: FCQKD_BACKEND or numba if available)")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, type=Path, help="YAML session document")
        sp.add_argument("--format", choices=("text", "structured"), default="text")
        sp.add_argument("--out", type=Path, default=None, help="write output to PATH")
        return sp

    common(sub.add_parser("validate", help="check distinguishability and timescale conditions"))
    common(sub.add_parser("bound", help="maximum secure channel length"))
    s = common(sub.add_parser("simulate", help="run a key-distribution session"))
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--rounds", type=int, default=None)
    s.add_argument("--eve", action=argparse.BooleanOptionalAction, default=None)
    s.add_argument("--log", type=Path, default=None, help="per-round CSV log")
    w = common(sub.add_parser("sweep", help="tabulate bounds along one parameter"))
    w.add_argument("--axis", choices=sorted(SWEEP_AXES), required=True)
    w.add_argument("--start", help="first value, e.g. '0 km' or '0.5 ps^2/km'")
    w.add_argument("--stop", help="last value")
    w.add_argument("--steps", type=int, default=11)
    w.add_argument("--log-scale", action="store_true")
    w.add_argument("--values", help="comma-separated explicit values (overrides range)")
    w.add_argument("--mc", action="store_true", help="add Monte-Carlo detection power")
    w.add_argument("--mc-sessions", type=int, default=100)
    w.add_argument("--seed", type=int, default=None)
    w.add_argument("--rounds", type=int, default=None)
    return p


def load_config(path: Path) -> SessionConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc.strerror}"]) from exc
    return parse_config(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if getattr(args, "seed", None) is not None:
            cfg = cfg.with_run(master_seed=args.seed)
        if getattr(args, "rounds", None) is not None:
            cfg = cfg.with_run(n_rounds=args.rounds)
        if getattr(args, "eve", None) is not None:
            cfg = cfg.with_eve(args.eve)

        if args.cmd == "validate":
            code, text = cmd_validate(cfg, args.format)
        elif args.cmd == "bound":
            code, text = cmd_bound(cfg, args.format)
        elif args.cmd == "simulate":
            code, text = cmd_simulate(cfg, args.format, out=args.out, log=args.log,
                                      backend=args.backend)
            args.out = None  # already written as the structured report
        else:
            if args.values:
                kind = SWEEP_AXES[args.axis]
                values = [parse_quantity(_num_or_str(v.strip()), kind, key="--values")
                          for v in args.values.split(",")]
            else:
                if args.start is None or args.stop is None:
                    raise ConfigError(["sweep needs --values or both --start and --stop"])
                values = sweep_values(args.axis, args.start, args.stop, args.steps,
                                      args.log_scale)
            code, text = cmd_sweep(cfg, args.axis, values, mc=args.mc,
                                   mc_sessions=args.mc_sessions, backend=args.backend)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.out is not None:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
