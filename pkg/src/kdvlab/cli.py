"""Command-line front door: configuration, orchestration, report emission.

Configuration is flat ``key = value`` text with section headers (INI style);
flags override file values.  Artifacts are CSV/JSON files named
``{subcommand}-{stamp}.{ext}`` written atomically; their content depends
only on the configuration and seed, so runs are byte-reproducible.

Exit codes: 0 success, 2 tolerance failure (the message names the violated
invariant), 3 configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
import time
from dataclasses import dataclass, asdict, replace

import numpy as np

from .audit import (
    SYMBOL_CASES,
    audit_quad_cancellation,
    audit_symbol,
    verify_cancellation,
    verify_duhamel_bound,
    verify_h_smoothing,
    verify_nf_identity,
    verify_vkn,
)
from .errors import ConfigError, KdvLabError
from .fields import SpectralField, mode_numbers, random_field, field_to_json
from .multipliers import ChiSpec
from .norms import norm_report_rows, strichartz_ratio
from .phase import compute_phi
from .solvers import picard_solve, reference_solve
from .system import windowed_free_evolution

__all__ = ["SessionConfig", "load_config", "main", "run"]


@dataclass(frozen=True)
class SessionConfig:
    s: float = 0.55
    eps: float = 0.01
    N: int = 32
    M: int = 512
    T_w: float = 2.0
    delta: float = 1e-3
    threshold_const: float = 3.0
    ramp_ratio: float = 4.0
    seed: int = 0
    out: str = "artifacts"
    workers: int = 1
    stamp: str = ""
    case: str = ""
    Nmax: int = 64
    dt: float = 1e-3
    data_decay: float = 8.0
    picard_tol: float = 1e-10
    max_iter: int = 25
    cancel_tol: float = 1e-6
    min_order: float = 3.5
    strichartz_slope: float = 0.2

    def validate(self):
        if not 0.5 <= self.s < 2.0 / 3.0:
            raise ConfigError(f"s={self.s} outside [1/2, 2/3)")
        for name in ("N", "M"):
            v = getattr(self, name)
            if v < 2 or v & (v - 1):
                raise ConfigError(f"{name}={v} must be a power of two")
        if self.T_w <= 0:
            raise ConfigError(f"T_w={self.T_w} must be positive")
        return self


_SECTIONS = {
    "session": ("s", "eps", "N", "M", "T_w", "delta", "seed", "out", "workers",
                "Nmax", "dt", "data_decay"),
    "chi": ("threshold_const", "ramp_ratio"),
    "tolerances": ("picard_tol", "max_iter", "cancel_tol", "min_order",
                   "strichartz_slope"),
}


def load_config(path: str) -> SessionConfig:
    parser = configparser.ConfigParser()
    try:
        read = parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    if not read:
        raise ConfigError(f"config file not found: {path}")
    values: dict = {}
    base = SessionConfig()
    for section, keys in _SECTIONS.items():
        if not parser.has_section(section):
            continue
        for key, raw in parser.items(section):
            if key not in keys:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            current = getattr(base, key)
            try:
                if isinstance(current, bool):
                    values[key] = parser.getboolean(section, key)
                elif isinstance(current, int):
                    values[key] = int(raw)
                elif isinstance(current, float):
                    values[key] = float(raw)
                else:
                    values[key] = raw
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
    extra = [s for s in parser.sections() if s not in _SECTIONS]
    if extra:
        raise ConfigError(f"unknown config sections: {extra}")
    return replace(base, **values)


# ---------------------------------------------------------------------------
# artifact helpers


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_atomic(path: str, text: str):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_csv(path: str, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    _write_atomic(path, "\n".join(lines) + "\n")


def write_json(path: str, doc):
    _write_atomic(path, json.dumps(doc, sort_keys=True, indent=1, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    raise TypeError(f"not serializable: {type(obj)}")


def _artifact(cfg: SessionConfig, sub: str, ext: str) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    stamp = cfg.stamp or time.strftime("%Y%m%d-%H%M%S", time.gmtime())
    return os.path.join(cfg.out, f"{sub}-{stamp}.{ext}")


def _session_data(cfg: SessionConfig) -> SpectralField:
    rng = np.random.default_rng(cfg.seed)
    f = random_field(cfg.N, rng, decay=cfg.data_decay, amplitude=1.0)
    norm = f.l2()
    if norm > 0:
        f = f * (cfg.delta / norm)
    return f


def _session_spec(cfg: SessionConfig, f: SpectralField) -> ChiSpec:
    phase = compute_phi(f, cfg.s)
    return ChiSpec(phase=phase, threshold_const=cfg.threshold_const,
                   ramp_ratio=cfg.ramp_ratio)


# ---------------------------------------------------------------------------
# subcommands (each returns exit code)


def _cmd_simulate(cfg: SessionConfig) -> int:
    f = _session_data(cfg)
    traj = reference_solve(f, cfg.s, cfg.T_w, cfg.N, cfg.dt)
    stride = max(1, len(traj.times) // 64)
    doc = {
        "meta": {"N": cfg.N, "T_w": cfg.T_w, "dt": traj.dt, "s": cfg.s,
                 "seed": cfg.seed, "order": traj.order},
        "f": json.loads(field_to_json(f)),
        "times": traj.times[::stride],
        "l2_norms": np.linalg.norm(traj.states, axis=1)[::stride],
        "states": [json.loads(field_to_json(traj.state(i)))
                   for i in range(0, len(traj.times), stride)],
    }
    write_json(_artifact(cfg, "simulate", "json"), doc)
    return 0


def _cmd_fixpoint(cfg: SessionConfig) -> int:
    f = _session_data(cfg)
    spec = _session_spec(cfg, f)
    result = picard_solve(f, cfg.s, spec, tol=cfg.picard_tol,
                          max_iter=cfg.max_iter, T_w=cfg.T_w, M=cfg.M,
                          delta=cfg.delta)
    write_json(_artifact(cfg, "fixpoint", "json"), result.trace())
    if not result.converged:
        print("fixpoint: iteration did not converge", file=sys.stderr)
        return 2
    return 0


def _cmd_audit_symbols(cfg: SessionConfig) -> int:
    cases = [cfg.case] if cfg.case else list(SYMBOL_CASES) + ["quad-cancellation"]
    rows = []
    full = {}
    code = 0
    for case in cases:
        if case == "quad-cancellation":
            f = _session_data(cfg)
            spec = _session_spec(cfg, f)
            rep = audit_quad_cancellation(cfg.s, cfg.eps, cfg.Nmax, spec)
            if rep.extra["violations"] or rep.sup_ratio < 0.125:
                print("audit: quadrilinear cancellation floor violated",
                      file=sys.stderr)
                code = 2
        else:
            rep = audit_symbol(case, cfg.s, cfg.eps, cfg.Nmax,
                               workers=cfg.workers)
            if case == "case3-unrestricted":
                target = 2.0 * cfg.s - 1.0
                if rep.fit_exponent is None or abs(rep.fit_exponent - target) > 0.15:
                    print("audit: unrestricted growth exponent off target",
                          file=sys.stderr)
                    code = 2
        rows.append(rep.row())
        full[rep.case_id] = {
            "s": rep.s, "eps": rep.eps, "Nmax": rep.Nmax,
            "sup_ratio": rep.sup_ratio, "argmax": list(rep.argmax),
            "fit_exponent": rep.fit_exponent, "extra": rep.extra,
        }
    write_csv(_artifact(cfg, "audit-symbols", "csv"),
              ["case_id", "s", "eps", "Nmax", "sup_ratio", "argmax", "fit_exponent"],
              rows)
    write_json(_artifact(cfg, "audit-symbols", "json"), full)
    return code


def _cmd_verify(cfg: SessionConfig) -> int:
    f = _session_data(cfg)
    spec = _session_spec(cfg, f)
    phase = spec.phase
    code = 0
    summary = {}

    traj = reference_solve(f, cfg.s, cfg.T_w, cfg.N, cfg.dt, t_span=0.5)
    canc = verify_cancellation(traj, f, cfg.s, phase)
    canc.pop("per_mode_sup")
    summary["cancellation"] = canc
    if canc["max_residual"] > cfg.cancel_tol:
        print(f"verify: cancellation residual {canc['max_residual']:.3e} "
              f"exceeds {cfg.cancel_tol:.1e}", file=sys.stderr)
        code = 2

    nf = verify_nf_identity(traj, cfg.s)
    summary["nf_identity"] = nf
    if min(nf["orders"]) < cfg.min_order:
        print(f"verify: normal-form identity order {min(nf['orders']):.2f} "
              f"below {cfg.min_order}", file=sys.stderr)
        code = 2

    duh = verify_duhamel_bound(phase, cfg.eps, cfg.N, cfg.M, cfg.T_w,
                               n_samples=32, seed=cfg.seed)
    duh.pop("ratios")
    summary["duhamel"] = duh

    vkn = verify_vkn(phase, cfg.s, cfg.eps, cfg.N, cfg.M, cfg.T_w,
                     n_samples=16, seed=cfg.seed)
    vkn.pop("ratios")
    summary["vkn"] = vkn

    hs = verify_h_smoothing(cfg.s, spec, cfg.N, cfg.M, cfg.T_w, seed=cfg.seed)
    summary["h_smoothing"] = hs
    if hs["slope"] > -(1.5 - cfg.s) + 0.15:
        print(f"verify: smoothing slope {hs['slope']:.3f} too shallow",
              file=sys.stderr)
        code = 2

    write_json(_artifact(cfg, "verify", "json"), summary)
    rows = [
        ["cancellation_residual", canc["max_residual"]],
        ["nf_min_order", min(nf["orders"])],
        ["duhamel_sup", duh["sup"]],
        ["vkn_sup", vkn["sup"]],
        ["h_slope", hs["slope"]],
    ]
    write_csv(_artifact(cfg, "verify", "csv"), ["check", "value"], rows)
    return code


def _cmd_strichartz(cfg: SessionConfig) -> int:
    rng = np.random.default_rng(cfg.seed)
    f = _session_data(cfg)
    phase = compute_phi(f, cfg.s)
    rows = []
    fits = {}
    code = 0
    for p in (4, 6):
        blocks = []
        ratios = []
        nd = 8
        while nd <= cfg.N:
            n = mode_numbers(cfg.N)
            sel = (np.abs(n) > nd // 2) & (np.abs(n) <= nd)
            c = np.zeros(2 * cfg.N, dtype=complex)
            g_half = rng.standard_normal(sel.sum() // 2) + 1j * rng.standard_normal(sel.sum() // 2)
            c[sel & (n > 0)] = g_half
            c[sel & (n < 0)] = np.conj(g_half[::-1])
            g = SpectralField(cfg.N, c)
            ratio = strichartz_ratio(g, phase, p)
            blocks.append(nd)
            ratios.append(ratio)
            rows.append([p, nd, ratio])
            nd *= 2
        slope = float(np.polyfit(np.log(blocks), np.log(ratios), 1)[0])
        fits[p] = slope
        rows.append([p, "fit_slope", slope])
    if fits[6] > cfg.strichartz_slope:
        print(f"strichartz: p=6 growth {fits[6]:.3f} exceeds "
              f"{cfg.strichartz_slope}", file=sys.stderr)
        code = 2
    write_csv(_artifact(cfg, "strichartz", "csv"), ["p", "block", "ratio"], rows)
    return code


def _cmd_norms(cfg: SessionConfig) -> int:
    f = _session_data(cfg)
    phase = compute_phi(f, cfg.s)
    v = windowed_free_evolution(f, phase, cfg.T_w, cfg.M)
    rows = norm_report_rows(v, phase, cfg.s, cfg.eps)
    write_csv(_artifact(cfg, "norms", "csv"),
              ["norm_kind", "N", "T_w", "eps", "value"], rows)
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "fixpoint": _cmd_fixpoint,
    "audit-symbols": _cmd_audit_symbols,
    "verify": _cmd_verify,
    "strichartz": _cmd_strichartz,
    "norms": _cmd_norms,
}


def run(subcommand: str, cfg: SessionConfig) -> int:
    """Run one subcommand against a validated configuration."""
    cfg.validate()
    return _COMMANDS[subcommand](cfg)


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kdvlab")
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None)
        p.add_argument("--s", type=float, default=None)
        p.add_argument("--eps", type=float, default=None)
        p.add_argument("--N", type=int, default=None)
        p.add_argument("--M", type=int, default=None)
        p.add_argument("--Nmax", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--case", default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--stamp", default=None)
        p.add_argument("--dt", type=float, default=None)
        p.add_argument("--delta", type=float, default=None)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else SessionConfig()
        overrides = {
            k: v
            for k, v in vars(args).items()
            if k not in ("subcommand", "config") and v is not None
        }
        cfg = replace(cfg, **overrides).validate()
        return run(args.subcommand, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except KdvLabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
