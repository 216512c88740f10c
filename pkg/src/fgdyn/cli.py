"""Run orchestration: YAML config, propagation per EOM mode, CSV frames
and a rerun manifest.

Config files are YAML.  Presets with the standard model setups ship with
the package (``double_well``, ``ferretti``) and are ordinary config files;
command-line flags override config keys.  Exit codes: 0 success, 1 config
error, 2 propagation error.
"""

from __future__ import annotations

import argparse
import dataclasses
import importlib.resources
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .dynamics import EomMode, LambdaPolicy, PropagationError, propagate
from .observables import frame_columns, make_frame
from .potentials import (ConfigError, DoubleWellParams, FerrettiParams,
                         double_well, ferretti)
from .sampling import InitialWavepacket, initial_state

__all__ = ["RunConfig", "load_config", "load_preset", "run", "main"]

VALID_MODES = ("classical", "quantum", "auto")


@dataclass
class RunConfig:
    """Fully resolved run description."""

    model: str
    model_params: dict
    initial: dict
    n_tbfs: int
    seed: int
    dt: float
    total_time: float
    modes: list[str]
    delta_switch: float
    lambda_policy: LambdaPolicy
    auto_monitor: str
    output_dir: str
    record_stride: int
    replicate_states: bool


def _require(cfg: dict, key: str, kind, path: str):
    if key not in cfg:
        raise ConfigError(f"config key '{path}{key}': missing")
    val = cfg[key]
    if kind is float:
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise ConfigError(f"config key '{path}{key}': expected a number")
        return float(val)
    if kind is int:
        if not isinstance(val, int) or isinstance(val, bool):
            raise ConfigError(f"config key '{path}{key}': expected an integer")
        return val
    if not isinstance(val, kind):
        raise ConfigError(f"config key '{path}{key}': expected {kind.__name__}")
    return val


def _positive(value, key: str):
    if not value > 0:
        raise ConfigError(f"config key '{key}': must be > 0")
    return value


def _build_model(cfg: dict):
    model = _require(cfg, "model", str, "")
    if model == "double_well":
        p = _require(cfg, "double_well", dict, "")
        params = DoubleWellParams(
            V0=_require(p, "V0", float, "double_well."),
            D=_require(p, "D", float, "double_well."),
            C=_require(p, "C", float, "double_well."),
            R0=_require(p, "R0", float, "double_well."),
            mass=_require(p, "mass", float, "double_well."),
        )
        return model, dataclasses.asdict(params), double_well(params)
    if model == "ferretti":
        p = _require(cfg, "ferretti", dict, "")
        params = FerrettiParams(
            X1=_require(p, "X1", float, "ferretti."),
            X2=_require(p, "X2", float, "ferretti."),
            mx=_require(p, "mx", float, "ferretti."),
            my=_require(p, "my", float, "ferretti."),
            kx=float(p.get("kx", 0.01)),
            ky=float(p.get("ky", 0.1)),
            delta=float(p.get("delta", 0.01)),
            alpha_c=float(p.get("alpha_c", 3.0)),
            beta_c=float(p.get("beta_c", 1.5)),
            gamma_c=float(p.get("gamma_c", 0.01)),
            X3=float(p.get("X3", 3.0)),
        )
        return model, dataclasses.asdict(params), ferretti(params)
    raise ConfigError(f"config key 'model': unknown model {model!r}")


def _total_time(cfg: dict, model: str, model_params: dict) -> float:
    raw = cfg.get("total_time")
    if raw is None:
        raise ConfigError("config key 'total_time': missing")
    if isinstance(raw, dict):
        if "x_half_periods" not in raw:
            raise ConfigError(
                "config key 'total_time': expected a number or {x_half_periods: v}")
        if model != "ferretti":
            raise ConfigError(
                "config key 'total_time.x_half_periods': only valid for ferretti")
        v = float(raw["x_half_periods"])
        half = math.pi * math.sqrt(model_params["mx"] / model_params["kx"])
        return _positive(v * half, "total_time.x_half_periods")
    if not isinstance(raw, (int, float)) or isinstance(raw, bool):
        raise ConfigError("config key 'total_time': expected a number")
    return _positive(float(raw), "total_time")


def parse_config(cfg: dict) -> tuple[RunConfig, object]:
    """Validate a raw config mapping; returns (RunConfig, ModelHamiltonian)."""
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a mapping")
    model, model_params, ham = _build_model(cfg)

    init = _require(cfg, "initial", dict, "")
    wp_state = int(init.get("state", 0))
    position = init.get("position")
    momentum = init.get("momentum")
    widths = init.get("widths")
    for key, val in (("position", position), ("momentum", momentum),
                     ("widths", widths)):
        if not isinstance(val, list) or len(val) != ham.ndof:
            raise ConfigError(
                f"config key 'initial.{key}': expected a list of {ham.ndof} numbers")
    if any(w <= 0 for w in widths):
        raise ConfigError("config key 'initial.widths': must be > 0")
    if not 0 <= wp_state < ham.n_states:
        raise ConfigError("config key 'initial.state': out of range")

    n_tbfs = _positive(_require(cfg, "n_tbfs", int, ""), "n_tbfs")
    seed = _require(cfg, "seed", int, "")
    dt = _positive(_require(cfg, "dt", float, ""), "dt")
    total_time = _total_time(cfg, model, model_params)

    modes = cfg.get("modes", ["classical", "quantum"])
    if not isinstance(modes, list) or not modes:
        raise ConfigError("config key 'modes': expected a nonempty list")
    for m in modes:
        if m not in VALID_MODES:
            raise ConfigError(f"config key 'modes': unknown mode {m!r}")

    delta_switch = float(cfg.get("delta_switch", 1e-3))
    if "auto" in modes:
        _positive(delta_switch, "delta_switch")
    monitor = cfg.get("auto_monitor", "quantum")
    if monitor not in ("classical", "quantum"):
        raise ConfigError("config key 'auto_monitor': expected classical or quantum")

    lam = cfg.get("lambda", {})
    if not isinstance(lam, dict):
        raise ConfigError("config key 'lambda': expected a mapping")
    try:
        policy = LambdaPolicy(
            kind=lam.get("policy", "fixed_one"),
            penalty_weight=(None if lam.get("penalty_weight") is None
                            else float(lam["penalty_weight"])),
            bounds=tuple(lam.get("bounds", (0.2, 5.0))),
            shared=bool(lam.get("shared", False)),
        )
    except ValueError as exc:
        raise ConfigError(f"config key 'lambda': {exc}") from exc

    stride = cfg.get("record_stride", 1)
    if not isinstance(stride, int) or stride < 1:
        raise ConfigError("config key 'record_stride': expected an integer >= 1")

    run_cfg = RunConfig(
        model=model,
        model_params=model_params,
        initial={"state": wp_state, "position": list(map(float, position)),
                 "momentum": list(map(float, momentum)),
                 "widths": list(map(float, widths))},
        n_tbfs=n_tbfs,
        seed=seed,
        dt=dt,
        total_time=total_time,
        modes=list(modes),
        delta_switch=delta_switch,
        lambda_policy=policy,
        auto_monitor=monitor,
        output_dir=str(cfg.get("output_dir", "fgdyn_out")),
        record_stride=stride,
        replicate_states=bool(cfg.get("replicate_states", True)),
    )
    return run_cfg, ham


def load_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        cfg = yaml.safe_load(fh)
    if not isinstance(cfg, dict):
        raise ConfigError(f"config file {path} must contain a mapping")
    return cfg


def load_preset(name: str) -> dict:
    res = importlib.resources.files("fgdyn").joinpath("presets", f"{name}.preset")
    if not res.is_file():
        raise ConfigError(f"unknown preset {name!r}")
    return yaml.safe_load(res.read_text(encoding="utf-8"))


def _mode_for(cfg: RunConfig, name: str) -> EomMode:
    if name == "classical":
        return EomMode.classical()
    if name == "quantum":
        return EomMode.quantum(cfg.lambda_policy)
    return EomMode.auto(cfg.delta_switch, cfg.lambda_policy, cfg.auto_monitor)


def _format_row(values) -> str:
    return ",".join(f"{v:.17g}" for v in values)


def run(cfg: RunConfig, ham=None) -> dict:
    """Run every requested mode; returns the manifest mapping.

    Writes ``<mode>_frames.csv`` per mode plus ``manifest.yaml`` into the
    output directory.  Partial CSVs are removed on propagation failure.
    """
    if ham is None:
        ham = {"double_well": lambda p: double_well(DoubleWellParams(**p)),
               "ferretti": lambda p: ferretti(FerrettiParams(**p))}[cfg.model](
                   cfg.model_params)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    n_steps = max(1, round(cfg.total_time / cfg.dt))
    wp = InitialWavepacket(cfg.initial["state"], cfg.initial["position"],
                           cfg.initial["momentum"], cfg.initial["widths"])
    files = {}
    summaries = {}
    for mode_name in cfg.modes:
        mode = _mode_for(cfg, mode_name)
        state0 = initial_state(wp, cfg.n_tbfs, cfg.seed, ham.masses,
                               ham.n_states, cfg.replicate_states)
        columns = frame_columns(state0.basis.n, state0.basis.ndof,
                                state0.basis.n_states)
        path = out / f"{mode_name}_frames.csv"
        tmp = out / f".{mode_name}_frames.csv.partial"
        e0 = None
        norm_dev = 0.0
        drift = 0.0
        switched = 0
        try:
            with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(",".join(columns) + "\n")
                for k, state, info in propagate(state0, cfg.dt, n_steps, mode, ham):
                    switched += int(info.switched)
                    if k % cfg.record_stride and k != n_steps:
                        continue
                    rec = make_frame(state, ham, info.kind, cfg.dt, mode)
                    if e0 is None:
                        e0 = rec.e_qm
                    drift = max(drift, abs(rec.e_qm - e0))
                    norm_dev = max(norm_dev, abs(rec.norm - 1.0))
                    fh.write(_format_row(rec.values()) + "\n")
        except Exception:
            tmp.unlink(missing_ok=True)
            raise
        tmp.replace(path)
        files[mode_name] = path.name
        summaries[mode_name] = {
            "steps": n_steps,
            "e_qm_drift_abs": float(drift),
            "max_norm_deviation": float(norm_dev),
            "quantum_steps": switched if mode_name == "auto" else None,
        }
        print(f"[{mode_name}] steps={n_steps} "
              f"E_qm_drift={drift:.3e} max|norm-1|={norm_dev:.3e}")
    manifest = {
        "engine_version": __version__,
        "model": cfg.model,
        "model_params": cfg.model_params,
        "initial": cfg.initial,
        "n_tbfs": cfg.n_tbfs,
        "seed": cfg.seed,
        "dt": cfg.dt,
        "total_time": cfg.total_time,
        "n_steps": n_steps,
        "modes": cfg.modes,
        "delta_switch": cfg.delta_switch,
        "lambda": {
            "policy": cfg.lambda_policy.kind,
            "penalty_weight": cfg.lambda_policy.penalty_weight,
            "bounds": list(cfg.lambda_policy.bounds),
            "shared": cfg.lambda_policy.shared,
        },
        "auto_monitor": cfg.auto_monitor,
        "record_stride": cfg.record_stride,
        "replicate_states": cfg.replicate_states,
        "frames": files,
        "summaries": summaries,
    }
    with open(out / "manifest.yaml", "w", encoding="utf-8") as fh:
        yaml.safe_dump(manifest, fh, sort_keys=True)
    return manifest


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fgdyn",
        description="Frozen-Gaussian wavepacket dynamics engine")
    src = parser.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="path to a YAML run config")
    src.add_argument("--preset", help="bundled preset name "
                                      "(double_well | ferretti)")
    parser.add_argument("--seed", type=int, help="override the RNG seed")
    parser.add_argument("--modes", help="comma-separated EOM modes to run")
    parser.add_argument("--out", help="override the output directory")
    parser.add_argument("--stride", type=int, help="override the record stride")
    args = parser.parse_args(argv)

    try:
        raw = load_preset(args.preset) if args.preset else load_config(args.config)
        if args.seed is not None:
            raw["seed"] = args.seed
        if args.modes:
            raw["modes"] = [m.strip() for m in args.modes.split(",") if m.strip()]
        if args.out:
            raw["output_dir"] = args.out
        if args.stride is not None:
            raw["record_stride"] = args.stride
        cfg, ham = parse_config(raw)
    except (ConfigError, OSError, yaml.YAMLError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        run(cfg, ham)
    except PropagationError as exc:
        print(f"propagation error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
