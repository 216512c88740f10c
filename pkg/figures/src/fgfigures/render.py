"""Rendering of run figures from frames CSVs and a run manifest.

Each figure is a pure function of its input files: identical inputs produce
byte-identical SVG output (fixed hash salt, no timestamps).
"""

from __future__ import annotations

import os
from pathlib import Path

import matplotlib
import numpy as np
import yaml

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

__all__ = ["FigureError", "load_manifest", "load_frames", "render"]

FIGURE_IDS = (1, 2, 3)

# Base diagnostics every frames CSV must carry.
REQUIRED_COLUMNS = ("time", "e_qm", "e_cl_total", "norm", "residual")

# Line styles: red/black for the classical/quantum trajectories, pink/blue
# dotted for the corresponding energy traces.
TRAJECTORY_COLOR = {"classical": "red", "quantum": "black", "auto": "gray"}
ENERGY_COLOR = {"classical": "pink", "quantum": "blue", "auto": "gray"}


class FigureError(Exception):
    """Invalid manifest, missing or empty CSV, or schema mismatch."""


def _deterministic_style():
    plt.rcParams["svg.hashsalt"] = "fgfigures"
    plt.rcParams["figure.dpi"] = 100
    plt.rcParams["font.size"] = 9


def load_manifest(path) -> dict:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            manifest = yaml.safe_load(fh)
    except OSError as exc:
        raise FigureError(f"cannot read manifest {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise FigureError(f"manifest {path} is not valid YAML: {exc}") from exc
    if not isinstance(manifest, dict):
        raise FigureError(f"manifest {path} does not hold a mapping")
    for key in ("model", "model_params", "frames"):
        if key not in manifest:
            raise FigureError(f"manifest {path} lacks required key {key!r}")
    if not manifest["frames"]:
        raise FigureError(f"manifest {path} lists no frames CSVs")
    manifest["_dir"] = path.parent
    return manifest


def load_frames(manifest: dict, mode: str) -> np.ndarray:
    """One mode's frames as a structured array, schema-checked."""
    name = manifest["frames"].get(mode)
    if name is None:
        raise FigureError(f"manifest lists no frames CSV for mode {mode!r}")
    path = manifest["_dir"] / name
    if not path.exists():
        raise FigureError(f"frames CSV {path} does not exist")
    try:
        data = np.genfromtxt(path, delimiter=",", names=True)
    except ValueError as exc:
        raise FigureError(f"frames CSV {path} is malformed: {exc}") from exc
    if data.dtype.names is None or data.size == 0:
        raise FigureError(f"frames CSV {path} is empty")
    missing = [c for c in REQUIRED_COLUMNS if c not in data.dtype.names]
    if missing:
        raise FigureError(
            f"frames CSV {path} lacks columns: {', '.join(missing)}")
    return np.atleast_1d(data)


def _modes(manifest: dict) -> list[str]:
    order = {"classical": 0, "quantum": 1, "auto": 2}
    return sorted(manifest["frames"], key=lambda m: order.get(m, 99))


def _tbf_columns(frames: np.ndarray, prefix: str) -> list[str]:
    cols = [c for c in frames.dtype.names if c.startswith(prefix)]
    return sorted(cols, key=lambda c: int(c[len(prefix):]))


def _double_well_curve(params: dict, r: np.ndarray) -> np.ndarray:
    u = r - params["R0"]
    return params["V0"] + params["D"] * u ** 4 - params["C"] * u ** 2


def _figure_1(manifest: dict):
    """Trajectory embedded in the potential curve, plus energy traces."""
    if manifest["model"] != "double_well":
        raise FigureError("figure 1 requires a double_well run manifest")
    params = manifest["model_params"]
    modes = _modes(manifest)
    frames = {m: load_frames(manifest, m) for m in modes}

    fig, (ax_pes, ax_energy) = plt.subplots(
        2, 1, figsize=(5.0, 6.0), height_ratios=[2, 1])
    lo = min(float(np.min(frames[m]["r_0_0"])) for m in modes)
    hi = max(float(np.max(frames[m]["r_0_0"])) for m in modes)
    pad = 0.35 * (hi - lo if hi > lo else 1.0)
    grid = np.linspace(lo - pad, hi + pad, 400)
    ax_pes.plot(grid, _double_well_curve(params, grid), color="0.4",
                label="potential")
    for mode in modes:
        f = frames[mode]
        ax_pes.plot(f["r_0_0"], f["e_qm"],
                    color=TRAJECTORY_COLOR.get(mode, "gray"),
                    label=f"{mode} trajectory")
        ax_energy.plot(f["time"], f["e_qm"], linestyle=":",
                       color=ENERGY_COLOR.get(mode, "gray"),
                       label=f"{mode} quantum energy")
    ax_pes.set_xlabel("R (bohr)")
    ax_pes.set_ylabel("energy (hartree)")
    ax_pes.legend(loc="upper center", fontsize=7)
    ax_energy.set_xlabel("time (a.u.)")
    ax_energy.set_ylabel("quantum energy (hartree)")
    ax_energy.legend(fontsize=7)
    fig.tight_layout()
    return fig


def _figure_2(manifest: dict):
    """Quantum energy and per-TBF weights, one column per mode."""
    modes = _modes(manifest)
    frames = {m: load_frames(manifest, m) for m in modes}
    fig, axes = plt.subplots(2, len(modes), figsize=(4.0 * len(modes), 6.0),
                             squeeze=False)
    for col, mode in enumerate(modes):
        f = frames[mode]
        ax_e, ax_w = axes[0][col], axes[1][col]
        ax_e.plot(f["time"], f["e_qm"], color="blue",
                  label="quantum energy")
        ax_e.set_title(f"{mode} EOM")
        ax_e.set_ylabel("quantum energy (hartree)")
        for c in _tbf_columns(f, "w_mull_"):
            ax_w.plot(f["time"], f[c], label=f"TBF {c.rsplit('_', 1)[1]}")
        ax_w.set_xlabel("time (a.u.)")
        ax_w.set_ylabel("TBF weight")
        ax_w.legend(fontsize=7)
    fig.tight_layout()
    return fig


def _figure_3(manifest: dict):
    """Quantum energy (left) and classical energy (right) per mode."""
    modes = _modes(manifest)
    frames = {m: load_frames(manifest, m) for m in modes}
    fig, (ax_q, ax_c) = plt.subplots(1, 2, figsize=(8.0, 3.5))
    for mode in modes:
        f = frames[mode]
        ax_q.plot(f["time"], f["e_qm"],
                  color=TRAJECTORY_COLOR.get(mode, "gray"), label=mode)
        ax_c.plot(f["time"], f["e_cl_total"],
                  color=TRAJECTORY_COLOR.get(mode, "gray"), label=mode)
    ax_q.set_title("quantum energy")
    ax_q.set_xlabel("time (a.u.)")
    ax_q.set_ylabel("energy (hartree)")
    ax_c.set_title("classical energy")
    ax_c.set_xlabel("time (a.u.)")
    for ax in (ax_q, ax_c):
        ax.legend(fontsize=7)
    fig.tight_layout()
    return fig


_BUILDERS = {1: _figure_1, 2: _figure_2, 3: _figure_3}


def render(figure_id: int, manifest_path, out_path) -> Path:
    """Render one figure to a static vector image; returns the output path.

    The output file appears atomically: nothing is left behind if loading
    or rendering fails.
    """
    if figure_id not in FIGURE_IDS:
        raise FigureError(f"unknown figure id {figure_id}; choose from "
                          f"{FIGURE_IDS}")
    manifest = load_manifest(manifest_path)
    _deterministic_style()
    fig = _BUILDERS[figure_id](manifest)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    tmp = out_path.with_name(out_path.name + ".partial")
    try:
        fig.savefig(tmp, format=out_path.suffix.lstrip(".") or "svg",
                    metadata={"Date": None})
        os.replace(tmp, out_path)
    finally:
        plt.close(fig)
        tmp.unlink(missing_ok=True)
    return out_path
