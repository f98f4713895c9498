"""Render covflow CSV outputs into raster figures.

Input schemas are exactly the ones the simulation CLI documents:

  monitors.csv: t, H, logH, theta, d2_logH, d2_theta, grad_lhs, boundary_mass
  carleman.csv: case_id, mu, eps, R, v_index, sup_xtB, admissible, lhs, rhs, ratio
  report.json:  pairs = [{anchor, lhs, rhs, ratio, pass}, ...]

All correctness assertions operate on the parsed data series, never on pixels.
Outputs are deterministic: fixed figure geometry, no timestamps embedded.
"""

from __future__ import annotations

import csv
import json
import os
import warnings
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

MONITOR_COLUMNS = ["t", "H", "logH", "theta", "d2_logH", "d2_theta", "grad_lhs", "boundary_mass"]
CARLEMAN_COLUMNS = ["case_id", "mu", "eps", "R", "v_index", "sup_xtB", "admissible", "lhs", "rhs", "ratio"]
KINDS = ("convexity", "theta", "carleman", "pairs")

_SAVE_OPTS = {"dpi": None, "metadata": {"Software": "covflow-plots"}}


class SchemaError(ValueError):
    pass


@dataclass
class PlotJob:
    input_dir: str
    output_dir: str
    kinds: tuple = KINDS
    dpi: int = 120
    title_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        unknown = [k for k in self.kinds if k not in KINDS]
        if unknown:
            raise SchemaError(f"unknown figure kinds {unknown}; known: {list(KINDS)}")


def _read_csv(path: str, required: list) -> dict:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected header {required}")
        for col in required:
            if col not in header:
                raise SchemaError(f"{path}: missing column {col!r}")
        rows = list(reader)
    out = {}
    for col in header:
        idx = header.index(col)
        vals = [row[idx] for row in rows]
        if col in ("case_id",):
            out[col] = np.array(vals, dtype=object)
        elif col == "admissible":
            out[col] = np.array([v.strip().lower() in ("true", "1") for v in vals])
        else:
            out[col] = np.array([float(v) if v not in ("", "nan") else np.nan for v in vals])
    return out


def _chord(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    span = x[-1] - x[0]
    tau = (x - x[0]) / span if span > 0 else np.zeros_like(x)
    return (1.0 - tau) * y[0] + tau * y[-1]


def _title(job: PlotJob, kind: str, default: str) -> str:
    return job.title_overrides.get(kind, default)


def _render_convexity(job: PlotJob, data: dict, out: str) -> dict:
    chord = _chord(data["t"], data["logH"])
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.6))
    axes[0].plot(data["t"], data["H"], "o-", ms=2.5, lw=1.0, color="#1f5fa8")
    axes[0].set_xlabel("t")
    axes[0].set_ylabel("H(t)")
    axes[0].set_title(_title(job, "convexity", "weighted norm"))
    axes[1].plot(data["t"], data["logH"], "o-", ms=2.5, lw=1.0, color="#1f5fa8", label="log H")
    axes[1].plot(data["t"], chord, "--", lw=1.0, color="#c44e52", label="chord")
    axes[1].set_xlabel("t")
    axes[1].set_ylabel("log H(t)")
    axes[1].legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=job.dpi, metadata=_SAVE_OPTS["metadata"])
    plt.close(fig)
    return {"t": data["t"], "logH": data["logH"], "chord": chord}


def _render_theta(job: PlotJob, data: dict, out: str) -> dict:
    chord = _chord(data["t"], data["theta"])
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.plot(data["t"], data["theta"], "o-", ms=2.5, lw=1.0, color="#1f5fa8", label="theta")
    ax.plot(data["t"], chord, "--", lw=1.0, color="#c44e52", label="chord")
    ax.set_xlabel("t")
    ax.set_ylabel("theta(t)")
    ax.set_title(_title(job, "theta", "convexity functional"))
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=job.dpi, metadata=_SAVE_OPTS["metadata"])
    plt.close(fig)
    return {"t": data["t"], "theta": data["theta"], "chord": chord}


def _render_carleman(job: PlotJob, data: dict, out: str) -> dict:
    mus = np.unique(data["mu"])
    rs = np.unique(data["R"])
    ratio = np.full((len(mus), len(rs)), np.nan)
    adm = np.zeros((len(mus), len(rs)), dtype=bool)
    for k in range(len(data["mu"])):
        i = int(np.searchsorted(mus, data["mu"][k]))
        j = int(np.searchsorted(rs, data["R"][k]))
        ratio[i, j] = data["ratio"][k]
        adm[i, j] = data["admissible"][k]
    fig, ax = plt.subplots(figsize=(5.4, 4.0))
    im = ax.imshow(ratio, origin="lower", cmap="viridis", aspect="auto")
    for i in range(len(mus)):
        for j in range(len(rs)):
            if adm[i, j]:
                ax.add_patch(
                    plt.Rectangle((j - 0.5, i - 0.5), 1, 1, fill=False, edgecolor="#ffffff", lw=1.4)
                )
    ax.set_xticks(range(len(rs)), [f"{r:g}" for r in rs])
    ax.set_yticks(range(len(mus)), [f"{m:g}" for m in mus])
    ax.set_xlabel("R")
    ax.set_ylabel("mu")
    ax.set_title(_title(job, "carleman", "estimate ratio (admissible cells outlined)"))
    fig.colorbar(im, ax=ax, label="lhs/rhs")
    fig.tight_layout()
    fig.savefig(out, dpi=job.dpi, metadata=_SAVE_OPTS["metadata"])
    plt.close(fig)
    return {"mu": mus, "R": rs, "ratio": ratio, "admissible": adm}


def _render_pairs(job: PlotJob, payload: dict, out: str) -> dict:
    pairs = payload.get("pairs", [])
    anchors = [p["anchor"] for p in pairs]
    lhs = np.array([p["lhs"] for p in pairs], dtype=float)
    rhs = np.array([p["rhs"] for p in pairs], dtype=float)
    x = np.arange(len(anchors))
    fig, ax = plt.subplots(figsize=(max(5.0, 1.4 * len(anchors)), 3.8))
    ax.bar(x - 0.18, lhs, width=0.36, label="lhs", color="#1f5fa8")
    ax.bar(x + 0.18, rhs, width=0.36, label="rhs", color="#c44e52")
    ax.set_xticks(x, anchors, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("value")
    ax.set_title(_title(job, "pairs", "inequality sides"))
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=job.dpi, metadata=_SAVE_OPTS["metadata"])
    plt.close(fig)
    return {"anchors": anchors, "lhs": lhs, "rhs": rhs}


def render(job: PlotJob) -> tuple[list, dict]:
    """Render the requested figure kinds; returns (paths, data series per kind).

    Inputs are never mutated; existing outputs are overwritten.  A CSV with a
    header but no rows yields a warning and no figure for that kind.
    """
    os.makedirs(job.output_dir, exist_ok=True)
    written: list = []
    series: dict = {}
    monitors_path = os.path.join(job.input_dir, "monitors.csv")
    carleman_path = os.path.join(job.input_dir, "carleman.csv")
    report_path = os.path.join(job.input_dir, "report.json")
    for kind in job.kinds:
        if kind in ("convexity", "theta"):
            if not os.path.exists(monitors_path):
                raise SchemaError(f"{monitors_path} not found for kind {kind!r}")
            data = _read_csv(monitors_path, MONITOR_COLUMNS)
            if len(data["t"]) == 0:
                warnings.warn(f"{monitors_path}: no data rows, skipping {kind}")
                continue
            out = os.path.join(job.output_dir, f"{kind}.png")
            fn = _render_convexity if kind == "convexity" else _render_theta
            series[kind] = fn(job, data, out)
            written.append(out)
        elif kind == "carleman":
            if not os.path.exists(carleman_path):
                raise SchemaError(f"{carleman_path} not found for kind 'carleman'")
            data = _read_csv(carleman_path, CARLEMAN_COLUMNS)
            if len(data["mu"]) == 0:
                warnings.warn(f"{carleman_path}: no data rows, skipping carleman")
                continue
            out = os.path.join(job.output_dir, "carleman.png")
            series[kind] = _render_carleman(job, data, out)
            written.append(out)
        elif kind == "pairs":
            if not os.path.exists(report_path):
                raise SchemaError(f"{report_path} not found for kind 'pairs'")
            with open(report_path) as fh:
                payload = json.load(fh)
            if not payload.get("pairs"):
                warnings.warn(f"{report_path}: no pairs, skipping")
                continue
            out = os.path.join(job.output_dir, "pairs.png")
            series[kind] = _render_pairs(job, payload, out)
            written.append(out)
    return written, series


__all__ = ["CARLEMAN_COLUMNS", "KINDS", "MONITOR_COLUMNS", "PlotJob", "SchemaError", "render"]
