"""Turn diagnostic CSV tables into figures.

Four plot kinds, one job per invocation:

* ``energy``   -- energy history on a (by default) log y axis, with a
  fitted exponential rate annotation and, when the table carries finite
  envelope values, the decay-envelope overlay.
* ``envelope`` -- energy against its envelope bound, annotated with the
  worst margin.
* ``residual`` -- audit residual against time step (log-log), annotated
  with the observed convergence order.
* ``attract``  -- ensemble attraction curve, annotated with the overall
  drop factor.

Rendering is deterministic: fixed figure geometry, no embedded metadata,
floats drawn from the input bytes only.  This package reads only the
documented CSV columns; it never touches snapshot archives.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import numpy as np

__version__ = "0.1.0"

KINDS = ("energy", "envelope", "residual", "attract")

# column sets each kind refuses to run without; extra columns are ignored
REQUIRED = {
    "energy": ("t", "E", "envelope_rhs"),
    "envelope": ("t", "E", "envelope_rhs"),
    "residual": ("dt", "residual_max"),
    "attract": ("t", "dist"),
}

_TITLES = {
    "energy": "energy decay",
    "envelope": "dissipative envelope",
    "residual": "audit residual vs time step",
    "attract": "ensemble attraction",
}

_AXES = {
    "energy": ("t", "energy"),
    "envelope": ("t", "energy"),
    "residual": ("dt", "max window residual"),
    "attract": ("t", "distance"),
}


class PlotkitError(Exception):
    """Base for everything this package raises on purpose."""


class MissingColumnError(PlotkitError):
    """A required column is absent from an input table."""


class DataError(PlotkitError):
    """An input table is unreadable or has no usable values."""


@dataclass(frozen=True)
class PlotJob:
    """One rendering request: input tables, kind, output path, axis options."""

    inputs: tuple[str, ...]
    kind: str
    out: str
    logy: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"unknown plot kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if not self.inputs:
            raise DataError("at least one input CSV is required")


def read_table(path) -> dict[str, np.ndarray]:
    """Parse a header + float-rows CSV into named columns.

    Accepts ``nan``/``inf`` cells (the audit writes ``nan`` envelope
    columns when no envelope was requested).  Ragged or non-numeric rows
    raise DataError with the offending line number.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [name.strip() for name in rows[0]]
    if len(set(header)) != len(header):
        raise DataError(f"{path}: duplicate column names")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
        try:
            data.append([float(v) for v in row])
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: non-numeric cell") from exc
    if not data:
        raise DataError(f"{path}: no data rows")
    arr = np.array(data)
    return {name: arr[:, k] for k, name in enumerate(header)}


def _load(path, kind: str) -> dict[str, np.ndarray]:
    table = read_table(path)
    for name in REQUIRED[kind]:
        if name not in table:
            raise MissingColumnError(
                f"{path}: missing column {name!r} required by kind {kind!r}"
            )
    return table


def _stem(path) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def _fit_rate(t: np.ndarray, values: np.ndarray) -> float | None:
    """Least-squares exponential rate of a positive series; None if degenerate."""
    mask = np.isfinite(values) & (values > 0) & np.isfinite(t)
    if mask.sum() < 2 or np.ptp(t[mask]) == 0:
        return None
    return -float(np.polyfit(t[mask], np.log(values[mask]), 1)[0])


def _annotate(ax, text: str) -> None:
    ax.text(0.02, 0.03, text, transform=ax.transAxes,
            fontsize=9, family="monospace")


def render(job: PlotJob) -> dict[str, float]:
    """Render the job to ``job.out``; returns the numeric annotations.

    Every input table is drawn as one series (labelled by file stem);
    numeric annotations (fitted rate, convergence order, worst margin,
    drop factor) are computed from the first input and both drawn into
    the figure and returned so callers can check them.
    """
    import matplotlib.pyplot as plt

    tables = [(path, _load(path, job.kind)) for path in job.inputs]
    info: dict[str, float] = {}
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    try:
        if job.kind in ("energy", "envelope"):
            for path, table in tables:
                ax.plot(table["t"], table["E"], marker=".", markersize=3,
                        label=f"{_stem(path)} E")
                rhs = table["envelope_rhs"]
                if np.any(np.isfinite(rhs)):
                    ax.plot(table["t"], rhs, "--", label=f"{_stem(path)} envelope")
            _, first = tables[0]
            if job.kind == "energy":
                rate = _fit_rate(first["t"], first["E"])
                if rate is not None:
                    info["rate"] = rate
                    _annotate(ax, f"fit: E(t) ~ exp(-{rate:.4g} t)")
            else:
                margin = first["envelope_rhs"] - first["E"]
                margin = margin[np.isfinite(margin)]
                if margin.size == 0:
                    raise DataError(
                        f"{tables[0][0]}: column 'envelope_rhs' has no finite "
                        "values; rerun the audit with envelope=1"
                    )
                info["min_margin"] = float(np.min(margin))
                _annotate(ax, f"min margin {info['min_margin']:.3e}")
            if job.logy:
                ax.set_yscale("log")
        elif job.kind == "residual":
            for path, table in tables:
                order = np.argsort(table["dt"])
                ax.plot(table["dt"][order], table["residual_max"][order],
                        marker="o", label=_stem(path))
            _, first = tables[0]
            slope = _fit_rate(-np.log(first["dt"]), first["residual_max"])
            if slope is not None:
                info["order"] = slope
                _annotate(ax, f"observed order {slope:.3g}")
            if job.logy:
                ax.set_xscale("log")
                ax.set_yscale("log")
        else:  # attract
            for path, table in tables:
                ax.plot(table["t"], table["dist"], marker=".", markersize=4,
                        label=_stem(path))
            _, first = tables[0]
            dist = first["dist"]
            if dist[0] > 0:
                info["drop"] = float(dist[-1] / dist[0])
                _annotate(ax, f"final/initial = {info['drop']:.3g}")
            else:
                _annotate(ax, "initial distance 0")
            if job.logy:
                ax.set_yscale("log")

        xlabel, ylabel = _AXES[job.kind]
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_title(_TITLES[job.kind])
        ax.legend(loc="upper right", fontsize=8)
        out_dir = os.path.dirname(os.path.abspath(job.out))
        os.makedirs(out_dir, exist_ok=True)
        # strip the writer's software tag so identical inputs give
        # identical bytes
        fig.savefig(job.out, dpi=100, metadata={"Software": None})
    finally:
        plt.close(fig)
    return info


__all__ = [
    "DataError",
    "KINDS",
    "MissingColumnError",
    "PlotJob",
    "PlotkitError",
    "REQUIRED",
    "read_table",
    "render",
]
