"""Figure rendering for sweep and recovery-comparison CSVs.

Input files follow the temrec CSV schemas:

* sweep CSV: ``config,sweep_value,seed,relative_error,feasible,
  capped_threshold,naive_threshold``
* comparison CSV: ``scenario,spikes_per_tem,total_spikes,seed,
  relative_error,jk_threshold,ik_threshold``

Every rendered image is accompanied by a JSON sidecar holding the exact
numeric series that were drawn (medians, quartiles, marker positions), so
figure content is testable without image comparison.  Rendering is a pure
function of the CSV bytes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["PlotSpec", "MissingColumnError", "render_sweep", "render_svp_comparison"]

SWEEP_COLUMNS = [
    "config",
    "sweep_value",
    "seed",
    "relative_error",
    "feasible",
    "capped_threshold",
    "naive_threshold",
]
SVP_COLUMNS = [
    "scenario",
    "spikes_per_tem",
    "total_spikes",
    "seed",
    "relative_error",
    "jk_threshold",
    "ik_threshold",
]

# log plots cannot show exact zeros; drawn values are floored here while the
# sidecar keeps the raw numbers
PLOT_FLOOR = 1e-30


class MissingColumnError(ValueError):
    """A required CSV column is absent."""


@dataclass(frozen=True)
class PlotSpec:
    """What to render: input CSV, output image path, axis labels."""

    csv_path: str
    output_path: str
    x_label: str = "sweep value"
    y_label: str = "relative reconstruction error"

    @property
    def sidecar_path(self) -> Path:
        return Path(self.output_path).with_suffix(".json")


def _read_csv(path, required) -> list[dict]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValueError(f"cannot read CSV {path}: {exc}") from exc
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ValueError(f"{path} is empty")
    header = lines[0].split(",")
    for column in required:
        if column not in header:
            raise MissingColumnError(f"{path} is missing required column {column!r}")
    rows = [dict(zip(header, line.split(","))) for line in lines[1:]]
    if not rows:
        raise ValueError(f"{path} has a header but no data rows")
    return rows


def _median(values) -> float:
    """Midpoint median of a sorted copy (average of the two central items)."""
    data = sorted(values)
    n = len(data)
    mid = n // 2
    return data[mid] if n % 2 else 0.5 * (data[mid - 1] + data[mid])


def _quartile(values, q: float) -> float:
    """Linear-interpolation quantile (the R-7 convention numpy defaults to)."""
    data = sorted(values)
    if len(data) == 1:
        return data[0]
    h = (len(data) - 1) * q
    lo = math.floor(h)
    frac = h - lo
    if frac == 0.0:
        return data[lo]
    return data[lo] + frac * (data[lo + 1] - data[lo])


def _write_sidecar(spec: PlotSpec, payload: dict) -> None:
    with open(spec.sidecar_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _marker(value: str) -> float | None:
    return None if value == "" else float(value)


def render_sweep(spec: PlotSpec) -> dict:
    """One log-scale panel per configuration with both threshold markers.

    The orange solid line marks the capped-count (linearly independent
    constraint) threshold, the green dashed line the naive constraint count.
    Returns the sidecar payload (also written next to the image).
    """
    rows = _read_csv(spec.csv_path, SWEEP_COLUMNS)
    configs: dict[str, dict] = {}
    for row in rows:
        entry = configs.setdefault(
            row["config"],
            {
                "points": {},
                "capped_threshold": _marker(row["capped_threshold"]),
                "naive_threshold": _marker(row["naive_threshold"]),
            },
        )
        entry["points"].setdefault(int(row["sweep_value"]), []).append(
            float(row["relative_error"])
        )

    panels = []
    fig, axes = plt.subplots(
        len(configs), 1, figsize=(6.0, 2.6 * len(configs)), squeeze=False, sharex=True
    )
    for ax, (name, entry) in zip(axes[:, 0], sorted(configs.items())):
        xs = sorted(entry["points"])
        med = [_median(entry["points"][x]) for x in xs]
        for x in xs:
            ax.plot(
                [x] * len(entry["points"][x]),
                [max(e, PLOT_FLOOR) for e in entry["points"][x]],
                ".",
                color="0.7",
                markersize=3,
            )
        ax.plot(xs, [max(m, PLOT_FLOOR) for m in med], "o-", color="C0", label=name)
        if entry["capped_threshold"] is not None:
            ax.axvline(entry["capped_threshold"], color="tab:orange", linestyle="-")
        if entry["naive_threshold"] is not None:
            ax.axvline(entry["naive_threshold"], color="tab:green", linestyle="--")
        ax.set_yscale("log")
        ax.set_ylabel(spec.y_label, fontsize=8)
        ax.legend(loc="upper right", fontsize=8)
        panels.append(
            {
                "config": name,
                "sweep_values": xs,
                "median_error": med,
                "capped_threshold": entry["capped_threshold"],
                "naive_threshold": entry["naive_threshold"],
            }
        )
    axes[-1, 0].set_xlabel(spec.x_label)
    fig.tight_layout()
    fig.savefig(spec.output_path, dpi=150)
    plt.close(fig)

    payload = {"kind": "sweep", "panels": panels}
    _write_sidecar(spec, payload)
    return payload


def render_svp_comparison(spec: PlotSpec) -> dict:
    """Median with interquartile band per scenario, plus the two thresholds.

    The dashed markers sit at the structure-aware (J*K) and structure-free
    (I*K) total spike counts read from the CSV.
    """
    rows = _read_csv(spec.csv_path, SVP_COLUMNS)
    scenarios: dict[str, dict[int, list[float]]] = {}
    jk = ik = None
    for row in rows:
        scenarios.setdefault(row["scenario"], {}).setdefault(
            int(row["total_spikes"]), []
        ).append(float(row["relative_error"]))
        jk = int(row["jk_threshold"])
        ik = int(row["ik_threshold"])

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    series = {}
    for index, (name, budgets) in enumerate(sorted(scenarios.items())):
        xs = sorted(budgets)
        med = [_median(budgets[x]) for x in xs]
        q1 = [_quartile(budgets[x], 0.25) for x in xs]
        q3 = [_quartile(budgets[x], 0.75) for x in xs]
        color = f"C{index}"
        ax.plot(xs, [max(m, PLOT_FLOOR) for m in med], "o-", color=color, label=name)
        ax.fill_between(
            xs,
            [max(v, PLOT_FLOOR) for v in q1],
            [max(v, PLOT_FLOOR) for v in q3],
            color=color,
            alpha=0.25,
        )
        series[name] = {"total_spikes": xs, "median": med, "q1": q1, "q3": q3}
    if jk is not None:
        ax.axvline(jk, color="tab:red", linestyle="--")
    if ik is not None:
        ax.axvline(ik, color="tab:purple", linestyle="--")
    ax.set_yscale("log")
    ax.set_xlabel(spec.x_label)
    ax.set_ylabel(spec.y_label)
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.output_path, dpi=150)
    plt.close(fig)

    payload = {
        "kind": "svp_comparison",
        "scenarios": series,
        "jk_threshold": jk,
        "ik_threshold": ik,
        "legend": sorted(scenarios),
    }
    _write_sidecar(spec, payload)
    return payload
