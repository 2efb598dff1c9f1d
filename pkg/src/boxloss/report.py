"""Result emitters: box-plot statistics, CSV writers, run manifests, and
the matplotlib comparison figure.

CSV files use '.'-decimal shortest round-trip floats and a single '\n'
line terminator so identical runs produce byte-identical files. The
comparison figure is rendered from the written CSV data only, with
matplotlib's SVG hash salt and date metadata pinned, so regenerating it
from the same CSVs reproduces the same bytes.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class BoxPlotStats:
    """Tukey box-plot summary of one iteration's IOU distribution.

    Quartiles use linear interpolation between closest ranks; whiskers are
    q1 - 1.5*IQR and q3 + 1.5*IQR clamped to the observed range.
    """

    t: int
    q1: float
    median: float
    q3: float
    lo_whisker: float
    hi_whisker: float
    mean: float


def box_plot_stats(values: np.ndarray, t: int) -> BoxPlotStats:
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise ValueError("box_plot_stats requires a nonempty slice")
    q1, median, q3 = np.percentile(values, [25.0, 50.0, 75.0], method="linear")
    iqr = q3 - q1
    lo = max(float(values.min()), q1 - 1.5 * iqr)
    hi = min(float(values.max()), q3 + 1.5 * iqr)
    return BoxPlotStats(
        t=t,
        q1=float(q1),
        median=float(median),
        q3=float(q3),
        lo_whisker=float(lo),
        hi_whisker=float(hi),
        mean=float(values.mean()),
    )


def _fmt(x: float) -> str:
    return repr(float(x))


def write_errors_csv(path, errors: np.ndarray) -> None:
    lines = ["t,E"]
    for t, e in enumerate(np.asarray(errors, dtype=float), start=1):
        lines.append(f"{t},{_fmt(e)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_errors_csv(path) -> np.ndarray:
    rows = Path(path).read_text().strip().splitlines()
    if rows[0] != "t,E":
        raise ValueError(f"unexpected header {rows[0]!r} in {path}")
    return np.array([float(r.split(",")[1]) for r in rows[1:]], dtype=float)


def write_iou_stats_csv(path, stats) -> None:
    lines = ["t,q1,median,q3,lo,hi,mean"]
    for s in stats:
        lines.append(
            ",".join(
                [str(s.t)]
                + [_fmt(v) for v in (s.q1, s.median, s.q3, s.lo_whisker, s.hi_whisker, s.mean)]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_iou_stats_csv(path) -> list[BoxPlotStats]:
    rows = Path(path).read_text().strip().splitlines()
    if rows[0] != "t,q1,median,q3,lo,hi,mean":
        raise ValueError(f"unexpected header {rows[0]!r} in {path}")
    out = []
    for r in rows[1:]:
        cells = r.split(",")
        out.append(
            BoxPlotStats(
                t=int(cells[0]),
                q1=float(cells[1]),
                median=float(cells[2]),
                q3=float(cells[3]),
                lo_whisker=float(cells[4]),
                hi_whisker=float(cells[5]),
                mean=float(cells[6]),
            )
        )
    return out


@dataclass
class RunManifest:
    """Echo of the simulation inputs plus run provenance, written next to
    the CSV outputs so a run can be reproduced from its directory."""

    configs: list  # one SimConfig echo dict per variant
    version: str
    wall_time_s: float
    clamp_events: dict  # variant name -> count

    def to_dict(self) -> dict:
        return {
            "configs": self.configs,
            "version": self.version,
            "wall_time_s": self.wall_time_s,
            "clamp_events": self.clamp_events,
        }


def write_manifest(path, manifest: RunManifest) -> None:
    Path(path).write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n")


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text())


def render_comparison_svg(curves: dict[str, np.ndarray], path) -> None:
    """Plot one regression-error curve per variant and save as SVG.

    ``curves`` maps variant name to its E(t) series (as read back from
    errors.csv, keeping the figure a function of the CSV data alone).
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "boxloss"}):
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        for name, errors in curves.items():
            errors = np.asarray(errors, dtype=float)
            ax.plot(np.arange(1, errors.size + 1), errors, label=name, linewidth=1.4)
        ax.set_xlabel("iteration")
        ax.set_ylabel("regression error sum")
        ax.set_title("Convergence comparison")
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def now() -> float:
    return time.time()
