"""Deterministic gradient-descent convergence experiments.

Two synthetic setups regress a population of anchor boxes toward a set of
target boxes under a chosen loss. Every (point, anchor shape, target)
pair evolves independently with a staged learning rate; the outputs are
the per-iteration summed l1 regression error E and the per-pair IOU
trajectory (full tensor or streamed per-iteration statistics).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import Box
from .losses import iou_values
from .report import BoxPlotStats, box_plot_stats
from .variants import LossVariant, loss_from_dict, make_loss

MIN_SIDE = 1e-4
DEFAULT_MEMORY_BUDGET = 2 * 1024**3


@dataclass(frozen=True)
class SetupSpec:
    ratios: tuple  # width-to-height ratios, shared by anchors and targets
    areas: tuple  # anchor areas; targets always have area 100
    center_lo: tuple  # lower-left of the anchor-center sampling square
    center_hi: tuple
    default_points: int

    @property
    def num_targets(self) -> int:
        return len(self.ratios)

    @property
    def shapes_per_point(self) -> int:
        return len(self.areas) * len(self.ratios)


SETUPS = {
    # 1000 points in a 20x20 box, 7x7 anchor shapes, 7 targets.
    "setup1": SetupSpec(
        ratios=(1 / 4, 1 / 3, 1 / 2, 1.0, 2.0, 3.0, 4.0),
        areas=(50.0, 67.0, 75.0, 100.0, 133.0, 150.0, 200.0),
        center_lo=(0.0, 0.0),
        center_hi=(20.0, 20.0),
        default_points=1000,
    ),
    # 100 points in a side-2.5 square around (10, 10): high-quality init.
    "setup2": SetupSpec(
        ratios=(1 / 3, 1.0, 3.0),
        areas=(50.0, 100.0, 150.0),
        center_lo=(8.75, 8.75),
        center_hi=(11.25, 11.25),
        default_points=100,
    ),
}

TARGET_CENTER = (10.0, 10.0)
TARGET_AREA = 100.0


@dataclass(frozen=True)
class SimConfig:
    setup: str = "setup1"
    loss: LossVariant = field(default_factory=lambda: make_loss("eiou"))
    iterations: int = 200
    seed: int = 0
    point_count: int | None = None
    literal_ascent: bool = False  # apply the +mu*grad update verbatim
    streaming: bool = False  # keep per-iteration stats only, not the IOU tensor
    memory_budget: int = DEFAULT_MEMORY_BUDGET

    def __post_init__(self):
        if self.setup not in SETUPS:
            raise ValueError(f"unknown setup {self.setup!r}, expected one of {sorted(SETUPS)}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.point_count is not None and self.point_count < 1:
            raise ValueError("point_count must be >= 1")

    @property
    def spec(self) -> SetupSpec:
        return SETUPS[self.setup]

    @property
    def points(self) -> int:
        return self.point_count if self.point_count is not None else self.spec.default_points

    def to_dict(self) -> dict:
        return {
            "setup": self.setup,
            "loss": self.loss.describe(),
            "iterations": self.iterations,
            "seed": self.seed,
            "point_count": self.points,
            "literal_ascent": self.literal_ascent,
            "streaming": self.streaming,
            "memory_budget": self.memory_budget,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        return cls(
            setup=d["setup"],
            loss=loss_from_dict(d["loss"]),
            iterations=d["iterations"],
            seed=d["seed"],
            point_count=d["point_count"],
            literal_ascent=d.get("literal_ascent", False),
            streaming=d.get("streaming", False),
            memory_budget=d.get("memory_budget", DEFAULT_MEMORY_BUDGET),
        )


@dataclass(frozen=True)
class Scenario:
    """Generated anchors (points x shapes, center form) and targets."""

    anchors: np.ndarray  # (N, S, 4)
    targets: np.ndarray  # (A, 4)

    @property
    def num_points(self) -> int:
        return self.anchors.shape[0]

    @property
    def shapes_per_point(self) -> int:
        return self.anchors.shape[1]

    @property
    def num_targets(self) -> int:
        return self.targets.shape[0]


@dataclass
class SimResult:
    config: SimConfig
    errors: np.ndarray  # (T,) summed l1 regression error per iteration
    iou_stats: list  # per-iteration BoxPlotStats of the IOU distribution
    final_iou: np.ndarray  # (N, S, A) IOU at the last iteration
    iou_tensor: np.ndarray | None = None  # (T, N, S, A), absent in streaming mode
    clamp_events: int = 0


class MemoryBudgetError(RuntimeError):
    pass


def box_from_area_ratio(area: float, ratio_w_to_h: float, cx: float, cy: float) -> Box:
    """Box of the given area and width-to-height ratio at (cx, cy)."""
    if not area > 0 or not ratio_w_to_h > 0:
        raise ValueError(f"area and ratio must be > 0, got {area}, {ratio_w_to_h}")
    return Box(cx, cy, math.sqrt(area * ratio_w_to_h), math.sqrt(area / ratio_w_to_h))


def _shape_grid(spec: SetupSpec) -> np.ndarray:
    """(S, 2) array of (w, h) for every area x ratio combination,
    areas outer, ratios inner."""
    out = []
    for area in spec.areas:
        for ratio in spec.ratios:
            out.append((math.sqrt(area * ratio), math.sqrt(area / ratio)))
    return np.array(out, dtype=float)


def generate_scenario(cfg: SimConfig) -> Scenario:
    """Seeded anchor/target generation; bit-identical for equal configs."""
    spec = cfg.spec
    rng = np.random.default_rng(cfg.seed)
    n = cfg.points
    centers = rng.uniform(spec.center_lo, spec.center_hi, size=(n, 2))
    wh = _shape_grid(spec)  # (S, 2)
    anchors = np.empty((n, wh.shape[0], 4), dtype=float)
    anchors[:, :, 0:2] = centers[:, None, :]
    anchors[:, :, 2:4] = wh[None, :, :]
    targets = np.array(
        [
            (*TARGET_CENTER, math.sqrt(TARGET_AREA * r), math.sqrt(TARGET_AREA / r))
            for r in spec.ratios
        ],
        dtype=float,
    )
    return Scenario(anchors=anchors, targets=targets)


def lr_schedule(t: int, iterations: int) -> float:
    """Staged step size: 0.1, then 0.01 past 80%, then 0.001 past 90%.

    Stage boundaries are 0.8*T and 0.9*T rounded to the nearest integer.
    """
    if not 1 <= t <= iterations:
        raise ValueError(f"t must lie in [1, {iterations}], got {t}")
    if t <= round(0.8 * iterations):
        return 0.1
    if t <= round(0.9 * iterations):
        return 0.01
    return 0.001


def run_simulation(cfg: SimConfig) -> SimResult:
    """Regress every (anchor, target) pair for cfg.iterations steps.

    Per iteration, each pair takes a gradient step on the configured loss
    (descent unless literal_ascent is set), widths and heights are clamped
    to MIN_SIDE, the summed l1 coordinate error is accumulated into E(t),
    and the pair IOUs are recorded.
    """
    scenario = generate_scenario(cfg)
    n, s, _ = scenario.anchors.shape
    a = scenario.targets.shape[0]
    t_iters = cfg.iterations

    tensor_bytes = t_iters * n * s * a * 8
    if not cfg.streaming and tensor_bytes > cfg.memory_budget:
        raise MemoryBudgetError(
            f"IOU tensor would need {tensor_bytes} bytes (budget {cfg.memory_budget}); "
            "enable streaming mode or raise the budget"
        )

    # Each anchor shape regresses independently toward every target.
    state = np.broadcast_to(scenario.anchors[:, :, None, :], (n, s, a, 4)).copy()
    targets = np.broadcast_to(scenario.targets[None, None, :, :], (n, s, a, 4))

    errors = np.zeros(t_iters, dtype=float)
    stats: list[BoxPlotStats] = []
    iou_tensor = None if cfg.streaming else np.empty((t_iters, n, s, a), dtype=float)
    clamp_events = 0
    sign = 1.0 if cfg.literal_ascent else -1.0
    iou_t = None

    for t in range(1, t_iters + 1):
        mu = lr_schedule(t, t_iters)
        _, grad = cfg.loss.value_and_grad(state, targets)
        state = state + sign * mu * grad
        low = state[..., 2:4] < MIN_SIDE
        clamp_events += int(np.count_nonzero(low))
        state[..., 2:4] = np.maximum(state[..., 2:4], MIN_SIDE)
        errors[t - 1] = np.abs(state - targets).sum()
        iou_t = iou_values(state, targets)
        if iou_tensor is not None:
            iou_tensor[t - 1] = iou_t
        stats.append(box_plot_stats(iou_t.ravel(), t))

    return SimResult(
        config=cfg,
        errors=errors,
        iou_stats=stats,
        final_iou=iou_t,
        iou_tensor=iou_tensor,
        clamp_events=clamp_events,
    )


def simulate_pair(
    anchor: Box,
    target: Box,
    loss: LossVariant,
    iterations: int = 200,
    literal_ascent: bool = False,
) -> np.ndarray:
    """Trajectory (iterations, 4) of a single pair under the same update
    rule as run_simulation; used to verify pair independence."""
    state = anchor.as_array()[None, :]
    tgt = target.as_array()[None, :]
    sign = 1.0 if literal_ascent else -1.0
    out = np.empty((iterations, 4), dtype=float)
    for t in range(1, iterations + 1):
        mu = lr_schedule(t, iterations)
        _, grad = loss.value_and_grad(state, tgt)
        state = state + sign * mu * grad
        state[..., 2:4] = np.maximum(state[..., 2:4], MIN_SIDE)
        out[t - 1] = state[0]
    return out
