"""Bounding-box regression losses with analytic gradients and a
deterministic convergence simulator."""

from .geometry import Box, Enclosure, center_dist_sq, corners, enclosing, iou, raster_iou_oracle
from .losses import (
    LossEval,
    LossKind,
    eval_loss,
    finite_diff_grad,
    loss_ciou,
    loss_diou,
    loss_eiou,
    loss_giou,
    loss_iou,
    smooth_l1,
)
from .focal import (
    FocalEIOUParams,
    FocalL1Params,
    batch_normalized_loss,
    focal_eiou,
    focal_eiou_star,
    focal_eiou_v1,
    focal_l1_grad,
    focal_l1_loss,
    localization_loss,
)
from .report import BoxPlotStats, box_plot_stats
from .sim import (
    Scenario,
    SimConfig,
    SimResult,
    box_from_area_ratio,
    generate_scenario,
    lr_schedule,
    run_simulation,
    simulate_pair,
)
from .variants import LossVariant, make_loss

__version__ = "0.1.0"
