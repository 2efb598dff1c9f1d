"""Focal reweighting for box regression: the FocalL1 loss family and the
IOU-weighted EIOU variants, plus batch weight normalization.

FocalL1 is an l1-style loss whose gradient magnitude is unimodal in the
regression error: it vanishes at zero error, peaks at 1 at
x* = 1/(e*beta), and plateaus for errors beyond 1. The weighted EIOU
variants rescale the EIOU loss of a pair by a function of its IOU so that
well-overlapping (high-quality) pairs dominate optimization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import Box
from .losses import LossEval, eiou_loss_vg, iou_values, iou_vg

_IOU_LOG_FLOOR = 1e-12


@dataclass(frozen=True)
class FocalL1Params:
    """Shape parameter beta in [1/e, 1]; alpha = e*beta normalizes the
    gradient peak to 1, and the integration constant makes the loss
    continuous at x = 1."""

    beta: float = 0.8

    def __post_init__(self):
        if not (1.0 / math.e <= self.beta <= 1.0):
            raise ValueError(f"beta must lie in [1/e, 1], got {self.beta}")

    @property
    def alpha(self) -> float:
        return math.e * self.beta

    @property
    def continuity_constant(self) -> float:
        return (2.0 * self.alpha * math.log(self.beta) + self.alpha) / 4.0


@dataclass(frozen=True)
class FocalEIOUParams:
    """gamma >= 0 controls how strongly low-IOU pairs are suppressed.

    When differentiate_weight is False the IOU**gamma factor is a
    detached weight: the gradient is the weight times the EIOU gradient.
    When True the weight is differentiated too (full product rule), which
    adds an IOU-seeking term proportional to the EIOU value.
    """

    gamma: float = 0.5
    differentiate_weight: bool = False

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")


def focal_l1_grad(x, p: FocalL1Params):
    """Gradient magnitude of the FocalL1 loss; accepts scalars or arrays.

    -alpha * x * ln(beta * x) on 0 < x <= 1, constant -alpha * ln(beta)
    beyond, and 0 at x = 0 (the limit).
    """
    x = np.asarray(x, dtype=float)
    safe = np.where(x > 0.0, x, 1.0)
    inner = -p.alpha * safe * np.log(p.beta * safe)
    out = np.where(x > 1.0, -p.alpha * math.log(p.beta), np.where(x > 0.0, inner, 0.0))
    return out if out.ndim else float(out)


def focal_l1_loss(x, p: FocalL1Params):
    """FocalL1 loss value; accepts scalars or arrays.

    -alpha * x^2 * (2 ln(beta x) - 1) / 4 on 0 < x <= 1, then the linear
    continuation -alpha * ln(beta) * x + C with
    C = (2 alpha ln(beta) + alpha) / 4.
    """
    x = np.asarray(x, dtype=float)
    safe = np.where(x > 0.0, x, 1.0)
    inner = -p.alpha * safe * safe * (2.0 * np.log(p.beta * safe) - 1.0) / 4.0
    outer = -p.alpha * math.log(p.beta) * x + p.continuity_constant
    out = np.where(x > 1.0, outer, np.where(x > 0.0, inner, 0.0))
    return out if out.ndim else float(out)


def localization_loss(pred: Box, target: Box, p: FocalL1Params) -> float:
    """Sum of FocalL1 over the four absolute coordinate offsets."""
    diff = np.abs(pred.as_array() - target.as_array())
    return float(np.sum(focal_l1_loss(diff, p)))


def focal_l1_box_vg(pred: np.ndarray, target: np.ndarray, p: FocalL1Params):
    """Coordinate-wise FocalL1 localization loss and gradient, vectorized."""
    diff = pred - target
    adiff = np.abs(diff)
    value = focal_l1_loss(adiff, p)
    value = np.asarray(value).sum(axis=-1)
    grad = np.asarray(focal_l1_grad(adiff, p)) * np.sign(diff)
    return value, grad


def focal_eiou_vg(pred: np.ndarray, target: np.ndarray, p: FocalEIOUParams):
    """EIOU reweighted by IOU**gamma; vectorized over leading axes."""
    i = iou_values(pred, target)
    if p.gamma == 0.0:
        weight = np.ones_like(i)
    else:
        weight = i**p.gamma
    ev, eg = eiou_loss_vg(pred, target)
    value = weight * ev
    grad = weight[..., None] * eg
    if p.differentiate_weight and p.gamma > 0.0:
        # d(weight)/dIOU, guarded at IOU = 0 where the pair sits in the
        # flat disjoint region anyway.
        dw = np.where(i > _IOU_LOG_FLOOR, p.gamma * i ** (p.gamma - 1.0), 0.0)
        _, d_iou = iou_vg(pred, target)
        grad = grad + (dw * ev)[..., None] * d_iou
    return value, grad


def focal_eiou_batch_normalized_vg(pred: np.ndarray, target: np.ndarray, p: FocalEIOUParams):
    """Focal-EIOU with the IOU**gamma weights normalized by their batch
    mean, so the overall gradient scale matches plain EIOU while
    above-average pairs are boosted past weight 1.

    The batch is the full broadcast set of pairs in one call; unlike the
    other losses this couples pairs, so it is not pair-independent.
    """
    i = iou_values(pred, target)
    weight = np.ones_like(i) if p.gamma == 0.0 else i**p.gamma
    mean_w = float(weight.mean())
    if mean_w > _IOU_LOG_FLOOR:
        weight = weight / mean_w
    ev, eg = eiou_loss_vg(pred, target)
    return weight * ev, weight[..., None] * eg


def focal_eiou(pred: Box, target: Box, p: FocalEIOUParams) -> LossEval:
    value, grad = focal_eiou_vg(pred.as_array(), target.as_array(), p)
    g = np.asarray(grad).reshape(4)
    return LossEval(value=float(value), grad=(g[0], g[1], g[2], g[3]))


def focal_eiou_star_weight(iou: np.ndarray, gamma: float) -> np.ndarray:
    """-(1 - IOU)**gamma * ln(IOU), with IOU floored inside the log."""
    return -((1.0 - iou) ** gamma) * np.log(np.maximum(iou, _IOU_LOG_FLOOR))


def focal_eiou_star_vg(pred: np.ndarray, target: np.ndarray, p: FocalEIOUParams):
    """EIOU reweighted by the classification-focal-style factor
    -(1-IOU)**gamma * ln(IOU), applied as a detached weight."""
    i = iou_values(pred, target)
    weight = focal_eiou_star_weight(i, p.gamma)
    ev, eg = eiou_loss_vg(pred, target)
    return weight * ev, weight[..., None] * eg


def focal_eiou_star(pred: Box, target: Box, p: FocalEIOUParams) -> LossEval:
    value, grad = focal_eiou_star_vg(pred.as_array(), target.as_array(), p)
    g = np.asarray(grad).reshape(4)
    return LossEval(value=float(value), grad=(g[0], g[1], g[2], g[3]))


def focal_eiou_v1_vg(pred: np.ndarray, target: np.ndarray, p: FocalL1Params):
    """FocalL1 composed with the EIOU value: L_f(L_EIOU), chain rule.

    Both factors of the chain-rule product vanish together as the pair
    converges, which is why this composition underperforms; it is kept as
    the ablation reference.
    """
    ev, eg = eiou_loss_vg(pred, target)
    value = np.asarray(focal_l1_loss(ev, p))
    outer = np.asarray(focal_l1_grad(ev, p))
    return value, outer[..., None] * eg


def focal_eiou_v1(pred: Box, target: Box, p: FocalL1Params) -> LossEval:
    value, grad = focal_eiou_v1_vg(pred.as_array(), target.as_array(), p)
    g = np.asarray(grad).reshape(4)
    return LossEval(value=float(value), grad=(g[0], g[1], g[2], g[3]))


def batch_normalized_loss(evals: Sequence[tuple[float, float]]) -> float:
    """Weighted mean sum(W_i * L_i) / sum(W_i) over a batch of pairs.

    Returns 0 when every weight is 0. Rejects empty batches.
    """
    if len(evals) == 0:
        raise ValueError("batch_normalized_loss requires a nonempty sequence")
    weights = np.array([w for w, _ in evals], dtype=float)
    values = np.array([v for _, v in evals], dtype=float)
    if np.any(weights < 0):
        raise ValueError("weights must be >= 0")
    total = weights.sum()
    if total == 0.0:
        return 0.0
    return float((weights * values).sum() / total)
