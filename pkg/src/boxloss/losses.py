"""IOU-family regression losses with analytic gradients.

Every loss maps (predicted box, target box) to a scalar value and its
gradient with respect to the predicted box's (cx, cy, w, h). The array
core functions (suffix ``_vg``) broadcast over leading axes: boxes are
ndarrays of shape (..., 4) in center form, and the return is a pair
(value of shape (...,), gradient of shape (..., 4)). The scalar API
wraps them for single Box pairs.

Gradient conventions, pinned so the finite-difference checks are exact:

* Non-smooth min/max ties (edge-aligned boxes) take the one-sided
  derivative in which the predicted box's edge is the active one, i.e.
  the branch along which the overlap shrinks.
* Disjoint boxes sit in a constant region of the plain IOU loss, so its
  gradient there is exactly zero.
* The CIOU aspect term is differentiated with its coupling coefficient
  alpha held constant; IOU and distance terms use full gradients.
* EIOU gradients flow through the enclosure dimensions, which depend on
  the predicted box.
* Squared denominators are floored at 1e-12 before division; where the
  floor is active the denominator is treated as constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Box

_FLOOR = 1e-12

LOSS_TAGS = ("smoothl1", "iou", "giou", "diou", "ciou", "eiou")


@dataclass(frozen=True)
class LossKind:
    """Selector for one member of the loss family.

    ``beta`` is the SmoothL1 quadratic/linear threshold and is ignored by
    the IOU-family tags.
    """

    tag: str
    beta: float = 1.0

    def __post_init__(self):
        if self.tag not in LOSS_TAGS:
            raise ValueError(f"unknown loss tag {self.tag!r}, expected one of {LOSS_TAGS}")
        if self.tag == "smoothl1" and not self.beta > 0:
            raise ValueError(f"smoothl1 beta must be > 0, got {self.beta}")

    def value_and_grad(self, pred: np.ndarray, target: np.ndarray):
        if self.tag == "smoothl1":
            return smooth_l1_vg(pred, target, self.beta)
        return _VG[self.tag](pred, target)


@dataclass(frozen=True)
class LossEval:
    """Loss value and its gradient w.r.t. the predicted (cx, cy, w, h)."""

    value: float
    grad: tuple[float, float, float, float]


def _split(b: np.ndarray):
    return b[..., 0], b[..., 1], b[..., 2], b[..., 3]


def _stack(g0, g1, g2, g3) -> np.ndarray:
    return np.stack(np.broadcast_arrays(g0, g1, g2, g3), axis=-1)


class _PairTerms:
    """Shared geometric quantities of a (pred, target) pair and their
    derivatives w.r.t. the predicted box."""

    def __init__(self, pred: np.ndarray, target: np.ndarray):
        cx, cy, w, h = _split(pred)
        tx, ty, tw, th = _split(target)
        self.cx, self.cy, self.w, self.h = cx, cy, w, h
        self.tx, self.ty, self.tw, self.th = tx, ty, tw, th

        px1, px2 = cx - 0.5 * w, cx + 0.5 * w
        py1, py2 = cy - 0.5 * h, cy + 0.5 * h
        qx1, qx2 = tx - 0.5 * tw, tx + 0.5 * tw
        qy1, qy2 = ty - 0.5 * th, ty + 0.5 * th

        iw_raw = np.minimum(px2, qx2) - np.maximum(px1, qx1)
        ih_raw = np.minimum(py2, qy2) - np.maximum(py1, qy1)
        overlap = (iw_raw > 0.0) & (ih_raw > 0.0)
        iw = np.where(overlap, iw_raw, 0.0)
        ih = np.where(overlap, ih_raw, 0.0)
        self.inter = iw * ih

        # Active-edge indicators; ties resolve to the predicted box's edge.
        r_in = (px2 <= qx2).astype(float)
        l_in = (px1 >= qx1).astype(float)
        t_in = (py2 <= qy2).astype(float)
        b_in = (py1 >= qy1).astype(float)
        ov = overlap.astype(float)
        self.d_inter = _stack(
            ov * ih * (r_in - l_in),
            ov * iw * (t_in - b_in),
            ov * ih * 0.5 * (r_in + l_in),
            ov * iw * 0.5 * (t_in + b_in),
        )

        self.union = w * h + tw * th - self.inter
        zeros = np.zeros_like(w)
        self.d_union = _stack(zeros, zeros, h, w) - self.d_inter

        self.iou = self.inter / self.union
        self.d_iou = (
            self.d_inter * self.union[..., None] - self.inter[..., None] * self.d_union
        ) / (self.union * self.union)[..., None]

        r_enc = (px2 >= qx2).astype(float)
        l_enc = (px1 <= qx1).astype(float)
        t_enc = (py2 >= qy2).astype(float)
        b_enc = (py1 <= qy1).astype(float)
        self.cw = np.maximum(px2, qx2) - np.minimum(px1, qx1)
        self.ch = np.maximum(py2, qy2) - np.minimum(py1, qy1)
        self.d_cw = _stack(r_enc - l_enc, zeros, 0.5 * (r_enc + l_enc), zeros)
        self.d_ch = _stack(zeros, t_enc - b_enc, zeros, 0.5 * (t_enc + b_enc))

    def dist_term(self):
        """rho^2 / c^2 (normalized center distance) and its gradient."""
        rho2 = (self.cx - self.tx) ** 2 + (self.cy - self.ty) ** 2
        zeros = np.zeros_like(rho2)
        d_rho2 = _stack(2.0 * (self.cx - self.tx), 2.0 * (self.cy - self.ty), zeros, zeros)
        c2 = self.cw * self.cw + self.ch * self.ch
        c2f = np.maximum(c2, _FLOOR)
        d_c2 = np.where(
            (c2 > _FLOOR)[..., None],
            2.0 * self.cw[..., None] * self.d_cw + 2.0 * self.ch[..., None] * self.d_ch,
            0.0,
        )
        val = rho2 / c2f
        grad = (d_rho2 * c2f[..., None] - rho2[..., None] * d_c2) / (c2f * c2f)[..., None]
        return val, grad


def iou_values(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """IOU of each broadcast pair, without gradients."""
    cx, cy, w, h = _split(pred)
    tx, ty, tw, th = _split(target)
    iw = np.minimum(cx + 0.5 * w, tx + 0.5 * tw) - np.maximum(cx - 0.5 * w, tx - 0.5 * tw)
    ih = np.minimum(cy + 0.5 * h, ty + 0.5 * th) - np.maximum(cy - 0.5 * h, ty - 0.5 * th)
    inter = np.where((iw > 0.0) & (ih > 0.0), iw * ih, 0.0)
    return inter / (w * h + tw * th - inter)


def iou_vg(pred: np.ndarray, target: np.ndarray):
    """IOU value and gradient (of the IOU itself, not the loss)."""
    t = _PairTerms(pred, target)
    return t.iou, t.d_iou


def iou_loss_vg(pred: np.ndarray, target: np.ndarray):
    t = _PairTerms(pred, target)
    return 1.0 - t.iou, -t.d_iou


def giou_loss_vg(pred: np.ndarray, target: np.ndarray):
    t = _PairTerms(pred, target)
    c_area = np.maximum(t.cw * t.ch, _FLOOR)
    d_c_area = t.ch[..., None] * t.d_cw + t.cw[..., None] * t.d_ch
    # penalty = (|C| - |union|) / |C| = 1 - union / |C|
    value = 1.0 - t.iou + 1.0 - t.union / c_area
    d_penalty = -(t.d_union * c_area[..., None] - t.union[..., None] * d_c_area) / (
        c_area * c_area
    )[..., None]
    return value, -t.d_iou + d_penalty


def diou_loss_vg(pred: np.ndarray, target: np.ndarray):
    t = _PairTerms(pred, target)
    dist, d_dist = t.dist_term()
    return 1.0 - t.iou + dist, -t.d_iou + d_dist


def _aspect_v(w, h, tw, th):
    """CIOU aspect-discrepancy term v and its (w, h) derivatives."""
    delta = np.arctan2(tw, th) - np.arctan2(w, h)
    v = (4.0 / math.pi**2) * delta * delta
    wh2 = np.maximum(w * w + h * h, _FLOOR)
    dv_dw = -(8.0 / math.pi**2) * delta * h / wh2
    dv_dh = (8.0 / math.pi**2) * delta * w / wh2
    return v, dv_dw, dv_dh


def ciou_alpha(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """The CIOU trade-off coefficient alpha = v / ((1 - IOU) + v).

    Defined as 0 when IOU is 0 and when both IOU=1 and v=0 (identical
    aspect ratios at perfect overlap, where the formula is 0/0).
    """
    _, _, w, h = _split(pred)
    _, _, tw, th = _split(target)
    i = iou_values(pred, target)
    v, _, _ = _aspect_v(w, h, tw, th)
    s = (1.0 - i) + v
    return np.where((i > 0.0) & (s > _FLOOR), v / np.where(s > _FLOOR, s, 1.0), 0.0)


def ciou_loss_vg(pred: np.ndarray, target: np.ndarray):
    t = _PairTerms(pred, target)
    dist, d_dist = t.dist_term()
    v, dv_dw, dv_dh = _aspect_v(t.w, t.h, t.tw, t.th)
    s = (1.0 - t.iou) + v
    alpha = np.where((t.iou > 0.0) & (s > _FLOOR), v / np.where(s > _FLOOR, s, 1.0), 0.0)
    zeros = np.zeros_like(v)
    # alpha is held constant during differentiation: only v is differentiated.
    grad = -t.d_iou + d_dist + alpha[..., None] * _stack(zeros, zeros, dv_dw, dv_dh)
    return 1.0 - t.iou + dist + alpha * v, grad


def ciou_value_frozen_alpha(pred: np.ndarray, target: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """CIOU value with a caller-supplied, fixed alpha.

    Finite-differencing this function replicates the frozen-alpha gradient
    convention of ciou_loss_vg.
    """
    _, _, w, h = _split(pred)
    _, _, tw, th = _split(target)
    t = _PairTerms(pred, target)
    dist, _ = t.dist_term()
    v, _, _ = _aspect_v(w, h, tw, th)
    return 1.0 - t.iou + dist + alpha * v


def eiou_loss_vg(pred: np.ndarray, target: np.ndarray):
    t = _PairTerms(pred, target)
    dist, d_dist = t.dist_term()

    def gap_term(x, tx, c, d_c, which):
        c2f = np.maximum(c * c, _FLOOR)
        gap = x - tx
        val = gap * gap / c2f
        zeros = np.zeros_like(gap)
        d_gap2 = _stack(zeros, zeros, 2.0 * gap, zeros) if which == "w" else _stack(
            zeros, zeros, zeros, 2.0 * gap
        )
        d_c2 = np.where((c * c > _FLOOR)[..., None], 2.0 * c[..., None] * d_c, 0.0)
        grad = (d_gap2 * c2f[..., None] - (gap * gap)[..., None] * d_c2) / (c2f * c2f)[..., None]
        return val, grad

    wv, wg = gap_term(t.w, t.tw, t.cw, t.d_cw, "w")
    hv, hg = gap_term(t.h, t.th, t.ch, t.d_ch, "h")
    return 1.0 - t.iou + dist + wv + hv, -t.d_iou + d_dist + wg + hg


def smooth_l1(x: float, beta: float) -> float:
    """Quadratic for |x| < beta, linear beyond; C1 at the joint."""
    if not beta > 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    ax = abs(x)
    if ax < beta:
        return 0.5 * x * x / beta
    return ax - 0.5 * beta


def smooth_l1_vg(pred: np.ndarray, target: np.ndarray, beta: float = 1.0):
    """Coordinate-wise SmoothL1 summed over (cx, cy, w, h)."""
    x = pred - target
    ax = np.abs(x)
    inner = ax < beta
    value = np.where(inner, 0.5 * x * x / beta, ax - 0.5 * beta).sum(axis=-1)
    grad = np.where(inner, x / beta, np.sign(x))
    return value, grad


_VG = {
    "iou": iou_loss_vg,
    "giou": giou_loss_vg,
    "diou": diou_loss_vg,
    "ciou": ciou_loss_vg,
    "eiou": eiou_loss_vg,
}


def _wrap(vg_result) -> LossEval:
    value, grad = vg_result
    g = np.asarray(grad, dtype=float).reshape(4)
    return LossEval(value=float(value), grad=(g[0], g[1], g[2], g[3]))


def loss_iou(pred: Box, target: Box) -> LossEval:
    return _wrap(iou_loss_vg(pred.as_array(), target.as_array()))


def loss_giou(pred: Box, target: Box) -> LossEval:
    return _wrap(giou_loss_vg(pred.as_array(), target.as_array()))


def loss_diou(pred: Box, target: Box) -> LossEval:
    return _wrap(diou_loss_vg(pred.as_array(), target.as_array()))


def loss_ciou(pred: Box, target: Box) -> LossEval:
    return _wrap(ciou_loss_vg(pred.as_array(), target.as_array()))


def loss_eiou(pred: Box, target: Box) -> LossEval:
    return _wrap(eiou_loss_vg(pred.as_array(), target.as_array()))


def eval_loss(kind: LossKind, pred: Box, target: Box) -> LossEval:
    """Uniform dispatch over the loss family."""
    return _wrap(kind.value_and_grad(pred.as_array(), target.as_array()))


def finite_diff_grad(
    kind: LossKind, pred: Box, target: Box, step: float = 1e-6
) -> tuple[float, float, float, float]:
    """Central-difference gradient of eval_loss w.r.t. the predicted box.

    This differentiates the plain loss value; for CIOU it therefore does
    NOT match the frozen-alpha analytic gradient (finite-difference
    ciou_value_frozen_alpha instead to replicate that convention).
    """
    if not step > 0:
        raise ValueError(f"step must be > 0, got {step}")
    if pred.w <= step or pred.h <= step:
        raise ValueError(
            f"perturbation step {step} would produce a degenerate box (w={pred.w}, h={pred.h})"
        )
    p = pred.as_array()
    t = target.as_array()
    out = []
    for i in range(4):
        hi = p.copy()
        lo = p.copy()
        hi[i] += step
        lo[i] -= step
        v_hi, _ = kind.value_and_grad(hi, t)
        v_lo, _ = kind.value_and_grad(lo, t)
        out.append((float(v_hi) - float(v_lo)) / (2.0 * step))
    return tuple(out)
