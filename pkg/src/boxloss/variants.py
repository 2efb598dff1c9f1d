"""Named loss variants: a uniform handle over the plain loss family and
the focal reweighting schemes, used by the simulator, the CLI, and the
run manifests."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import focal, losses

VARIANT_NAMES = (
    "smoothl1",
    "iou",
    "giou",
    "diou",
    "ciou",
    "eiou",
    "focal-l1",
    "focal-eiou",
    "focal-eiou-star",
    "focal-eiou-v1",
)


@dataclass(frozen=True)
class LossVariant:
    """A loss selected by name with its hyper-parameters resolved."""

    name: str
    params: dict = field(default_factory=dict)
    _vg: Callable = None

    def value_and_grad(self, pred: np.ndarray, target: np.ndarray):
        return self._vg(pred, target)

    def describe(self) -> dict:
        return {"name": self.name, **self.params}


class UnknownLossError(ValueError):
    pass


def make_loss(
    name: str,
    beta: float = 1.0,
    gamma: float = 0.5,
    focal_beta: float = 0.8,
    differentiate_weight: bool = False,
    batch_normalize: bool = True,
) -> LossVariant:
    """Resolve a loss variant by name.

    ``beta`` is the SmoothL1 threshold, ``focal_beta`` the FocalL1 shape
    parameter, ``gamma`` the IOU-weighting exponent of the focal-eiou
    schemes, ``differentiate_weight`` selects whether focal-eiou's
    IOU**gamma factor is differentiated or treated as a detached weight,
    and ``batch_normalize`` divides the focal-eiou weights by their batch
    mean (the default used by the simulator).
    """
    name = name.lower()
    if name in losses.LOSS_TAGS:
        kind = losses.LossKind(name, beta=beta)
        params = {"beta": beta} if name == "smoothl1" else {}
        return LossVariant(name, params, kind.value_and_grad)
    if name == "focal-l1":
        p = focal.FocalL1Params(beta=focal_beta)
        return LossVariant(
            name, {"focal_beta": focal_beta}, lambda a, b: focal.focal_l1_box_vg(a, b, p)
        )
    if name == "focal-eiou":
        p = focal.FocalEIOUParams(gamma=gamma, differentiate_weight=differentiate_weight)
        params = {
            "gamma": gamma,
            "differentiate_weight": differentiate_weight,
            "batch_normalize": batch_normalize,
        }
        if batch_normalize:
            if differentiate_weight:
                raise ValueError("batch_normalize and differentiate_weight are exclusive")
            return LossVariant(
                name, params, lambda a, b: focal.focal_eiou_batch_normalized_vg(a, b, p)
            )
        return LossVariant(name, params, lambda a, b: focal.focal_eiou_vg(a, b, p))
    if name == "focal-eiou-star":
        p = focal.FocalEIOUParams(gamma=gamma)
        return LossVariant(name, {"gamma": gamma}, lambda a, b: focal.focal_eiou_star_vg(a, b, p))
    if name == "focal-eiou-v1":
        p = focal.FocalL1Params(beta=focal_beta)
        return LossVariant(
            name, {"focal_beta": focal_beta}, lambda a, b: focal.focal_eiou_v1_vg(a, b, p)
        )
    raise UnknownLossError(f"unknown loss name {name!r}, expected one of {VARIANT_NAMES}")


def loss_from_dict(d: dict) -> LossVariant:
    d = dict(d)
    name = d.pop("name")
    return make_loss(name, **d)
