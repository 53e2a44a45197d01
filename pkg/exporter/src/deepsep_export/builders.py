"""Stage/tap decompositions of the supported torchvision architectures.

Each builder returns an ordered list of (module, tap_name_or_None) where tap
names follow the shared registry and sit at post-activation outputs (the ReLU
output for plain conv layers, the block output for fire/inception/residual
macro-blocks).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import torch
import torchvision.models as tvm

from deepsep_export import ExportError, UnknownNetwork

WEIGHT_PRETRAINED = "pretrained"
WEIGHT_RANDOM = "random"


@dataclass(frozen=True)
class ExportSpec:
    """What to export: network, taps (registry names), weights, destination."""

    network: str
    taps: tuple
    weight_mode: str
    seed: Optional[int] = None

    def __post_init__(self):
        if self.weight_mode not in (WEIGHT_PRETRAINED, WEIGHT_RANDOM):
            raise ExportError(f"weight mode must be pretrained|random, got {self.weight_mode!r}")
        if self.weight_mode == WEIGHT_RANDOM and self.seed is None:
            raise ExportError("random weight mode requires a seed")


def _alexnet(model):
    taps = {1: "conv1", 4: "conv2", 7: "conv3", 9: "conv4", 11: "conv5"}
    return [(model.features[i], taps.get(i)) for i in range(12)]


def _vgg16(model):
    taps = {1: "conv11", 3: "conv12", 6: "conv21", 8: "conv22", 11: "conv31",
            13: "conv32", 15: "conv33", 18: "conv41", 20: "conv42", 22: "conv43",
            25: "conv51", 27: "conv52", 29: "conv53"}
    return [(model.features[i], taps.get(i)) for i in range(30)]


def _squeezenet11(model):
    taps = {1: "conv1", 3: "fire1", 4: "fire2", 6: "fire3", 7: "fire4",
            9: "fire5", 10: "fire6", 11: "fire7", 12: "fire8"}
    return [(model.features[i], taps.get(i)) for i in range(13)]


def _resnet50(model):
    stem = torch.nn.Sequential(model.conv1, model.bn1, model.relu)
    return [(stem, "conv1"), (model.maxpool, None),
            (model.layer1, "layer1"), (model.layer2, "layer2"),
            (model.layer3, "layer3"), (model.layer4, "layer4")]


def _inceptionv3(model):
    return [
        (model.Conv2d_1a_3x3, None), (model.Conv2d_2a_3x3, "2a3x3"),
        (model.Conv2d_2b_3x3, None), (model.maxpool1, None),
        (model.Conv2d_3b_1x1, "3b1x1"), (model.Conv2d_4a_3x3, "4a3x3"),
        (model.maxpool2, None),
        (model.Mixed_5b, "mixed5b"), (model.Mixed_5c, "mixed5c"),
        (model.Mixed_5d, "mixed5d"), (model.Mixed_6a, "mixed6a"),
        (model.Mixed_6b, "mixed6b"), (model.Mixed_6c, "mixed6c"),
        (model.Mixed_6d, "mixed6d"), (model.Mixed_6e, "mixed6e"),
        (model.Mixed_7a, "mixed7a"), (model.Mixed_7b, "mixed7b"),
        (model.Mixed_7c, "mixed7c"),
    ]


_CONSTRUCTORS = {
    "alexnet": (tvm.alexnet, tvm.AlexNet_Weights, _alexnet),
    "vgg16": (tvm.vgg16, tvm.VGG16_Weights, _vgg16),
    "squeezenet11": (tvm.squeezenet1_1, tvm.SqueezeNet1_1_Weights, _squeezenet11),
    "resnet50": (tvm.resnet50, tvm.ResNet50_Weights, _resnet50),
    "inceptionv3": (tvm.inception_v3, tvm.Inception_V3_Weights, _inceptionv3),
}


def build_stages(spec: ExportSpec) -> list:
    """Instantiate the network with the requested weights and return its stages.

    Stages after the deepest requested tap are dropped, so graphs truncated
    at an early layer stay small.
    """
    if spec.network not in _CONSTRUCTORS:
        raise UnknownNetwork(
            f"unknown network {spec.network!r}; known: {sorted(_CONSTRUCTORS)}")
    ctor, weights_enum, decompose = _CONSTRUCTORS[spec.network]
    kwargs = {}
    if spec.network == "inceptionv3":
        kwargs = {"aux_logits": True, "init_weights": True}
    if spec.weight_mode == WEIGHT_RANDOM:
        torch.manual_seed(int(spec.seed))
        model = ctor(weights=None, **kwargs)
    else:
        try:
            model = ctor(weights=weights_enum.IMAGENET1K_V1, **kwargs)
        except Exception as exc:
            raise ExportError(
                f"pretrained weights for {spec.network} not obtainable: {exc}") from exc
    model.eval()
    stages = decompose(model)
    tap_positions = [i for i, (_, name) in enumerate(stages) if name in spec.taps]
    if not tap_positions:
        raise ExportError("no requested tap maps onto the architecture")
    last = max(tap_positions)
    return [(module, name if name in spec.taps else None)
            for module, name in stages[:last + 1]]
