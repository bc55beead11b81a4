"""Programmatic constructors for the seven reference architectures."""
from __future__ import annotations

import enum
import logging

from .graph_core import (
    DEFAULT_INPUT_ID,
    DEFAULT_INPUT_SHAPE,
    DEFAULT_OUTPUT_ID,
    Add,
    Concat,
    Conv,
    Fc,
    GlobalAvgPool,
    Graph,
    GraphBuilder,
    Input,
    MaxPool,
    Output,
    ShortcutPad,
)

logger = logging.getLogger(__name__)

DEFAULT_NUM_CLASSES = 1000
MIN_SPATIAL = 32

VGG_CONFIGS = {
    11: (64, "M", 128, "M", 256, 256, "M", 512, 512, "M", 512, 512, "M"),
    16: (64, 64, "M", 128, 128, "M", 256, 256, 256, "M", 512, 512, 512, "M", 512, 512, 512, "M"),
    19: (64, 64, "M", 128, 128, "M", 256, 256, 256, 256, "M",
         512, 512, 512, 512, "M", 512, 512, 512, 512, "M"),
}
VGG_HEAD_WIDTH = 4096

# variant -> (block kind, blocks per stage)
RESNET_CONFIGS = {
    18: ("basic", (2, 2, 2, 2)),
    34: ("basic", (3, 4, 6, 3)),
    50: ("bottleneck", (3, 4, 6, 3)),
}
RESNET_STAGE_WIDTHS = (64, 128, 256, 512)
BOTTLENECK_EXPANSION = 4

# name -> (1x1, 3x3 reduce, 3x3, 5x5 reduce, 5x5, pool proj); None marks a stride-2 maxpool.
GOOGLENET_MODULES = (
    ("inception3a", (64, 96, 128, 16, 32, 32)),
    ("inception3b", (128, 128, 192, 32, 96, 64)),
    None,
    ("inception4a", (192, 96, 208, 16, 48, 64)),
    ("inception4b", (160, 112, 224, 24, 64, 64)),
    ("inception4c", (128, 128, 256, 24, 64, 64)),
    ("inception4d", (112, 144, 288, 32, 64, 64)),
    ("inception4e", (256, 160, 320, 32, 128, 128)),
    None,
    ("inception5a", (256, 160, 320, 32, 128, 128)),
    ("inception5b", (384, 192, 384, 48, 128, 128)),
)

BUILTIN_ARCHITECTURES = ("vgg11", "vgg16", "vgg19", "resnet18", "resnet34", "resnet50", "googlenet")


class BuilderError(Exception):
    """Custom exception for architecture builder errors."""
    pass


class ShortcutPolicy(enum.Enum):
    PROJECTION = "projection"
    IDENTITY_PAD = "identity"


def _check_input(input_shape, num_classes):
    if len(input_shape) != 3 or any(int(d) < 1 for d in input_shape):
        raise BuilderError(f"input shape must be (channels, height, width), got {tuple(input_shape)}")
    _, h, w = input_shape
    if h < MIN_SPATIAL or w < MIN_SPATIAL:
        raise BuilderError(f"input spatial dims must be >= {MIN_SPATIAL}, got {h}x{w}")
    if num_classes < 1:
        raise BuilderError(f"num_classes must be positive, got {num_classes}")


def _conv(k, out, stride=1, padding=0, bias=True):
    return Conv(kernel_h=k, kernel_w=k, out_channels=out, stride=stride, padding=padding, bias=bias)


def build_vgg(variant: int, input_shape=DEFAULT_INPUT_SHAPE, num_classes: int = DEFAULT_NUM_CLASSES) -> Graph:
    """Plain VGG: 3x3 conv stages separated by 2x2 maxpools, three Fc layers."""
    if variant not in VGG_CONFIGS:
        raise BuilderError(f"unknown VGG variant {variant}; choose from {sorted(VGG_CONFIGS)}")
    _check_input(input_shape, num_classes)

    b = GraphBuilder(name=f"vgg{variant}", input_shape=input_shape)
    prev = b.add(DEFAULT_INPUT_ID, Input())
    stage, index = 1, 1
    for item in VGG_CONFIGS[variant]:
        if item == "M":
            prev = b.add(f"pool{stage}", MaxPool(kernel=2, stride=2), prev)
            stage, index = stage + 1, 1
        else:
            prev = b.add(f"conv{stage}_{index}", _conv(3, item, padding=1), prev)
            index += 1
    prev = b.add("fc6", Fc(out_features=VGG_HEAD_WIDTH), prev)
    prev = b.add("fc7", Fc(out_features=VGG_HEAD_WIDTH), prev)
    prev = b.add("fc8", Fc(out_features=num_classes), prev)
    b.add(DEFAULT_OUTPUT_ID, Output(), prev)
    return b.build()


def _shortcut(b, prefix, prev, in_channels, out_channels, stride, policy):
    if stride == 1 and in_channels == out_channels:
        return prev
    if policy is ShortcutPolicy.PROJECTION:
        return b.add(f"{prefix}.downsample", _conv(1, out_channels, stride=stride, bias=False), prev)
    return b.add(f"{prefix}.pad", ShortcutPad(out_channels=out_channels, stride=stride), prev)


def _basic_block(b, prefix, prev, in_channels, width, stride, policy):
    body = b.add(f"{prefix}.conv1", _conv(3, width, stride=stride, padding=1, bias=False), prev)
    body = b.add(f"{prefix}.conv2", _conv(3, width, padding=1, bias=False), body)
    skip = _shortcut(b, prefix, prev, in_channels, width, stride, policy)
    return b.add(f"{prefix}.add", Add(), body, skip), width


def _bottleneck_block(b, prefix, prev, in_channels, width, stride, policy):
    out_channels = width * BOTTLENECK_EXPANSION
    body = b.add(f"{prefix}.conv1", _conv(1, width, bias=False), prev)
    body = b.add(f"{prefix}.conv2", _conv(3, width, stride=stride, padding=1, bias=False), body)
    body = b.add(f"{prefix}.conv3", _conv(1, out_channels, bias=False), body)
    skip = _shortcut(b, prefix, prev, in_channels, out_channels, stride, policy)
    return b.add(f"{prefix}.add", Add(), body, skip), out_channels


def build_resnet(variant: int, input_shape=DEFAULT_INPUT_SHAPE, num_classes: int = DEFAULT_NUM_CLASSES,
                 policy: ShortcutPolicy = ShortcutPolicy.PROJECTION) -> Graph:
    """ResNet with a 7x7 stem, four stages of residual blocks, global pool and Fc head.

    Shortcuts are identity except where a block changes stride or width; those
    get a 1x1 projection conv or a parameter-free pad depending on `policy`.
    """
    if variant not in RESNET_CONFIGS:
        raise BuilderError(f"unknown ResNet variant {variant}; choose from {sorted(RESNET_CONFIGS)}")
    _check_input(input_shape, num_classes)
    block_kind, stage_blocks = RESNET_CONFIGS[variant]
    make_block = _basic_block if block_kind == "basic" else _bottleneck_block

    b = GraphBuilder(name=f"resnet{variant}", input_shape=input_shape)
    prev = b.add(DEFAULT_INPUT_ID, Input())
    prev = b.add("conv1", _conv(7, 64, stride=2, padding=3, bias=False), prev)
    prev = b.add("pool1", MaxPool(kernel=3, stride=2, padding=1), prev)
    channels = 64
    for stage, (width, blocks) in enumerate(zip(RESNET_STAGE_WIDTHS, stage_blocks), start=1):
        for index in range(blocks):
            stride = 2 if stage > 1 and index == 0 else 1
            prev, channels = make_block(b, f"layer{stage}.{index}", prev, channels, width, stride, policy)
    prev = b.add("gap", GlobalAvgPool(), prev)
    prev = b.add("fc", Fc(out_features=num_classes), prev)
    b.add(DEFAULT_OUTPUT_ID, Output(), prev)
    return b.build()


def _inception(b, name, prev, widths):
    one, reduce3, three, reduce5, five, pool_proj = widths
    b1 = b.add(f"{name}.b1", _conv(1, one), prev)
    b2 = b.add(f"{name}.b2_reduce", _conv(1, reduce3), prev)
    b2 = b.add(f"{name}.b2", _conv(3, three, padding=1), b2)
    b3 = b.add(f"{name}.b3_reduce", _conv(1, reduce5), prev)
    b3 = b.add(f"{name}.b3", _conv(5, five, padding=2), b3)
    b4 = b.add(f"{name}.b4_pool", MaxPool(kernel=3, stride=1, padding=1), prev)
    b4 = b.add(f"{name}.b4", _conv(1, pool_proj), b4)
    return b.add(f"{name}.concat", Concat(), b1, b2, b3, b4)


def build_googlenet(input_shape=DEFAULT_INPUT_SHAPE, num_classes: int = DEFAULT_NUM_CLASSES) -> Graph:
    """GoogLeNet inference graph (no auxiliary classifiers)."""
    _check_input(input_shape, num_classes)

    b = GraphBuilder(name="googlenet", input_shape=input_shape)
    prev = b.add(DEFAULT_INPUT_ID, Input())
    prev = b.add("conv1", _conv(7, 64, stride=2, padding=3), prev)
    prev = b.add("pool1", MaxPool(kernel=3, stride=2, padding=1), prev)
    prev = b.add("conv2_reduce", _conv(1, 64), prev)
    prev = b.add("conv2", _conv(3, 192, padding=1), prev)
    prev = b.add("pool2", MaxPool(kernel=3, stride=2, padding=1), prev)
    pool_index = 3
    for entry in GOOGLENET_MODULES:
        if entry is None:
            prev = b.add(f"pool{pool_index}", MaxPool(kernel=3, stride=2, padding=1), prev)
            pool_index += 1
            continue
        name, widths = entry
        prev = _inception(b, name, prev, widths)
    prev = b.add("gap", GlobalAvgPool(), prev)
    prev = b.add("fc", Fc(out_features=num_classes), prev)
    b.add(DEFAULT_OUTPUT_ID, Output(), prev)
    return b.build()


def build_architecture(name: str, input_shape=DEFAULT_INPUT_SHAPE, num_classes: int = DEFAULT_NUM_CLASSES,
                       policy: ShortcutPolicy = ShortcutPolicy.PROJECTION) -> Graph:
    """Dispatches a built-in architecture name (e.g. 'resnet50') to its builder."""
    key = name.lower()
    logger.info("ArchBuilders: building %s at %s with %d classes", key, tuple(input_shape), num_classes)
    if key.startswith("vgg") and key[3:].isdigit():
        return build_vgg(int(key[3:]), input_shape, num_classes)
    if key.startswith("resnet") and key[6:].isdigit():
        return build_resnet(int(key[6:]), input_shape, num_classes, policy)
    if key == "googlenet":
        return build_googlenet(input_shape, num_classes)
    raise BuilderError(f"unknown architecture '{name}'; choose from {', '.join(BUILTIN_ARCHITECTURES)}")
