"""Run options: defaults, optional JSON run-config file, command-line overrides.

Precedence is command line > config file > DEFAULT_* constant. Relative
paths in a config file are resolved against the directory holding it.
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field

from .arch_builders import BUILTIN_ARCHITECTURES, DEFAULT_NUM_CLASSES, ShortcutPolicy
from .cost_metrics import MacConvention
from .depth_metrics import DEFAULT_MAX_PATH_COUNT, DEFAULT_ORACLE_CAP
from .grad_depth import DEFAULT_GAMMAS
from .graph_core import DEFAULT_INPUT_SHAPE

logger = logging.getLogger(__name__)

DEFAULT_DEPTH_CONVENTION = "both"
DEFAULT_SHORTCUT = ShortcutPolicy.PROJECTION.value
DEFAULT_FORMAT = "table"
DEFAULT_FC_DEPTH = "on"
DEFAULT_MAC_CONVENTION = MacConvention.HALF.value
DEFAULT_JOBS = 1

DEPTH_CONVENTIONS = ("layer", "module", "both")
FORMATS = ("table", "csv", "json")
SWITCH_VALUES = ("on", "off")

CONFIG_KEYS = {
    "sources", "input_shape", "classes", "gamma", "depth_convention", "shortcut", "format",
    "oracle", "oracle_cap", "fc_depth", "mac_convention", "approximate", "max_path_count",
    "jobs", "accuracy", "weights", "expected", "per_node",
}
PATH_KEYS = ("accuracy", "weights", "expected")


class RunConfigError(Exception):
    """Custom exception for invalid run configuration or flag values."""
    pass


@dataclass(frozen=True)
class Source:
    kind: str  # "arch" or "spec"
    value: str

    def __str__(self):
        return self.value if self.kind == "arch" else f"spec:{self.value}"


@dataclass(frozen=True)
class RunConfig:
    values: dict = field(default_factory=dict)
    base_dir: str = "."

    def get(self, key, default=None):
        return self.values.get(key, default)


@dataclass(frozen=True)
class AnalysisOptions:
    input_shape: tuple[int, int, int] = DEFAULT_INPUT_SHAPE
    num_classes: int = DEFAULT_NUM_CLASSES
    gammas: tuple[float, ...] = DEFAULT_GAMMAS
    depth_convention: str = DEFAULT_DEPTH_CONVENTION
    shortcut: ShortcutPolicy = ShortcutPolicy.PROJECTION
    format: str = DEFAULT_FORMAT
    oracle: bool = False
    oracle_cap: int = DEFAULT_ORACLE_CAP
    count_fc: bool = True
    mac_convention: MacConvention = MacConvention.HALF
    approximate: bool = False
    max_path_count: int = DEFAULT_MAX_PATH_COUNT
    jobs: int = DEFAULT_JOBS
    per_node: bool = False
    accuracy: str | None = None
    weights: str | None = None
    expected: str | None = None


def parse_input_shape(text) -> tuple[int, int, int]:
    if isinstance(text, (list, tuple)):
        parts = list(text)
    else:
        parts = str(text).lower().split("x")
    try:
        dims = tuple(int(p) for p in parts)
    except (TypeError, ValueError):
        raise RunConfigError(f"input shape must look like CxHxW, got '{text}'") from None
    if len(dims) != 3 or any(d < 1 for d in dims):
        raise RunConfigError(f"input shape must be three positive integers CxHxW, got '{text}'")
    return dims


def parse_gammas(text) -> tuple[float, ...]:
    parts = text if isinstance(text, (list, tuple)) else str(text).split(",")
    try:
        gammas = tuple(float(p) for p in parts)
    except (TypeError, ValueError):
        raise RunConfigError(f"gamma list must be comma-separated numbers, got '{text}'") from None
    if not gammas:
        raise RunConfigError("gamma list is empty")
    for g in gammas:
        if not (0.0 < g <= 1.0):
            raise RunConfigError(f"gamma must lie in (0, 1], got {g}")
    return gammas


def _parse_source(entry, base_dir) -> Source:
    if isinstance(entry, dict):
        if len(entry) != 1 or next(iter(entry)) not in ("arch", "spec"):
            raise RunConfigError(f"source entries need exactly one of 'arch' or 'spec', got {entry}")
        kind, value = next(iter(entry.items()))
    elif isinstance(entry, str):
        kind = "arch" if entry.lower() in BUILTIN_ARCHITECTURES else "spec"
        value = entry
    else:
        raise RunConfigError(f"invalid source entry {entry!r}")
    if kind == "spec" and not os.path.isabs(value):
        value = os.path.normpath(os.path.join(base_dir, value))
    return Source(kind, str(value))


def load_run_config(path) -> RunConfig:
    """Reads a JSON run-config; sources and path options become absolute."""
    if not os.path.exists(path):
        raise RunConfigError(f"run config '{path}' not found")
    try:
        with open(path, "r", encoding="utf-8") as f:
            values = json.load(f)
    except json.JSONDecodeError as e:
        raise RunConfigError(f"could not decode run config '{path}': {e}") from e
    if not isinstance(values, dict):
        raise RunConfigError(f"run config '{path}' must hold a JSON object")
    unknown = sorted(set(values) - CONFIG_KEYS)
    if unknown:
        raise RunConfigError(f"unknown key(s) in run config '{path}': {', '.join(unknown)}")

    base_dir = os.path.dirname(os.path.abspath(path))
    values = dict(values)
    if "sources" in values:
        if not isinstance(values["sources"], list):
            raise RunConfigError("'sources' must be a list")
        values["sources"] = [_parse_source(s, base_dir) for s in values["sources"]]
    for key in PATH_KEYS:
        if key in values and not os.path.isabs(values[key]):
            values[key] = os.path.normpath(os.path.join(base_dir, values[key]))
    logger.info("RunConfig: loaded %s (%d keys)", path, len(values))
    return RunConfig(values=values, base_dir=base_dir)


def _pick(cli_value, config: RunConfig, key, default):
    if cli_value is not None:
        return cli_value
    return config.get(key, default)


def _choice(value, choices, name):
    if value not in choices:
        raise RunConfigError(f"{name} must be one of {', '.join(choices)}, got '{value}'")
    return value


def _positive_int(value, name):
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise RunConfigError(f"{name} must be a positive integer, got {value!r}")
    return value


def _flag(value, name):
    if not isinstance(value, bool):
        raise RunConfigError(f"{name} must be true or false, got {value!r}")
    return value


def resolve_options(args, config: RunConfig | None = None) -> AnalysisOptions:
    """Merges parsed command-line arguments over the run config and defaults."""
    config = config or RunConfig()

    def arg(name):
        return getattr(args, name, None)

    shape = parse_input_shape(_pick(arg("input_shape"), config, "input_shape", DEFAULT_INPUT_SHAPE))
    gammas = parse_gammas(_pick(arg("gamma"), config, "gamma", DEFAULT_GAMMAS))
    depth_convention = _choice(_pick(arg("depth_convention"), config, "depth_convention",
                                     DEFAULT_DEPTH_CONVENTION), DEPTH_CONVENTIONS, "depth convention")
    shortcut = _choice(_pick(arg("shortcut"), config, "shortcut", DEFAULT_SHORTCUT),
                       tuple(p.value for p in ShortcutPolicy), "shortcut policy")
    fmt = _choice(_pick(arg("format"), config, "format", DEFAULT_FORMAT), FORMATS, "format")
    fc_depth = _choice(_pick(arg("fc_depth"), config, "fc_depth", DEFAULT_FC_DEPTH), SWITCH_VALUES, "fc depth")
    mac_convention = _choice(_pick(arg("mac_convention"), config, "mac_convention", DEFAULT_MAC_CONVENTION),
                             tuple(c.value for c in MacConvention), "mac convention")

    return AnalysisOptions(
        input_shape=shape,
        num_classes=_positive_int(_pick(arg("classes"), config, "classes", DEFAULT_NUM_CLASSES), "classes"),
        gammas=gammas,
        depth_convention=depth_convention,
        shortcut=ShortcutPolicy(shortcut),
        format=fmt,
        oracle=_flag(bool(arg("oracle")) or config.get("oracle", False), "oracle"),
        oracle_cap=_positive_int(_pick(arg("oracle_cap"), config, "oracle_cap", DEFAULT_ORACLE_CAP), "oracle cap"),
        count_fc=fc_depth == "on",
        mac_convention=MacConvention(mac_convention),
        approximate=_flag(bool(arg("approximate")) or config.get("approximate", False), "approximate"),
        max_path_count=_positive_int(_pick(arg("max_path_count"), config, "max_path_count",
                                           DEFAULT_MAX_PATH_COUNT), "max path count"),
        jobs=_positive_int(_pick(arg("jobs"), config, "jobs", DEFAULT_JOBS), "jobs"),
        per_node=_flag(bool(arg("per_node")) or config.get("per_node", False), "per_node"),
        accuracy=_pick(arg("accuracy"), config, "accuracy", None),
        weights=_pick(arg("weights"), config, "weights", None),
        expected=_pick(arg("expected"), config, "expected", None),
    )


def resolve_sources(args, config: RunConfig | None = None) -> list[Source]:
    config = config or RunConfig()
    cli_sources = getattr(args, "sources", None)
    if cli_sources:
        return list(cli_sources)
    return list(config.get("sources", []))
