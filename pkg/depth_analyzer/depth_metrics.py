"""Nominal depth, path-length distributions and path-uniform effective depth.

A path is an Input->Output walk that picks exactly one predecessor at each
Add/Concat; its length is the number of weighted layers (Conv, and Fc
unless disabled) on it. The path polynomial collects the exact number of
paths per length, which is all the effective-depth formulas need.
"""
from __future__ import annotations

import enum
import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass
from fractions import Fraction

from .graph_core import (
    Add,
    Concat,
    Graph,
    Input,
    is_weighted,
    layer_weight,
    longest_path_value,
    longest_weighted_path,
    require_valid,
    topo_order,
)
from .number_utils import DEPTH_PLACES, to_decimal

logger = logging.getLogger(__name__)

DEFAULT_MAX_PATH_COUNT = 2**64 - 1
DEFAULT_ORACLE_CAP = 4096


class AnalysisError(Exception):
    """Base class for failures while analyzing a valid graph."""
    pass


class PathCountOverflowError(AnalysisError):
    def __init__(self, node_id: str, limit):
        self.node_id = node_id
        super().__init__(f"path count exceeds exact-integer capacity ({limit}) at node {node_id}")


class PathExplosionError(AnalysisError):
    def __init__(self, cap: int):
        self.cap = cap
        super().__init__(f"path explosion: > {cap} paths")


class FamilyAmbiguousError(AnalysisError):
    """Raised when a graph mixes residual and concatenation merges."""
    pass


class ModuleDetectionError(AnalysisError):
    """Raised when a Concat is not a fork-branches-concat module."""
    pass


class EmptyPolynomialError(AnalysisError, ValueError):
    pass


class DepthConvention(enum.Enum):
    LAYER = "layer"
    MODULE = "module"


class Family(enum.Enum):
    VGG = "VGG"
    RESNET = "ResNet"
    GOOGLENET = "GoogLeNet"


# --- Path polynomial ---

@dataclass(frozen=True)
class PathPolynomial:
    """Number of paths per length; counts are exact ints unless `exact` is False."""

    terms: tuple[tuple[int, int | float], ...]
    exact: bool = True

    @classmethod
    def from_mapping(cls, coeffs: Mapping[int, int | float], exact: bool = True) -> PathPolynomial:
        return cls(tuple(sorted((int(l), c) for l, c in coeffs.items() if c)), exact)

    @property
    def coeffs(self) -> dict[int, int | float]:
        return dict(self.terms)

    @property
    def support(self) -> list[int]:
        return [l for l, _ in self.terms]

    @property
    def path_count(self) -> int | float:
        return sum(c for _, c in self.terms)

    @property
    def l_min(self) -> int:
        self._require_terms()
        return self.terms[0][0]

    @property
    def l_max(self) -> int:
        self._require_terms()
        return self.terms[-1][0]

    def _require_terms(self):
        if not self.terms:
            raise EmptyPolynomialError("path polynomial is empty (no input-output paths)")

    def shift(self, by: int) -> PathPolynomial:
        return PathPolynomial(tuple((l + by, c) for l, c in self.terms), self.exact)

    def expand(self) -> list[int]:
        """Multiset of path lengths, ascending; only for exact polynomials."""
        if not self.exact:
            raise ValueError("cannot expand an approximate polynomial")
        return [l for l, c in self.terms for _ in range(c)]

    def __bool__(self):
        return bool(self.terms)


def path_polynomial(graph: Graph, count_fc: bool = True, exact: bool = True,
                    max_path_count: int = DEFAULT_MAX_PATH_COUNT) -> PathPolynomial:
    """Forward DP in topological order: weighted nodes shift by one, merges sum."""
    polys: dict[str, dict[int, int | float]] = {}
    for node_id in topo_order(graph):
        node = graph.nodes[node_id]
        preds = graph.predecessors(node_id)
        if isinstance(node, Input):
            current = {0: 1 if exact else 1.0}
        else:
            current = {}
            for pred in preds:
                for length, count in polys[pred].items():
                    current[length] = current.get(length, 0) + count
        if is_weighted(node, count_fc):
            current = {l + 1: c for l, c in current.items()}
        # The total bounds every coefficient.
        total = sum(current.values())
        if (exact and total > max_path_count) or (not exact and math.isinf(total)):
            raise PathCountOverflowError(node_id, max_path_count if exact else "float range")
        polys[node_id] = current
    return PathPolynomial.from_mapping(polys[graph.output_id], exact)


def effective_depth_general(poly: PathPolynomial) -> Fraction:
    """Mean path length over all paths, as an exact rational."""
    if not poly:
        raise EmptyPolynomialError("path polynomial is empty (no input-output paths)")
    total = sum(l * c for l, c in poly.terms)
    if poly.exact:
        return Fraction(total, poly.path_count)
    return Fraction(total / poly.path_count)


def enumerate_paths(graph: Graph, cap: int = DEFAULT_ORACLE_CAP, count_fc: bool = True) -> list[int]:
    """Explicit DFS over every Input->Output path; sorted path lengths."""
    if cap < 1:
        raise ValueError(f"cap must be positive, got {cap}")
    require_valid(graph)
    weight = layer_weight(count_fc)
    output_id = graph.output_id
    start = graph.input_id
    stack = [(start, weight(start, graph.nodes[start]))]
    lengths: list[int] = []
    while stack:
        node_id, length = stack.pop()
        if node_id == output_id:
            lengths.append(length)
            if len(lengths) > cap:
                raise PathExplosionError(cap)
            continue
        for succ in reversed(graph.successors(node_id)):
            stack.append((succ, length + weight(succ, graph.nodes[succ])))
    return sorted(lengths)


# --- Modules ---

@dataclass(frozen=True)
class InceptionModule:
    concat_id: str
    fork_id: str
    branches: tuple[tuple[str, ...], ...]  # interior node ids, fork side first

    @property
    def interior(self) -> frozenset[str]:
        return frozenset(n for branch in self.branches for n in branch)

    def branch_depths(self, graph: Graph, count_fc: bool = True) -> tuple[int, ...]:
        return tuple(sum(1 for n in branch if is_weighted(graph.nodes[n], count_fc)) for branch in self.branches)

    def mean_depth(self, graph: Graph, count_fc: bool = True) -> Fraction:
        depths = self.branch_depths(graph, count_fc)
        return Fraction(sum(depths), len(depths))


def detect_modules(graph: Graph) -> tuple[InceptionModule, ...]:
    """Finds fork -> parallel chains -> Concat modules; any other Concat is rejected."""
    require_valid(graph)
    modules = []
    for concat_id in graph.ids_of(Concat):
        preds = graph.predecessors(concat_id)
        forks = set()
        branches = []
        for pred in preds:
            chain = []
            cur = pred
            while (not isinstance(graph.nodes[cur], (Input, Add, Concat))
                   and len(graph.successors(cur)) == 1
                   and len(graph.predecessors(cur)) == 1):
                chain.append(cur)
                cur = graph.predecessors(cur)[0]
            forks.add(cur)
            branches.append(tuple(reversed(chain)))
        fork = next(iter(forks))
        if len(forks) != 1 or len(graph.successors(fork)) != len(preds):
            raise ModuleDetectionError(
                f"concat {concat_id} is not a fork-branch module (branches start at {', '.join(sorted(forks))})")
        modules.append(InceptionModule(concat_id, fork, tuple(branches)))
    return tuple(modules)


# --- Nominal depth ---

@dataclass(frozen=True)
class NominalDepth:
    value: int
    convention: DepthConvention
    fell_back: bool = False

    def __int__(self):
        return self.value


def nominal_depth(graph: Graph, convention: DepthConvention = DepthConvention.LAYER,
                  count_fc: bool = True) -> NominalDepth:
    """Weighted layers on the longest path; the module convention counts each module once."""
    layer_depth = longest_weighted_path(graph, layer_weight(count_fc))
    if convention is DepthConvention.LAYER:
        return NominalDepth(layer_depth, convention)

    modules = detect_modules(graph)
    if not modules:
        logger.info("DepthMetrics: '%s' has no concat modules; module depth falls back to layer count",
                    graph.name)
        return NominalDepth(layer_depth, convention, fell_back=True)
    interior = frozenset().union(*(m.interior for m in modules))
    concat_ids = {m.concat_id for m in modules}

    def module_weight(node_id, node):
        if node_id in concat_ids:
            return 1
        if node_id in interior:
            return 0
        return 1 if is_weighted(node, count_fc) else 0

    return NominalDepth(longest_weighted_path(graph, module_weight), convention)


# --- Family formulas ---

def detect_family(graph: Graph) -> Family:
    has_add = bool(graph.ids_of(Add))
    has_concat = bool(graph.ids_of(Concat))
    if has_add and has_concat:
        raise FamilyAmbiguousError(f"family ambiguous: '{graph.name}' mixes add and concat merges")
    if has_concat:
        return Family.GOOGLENET
    if has_add:
        return Family.RESNET
    return Family.VGG


@dataclass(frozen=True)
class FamilyDepth:
    family: Family
    value: Fraction

    @property
    def decimal(self):
        return to_decimal(self.value, DEPTH_PLACES)


def effective_depth_family(graph: Graph, count_fc: bool = True, poly: PathPolynomial | None = None) -> FamilyDepth:
    """Closed-form effective depth for the detected family.

    VGG: nominal depth. ResNet: midpoint of the shortest and longest path.
    GoogLeNet: mean branch depth per module plus the weighted layers outside
    modules along the longest path.
    """
    family = detect_family(graph)
    if family is Family.VGG:
        return FamilyDepth(family, Fraction(longest_weighted_path(graph, layer_weight(count_fc))))
    if family is Family.RESNET:
        poly = poly if poly is not None else path_polynomial(graph, count_fc)
        return FamilyDepth(family, Fraction(poly.l_min + poly.l_max, 2))

    modules = detect_modules(graph)
    means = {m.concat_id: m.mean_depth(graph, count_fc) for m in modules}
    interior = frozenset().union(*(m.interior for m in modules))

    def module_weight(node_id, node):
        if node_id in means:
            return means[node_id]
        if node_id in interior:
            return Fraction(0)
        return Fraction(1 if is_weighted(node, count_fc) else 0)

    return FamilyDepth(family, longest_path_value(graph, module_weight))


# --- Report ---

@dataclass(frozen=True)
class DepthReport:
    nominal_layer: int
    nominal_module: int
    d_eff_general: Fraction
    d_eff_family: Fraction
    family: str
    path_count: int | float
    l_min: int
    l_max: int
    polynomial: PathPolynomial
    warnings: tuple[str, ...] = ()

    @property
    def d_eff_general_decimal(self):
        return to_decimal(self.d_eff_general, DEPTH_PLACES)

    @property
    def d_eff_family_decimal(self):
        return to_decimal(self.d_eff_family, DEPTH_PLACES)


def analyze_depth(graph: Graph, count_fc: bool = True, exact: bool = True,
                  max_path_count: int = DEFAULT_MAX_PATH_COUNT) -> DepthReport:
    """All depth metrics for one graph; inapplicable conventions fall back with a warning."""
    warnings = []
    poly = path_polynomial(graph, count_fc, exact, max_path_count)
    nominal_layer = nominal_depth(graph, DepthConvention.LAYER, count_fc).value

    try:
        module = nominal_depth(graph, DepthConvention.MODULE, count_fc)
        nominal_module = module.value
        if module.fell_back:
            warnings.append("module depth: no concat modules, layer count used")
    except ModuleDetectionError as e:
        logger.warning("DepthMetrics: %s", e)
        nominal_module = nominal_layer
        warnings.append(f"module depth: {e}; layer count used")

    d_eff_general = effective_depth_general(poly)
    try:
        family_depth = effective_depth_family(graph, count_fc, poly)
        d_eff_family, family = family_depth.value, family_depth.family.value
    except (FamilyAmbiguousError, ModuleDetectionError) as e:
        logger.warning("DepthMetrics: %s", e)
        d_eff_family, family = d_eff_general, "ambiguous"
        warnings.append(f"family depth: {e}; general effective depth used")

    return DepthReport(
        nominal_layer=nominal_layer,
        nominal_module=nominal_module,
        d_eff_general=d_eff_general,
        d_eff_family=d_eff_family,
        family=family,
        path_count=poly.path_count,
        l_min=poly.l_min,
        l_max=poly.l_max,
        polynomial=poly,
        warnings=tuple(warnings),
    )
