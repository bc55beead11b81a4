"""Computation-graph model for convolutional networks.

Graphs are immutable DAGs of typed nodes with one Input and one Output.
Everything downstream (depth, costs, serialization) goes through the
queries defined here: validation, deterministic topological order,
shape inference and weighted longest paths.
"""
from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Union

import networkx as nx

logger = logging.getLogger(__name__)

DEFAULT_INPUT_ID = "input"
DEFAULT_OUTPUT_ID = "output"
DEFAULT_INPUT_SHAPE = (3, 224, 224)

Shape = tuple[int, ...]


class GraphValidationError(Exception):
    """Raised when an operation needs a valid graph and gets an invalid one."""

    def __init__(self, violations):
        self.violations = tuple(violations)
        first = self.violations[0] if self.violations else None
        message = str(first) if first else "graph is invalid"
        if len(self.violations) > 1:
            message += f" (+{len(self.violations) - 1} more)"
        super().__init__(message)


class ShapeInferenceError(Exception):
    """Custom exception for shape inference failures."""

    def __init__(self, node_id: str, message: str):
        self.node_id = node_id
        super().__init__(message)


# --- Node kinds ---

@dataclass(frozen=True)
class Input:
    keyword = "input"


@dataclass(frozen=True)
class Conv:
    kernel_h: int
    kernel_w: int
    out_channels: int
    stride: int = 1
    padding: int = 0
    bias: bool = True
    keyword = "conv"

    def __post_init__(self):
        _require_positive("kernel_h", self.kernel_h)
        _require_positive("kernel_w", self.kernel_w)
        _require_positive("stride", self.stride)
        _require_positive("out_channels", self.out_channels)
        _require_nonneg("padding", self.padding)


@dataclass(frozen=True)
class Fc:
    out_features: int
    bias: bool = True
    keyword = "fc"

    def __post_init__(self):
        _require_positive("out_features", self.out_features)


@dataclass(frozen=True)
class MaxPool:
    kernel: int
    stride: int = 1
    padding: int = 0
    keyword = "maxpool"

    def __post_init__(self):
        _require_positive("kernel", self.kernel)
        _require_positive("stride", self.stride)
        _require_nonneg("padding", self.padding)


@dataclass(frozen=True)
class AvgPool:
    kernel: int
    stride: int = 1
    padding: int = 0
    keyword = "avgpool"

    def __post_init__(self):
        _require_positive("kernel", self.kernel)
        _require_positive("stride", self.stride)
        _require_nonneg("padding", self.padding)


@dataclass(frozen=True)
class GlobalAvgPool:
    keyword = "gap"


@dataclass(frozen=True)
class ShortcutPad:
    """Parameter-free residual shortcut: subsample by stride, zero-pad channels."""

    out_channels: int
    stride: int = 1
    keyword = "pad"

    def __post_init__(self):
        _require_positive("out_channels", self.out_channels)
        _require_positive("stride", self.stride)


@dataclass(frozen=True)
class Add:
    keyword = "add"


@dataclass(frozen=True)
class Concat:
    keyword = "concat"


@dataclass(frozen=True)
class Output:
    keyword = "output"


NodeKind = Union[Input, Conv, Fc, MaxPool, AvgPool, GlobalAvgPool, ShortcutPad, Add, Concat, Output]

WEIGHTED_KINDS = (Conv, Fc)
MERGE_KINDS = (Add, Concat)
SINGLE_INPUT_KINDS = (Conv, Fc, MaxPool, AvgPool, GlobalAvgPool, ShortcutPad, Output)


def _require_positive(name, value):
    if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")


def _require_nonneg(name, value):
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise ValueError(f"{name} must be a non-negative integer, got {value!r}")


def is_weighted(node: NodeKind, count_fc: bool = True) -> bool:
    """True for the nodes that count as weighted transformations."""
    if isinstance(node, Conv):
        return True
    return count_fc and isinstance(node, Fc)


# --- Graph ---

@dataclass(frozen=True)
class Graph:
    nodes: Mapping[str, NodeKind]
    edges: tuple[tuple[str, str], ...]
    input_shape: Shape = DEFAULT_INPUT_SHAPE
    name: str = "network"

    def __post_init__(self):
        object.__setattr__(self, "nodes", MappingProxyType(dict(self.nodes)))
        object.__setattr__(self, "edges", tuple((str(u), str(v)) for u, v in self.edges))
        object.__setattr__(self, "input_shape", tuple(self.input_shape))
        preds: dict[str, list[str]] = {}
        succs: dict[str, list[str]] = {}
        for u, v in self.edges:
            preds.setdefault(v, []).append(u)
            succs.setdefault(u, []).append(v)
        object.__setattr__(self, "_preds", {n: tuple(ps) for n, ps in preds.items()})
        object.__setattr__(self, "_succs", {n: tuple(sorted(ss)) for n, ss in succs.items()})

    def predecessors(self, node_id: str) -> list[str]:
        # Edge order is significant: it fixes Concat channel order and serialization.
        return list(self._preds.get(node_id, ()))

    def successors(self, node_id: str) -> list[str]:
        return list(self._succs.get(node_id, ()))

    @cached_property
    def validation(self) -> ValidationReport:
        """Validation report, computed once per graph."""
        return validate(self)

    def ids_of(self, kind) -> list[str]:
        return sorted(n for n, node in self.nodes.items() if isinstance(node, kind))

    @property
    def input_id(self) -> str | None:
        ids = self.ids_of(Input)
        return ids[0] if len(ids) == 1 else None

    @property
    def output_id(self) -> str | None:
        ids = self.ids_of(Output)
        return ids[0] if len(ids) == 1 else None

    def to_networkx(self) -> nx.DiGraph:
        """Frozen networkx view of the graph (node attribute `kind`)."""
        return self._nx_view

    @cached_property
    def _nx_view(self) -> nx.DiGraph:
        g = nx.DiGraph()
        for node_id, node in self.nodes.items():
            g.add_node(node_id, kind=node)
        g.add_edges_from(self.edges)
        return nx.freeze(g)


class GraphBuilder:
    """Staging area for graph construction; `build()` freezes the result."""

    def __init__(self, name: str = "network", input_shape: Shape = DEFAULT_INPUT_SHAPE):
        self.name = name
        self.input_shape = tuple(input_shape)
        self._nodes: dict[str, NodeKind] = {}
        self._edges: list[tuple[str, str]] = []

    def __contains__(self, node_id: str) -> bool:
        return node_id in self._nodes

    def add(self, node_id: str, node: NodeKind, *inputs: str) -> str:
        if node_id in self._nodes:
            raise ValueError(f"duplicate node id '{node_id}'")
        self._nodes[node_id] = node
        for src in inputs:
            self._edges.append((src, node_id))
        return node_id

    def build(self) -> Graph:
        return Graph(nodes=self._nodes, edges=tuple(self._edges),
                     input_shape=self.input_shape, name=self.name)


# --- Validation ---

@dataclass(frozen=True)
class Violation:
    node_id: str | None
    rule: str
    message: str

    def __str__(self):
        where = f"node {self.node_id}: " if self.node_id is not None else ""
        return f"{self.rule}: {where}{self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def rules(self) -> list[str]:
        return [v.rule for v in self.violations]


def validate(graph: Graph) -> ValidationReport:
    """Checks every Graph invariant; violations are returned, never raised."""
    violations: list[Violation] = []

    for u, v in graph.edges:
        for end in (u, v):
            if end not in graph.nodes:
                violations.append(Violation(end, "unknown node", f"edge ({u}, {v}) references undeclared node"))
    edge_counts = Counter(graph.edges)
    for u, v in sorted(e for e, n in edge_counts.items() if n > 1):
        violations.append(Violation(v, "duplicate edge", f"edge ({u}, {v}) declared more than once"))
    if violations:
        return ValidationReport(tuple(violations))

    inputs = graph.ids_of(Input)
    outputs = graph.ids_of(Output)
    if len(inputs) != 1:
        violations.append(Violation(None, "single input", f"expected exactly one Input node, found {len(inputs)}"))
    if len(outputs) != 1:
        violations.append(Violation(None, "single output", f"expected exactly one Output node, found {len(outputs)}"))

    g = graph.to_networkx()
    try:
        cycle = nx.find_cycle(g)
    except nx.NetworkXNoCycle:
        cycle = None
    if cycle:
        members = sorted({u for u, _ in cycle})
        violations.append(Violation(members[0], "acyclicity", f"cycle through {', '.join(members)}"))
        return ValidationReport(tuple(violations))

    for node_id in sorted(graph.nodes):
        node = graph.nodes[node_id]
        indeg, outdeg = g.in_degree(node_id), g.out_degree(node_id)
        if isinstance(node, Input) and indeg:
            violations.append(Violation(node_id, "arity", "Input must have no predecessors"))
        elif isinstance(node, SINGLE_INPUT_KINDS) and indeg != 1:
            violations.append(Violation(node_id, "arity", f"{node.keyword} needs exactly one predecessor, has {indeg}"))
        elif isinstance(node, MERGE_KINDS) and indeg < 2:
            violations.append(Violation(node_id, "arity", f"{node.keyword} needs at least two predecessors, has {indeg}"))
        if isinstance(node, Output) and outdeg:
            violations.append(Violation(node_id, "arity", "Output must have no successors"))

    if len(inputs) == 1 and len(outputs) == 1:
        on_path = (nx.descendants(g, inputs[0]) | {inputs[0]}) & (nx.ancestors(g, outputs[0]) | {outputs[0]})
        for node_id in sorted(set(graph.nodes) - on_path):
            violations.append(Violation(node_id, "reachability", "node lies on no input-output path"))

    if violations:
        return ValidationReport(tuple(violations))

    _, shape_violations = _infer_shapes(graph, _topo_order_unchecked(graph))
    violations.extend(shape_violations)
    return ValidationReport(tuple(violations))


def require_valid(graph: Graph) -> None:
    report = graph.validation
    if not report.ok:
        raise GraphValidationError(report.violations)


# --- Ordering ---

def _topo_order_unchecked(graph: Graph) -> list[str]:
    try:
        return list(nx.lexicographical_topological_sort(graph.to_networkx()))
    except nx.NetworkXUnfeasible as e:
        raise GraphValidationError([Violation(None, "acyclicity", str(e))]) from e


def topo_order(graph: Graph) -> list[str]:
    """Deterministic topological order; ties broken by lexicographic node id."""
    require_valid(graph)
    return _topo_order_unchecked(graph)


# --- Shapes ---

def _window(size: int, kernel: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - kernel) // stride + 1


def _infer_shapes(graph: Graph, order: Iterable[str]) -> tuple[dict[str, Shape], list[Violation]]:
    shapes: dict[str, Shape] = {}
    violations: list[Violation] = []

    for node_id in order:
        node = graph.nodes[node_id]
        preds = graph.predecessors(node_id)
        if any(p not in shapes for p in preds):
            # An upstream node already failed; its violation is reported.
            continue
        in_shapes = [shapes[p] for p in preds]

        if isinstance(node, Input):
            shape = tuple(graph.input_shape)
        elif isinstance(node, Conv):
            if len(in_shapes[0]) != 3:
                violations.append(Violation(node_id, "rank mismatch", "conv needs a (channels, height, width) input"))
                continue
            _, h, w = in_shapes[0]
            shape = (node.out_channels,
                     _window(h, node.kernel_h, node.stride, node.padding),
                     _window(w, node.kernel_w, node.stride, node.padding))
        elif isinstance(node, (MaxPool, AvgPool)):
            if len(in_shapes[0]) != 3:
                violations.append(Violation(node_id, "rank mismatch", f"{node.keyword} needs a spatial input"))
                continue
            c, h, w = in_shapes[0]
            shape = (c, _window(h, node.kernel, node.stride, node.padding),
                     _window(w, node.kernel, node.stride, node.padding))
        elif isinstance(node, GlobalAvgPool):
            if len(in_shapes[0]) != 3:
                violations.append(Violation(node_id, "rank mismatch", "gap needs a spatial input"))
                continue
            shape = (in_shapes[0][0],)
        elif isinstance(node, ShortcutPad):
            if len(in_shapes[0]) != 3:
                violations.append(Violation(node_id, "rank mismatch", "pad needs a spatial input"))
                continue
            c, h, w = in_shapes[0]
            if node.out_channels < c:
                violations.append(Violation(node_id, "pad channel shrink",
                                            f"pad cannot reduce {c} channels to {node.out_channels}"))
                continue
            shape = (node.out_channels, _window(h, 1, node.stride, 0), _window(w, 1, node.stride, 0))
        elif isinstance(node, Fc):
            shape = (node.out_features,)
        elif isinstance(node, Add):
            if len(set(in_shapes)) != 1:
                detail = ", ".join(f"{p}={s}" for p, s in zip(preds, in_shapes))
                violations.append(Violation(node_id, "add shape mismatch", detail))
                continue
            shape = in_shapes[0]
        elif isinstance(node, Concat):
            if len({len(s) for s in in_shapes}) != 1:
                violations.append(Violation(node_id, "rank mismatch", "concat inputs mix spatial and flat shapes"))
                continue
            if len({s[1:] for s in in_shapes}) != 1:
                detail = ", ".join(f"{p}={s}" for p, s in zip(preds, in_shapes))
                violations.append(Violation(node_id, "concat spatial mismatch", detail))
                continue
            shape = (sum(s[0] for s in in_shapes),) + in_shapes[0][1:]
        elif isinstance(node, Output):
            shape = in_shapes[0]
        else:
            violations.append(Violation(node_id, "unknown kind", f"unsupported node {node!r}"))
            continue

        if any(d < 1 for d in shape):
            violations.append(Violation(node_id, "shape underflow", f"shape underflow at node {node_id}: {shape}"))
            continue
        shapes[node_id] = shape

    return shapes, violations


def infer_shapes(graph: Graph) -> dict[str, Shape]:
    """Shape of every node's output; flat shapes are (features,)."""
    report = graph.validation
    for violation in report.violations:
        if violation.rule == "shape underflow":
            raise ShapeInferenceError(violation.node_id, violation.message)
    if not report.ok:
        raise GraphValidationError(report.violations)
    shapes, _ = _infer_shapes(graph, _topo_order_unchecked(graph))
    logger.debug("ShapeInference: %d shapes inferred for '%s'", len(shapes), graph.name)
    return shapes


def input_features(shape: Shape) -> int:
    """Flattened feature count fed to an Fc node."""
    total = 1
    for d in shape:
        total *= d
    return total


# --- Paths ---

def longest_weighted_path(graph: Graph, weight: Callable[[str, NodeKind], int]) -> int:
    """Maximum summed node weight over all Input->Output paths (DAG DP)."""
    def checked(node_id, node):
        w = weight(node_id, node)
        if isinstance(w, bool) or not isinstance(w, int) or w < 0:
            raise ValueError(f"weight for node {node_id} must be a non-negative integer, got {w!r}")
        return w

    return longest_path_value(graph, checked)


def longest_path_value(graph: Graph, weight: Callable[[str, NodeKind], object]):
    """Same DP as longest_weighted_path for any ordered numeric weight (e.g. Fraction)."""
    order = topo_order(graph)
    best = {}
    for node_id in order:
        preds = graph.predecessors(node_id)
        incoming = max(best[p] for p in preds) if preds else 0
        best[node_id] = incoming + weight(node_id, graph.nodes[node_id])
    return best[graph.output_id]


def layer_weight(count_fc: bool = True) -> Callable[[str, NodeKind], int]:
    """Weight function: 1 on weighted transformations, 0 elsewhere."""
    return lambda _node_id, node: 1 if is_weighted(node, count_fc) else 0
