"""Parameter, MAC and FLOP accounting.

Only Conv and Fc nodes cost anything: pooling, merges, padding shortcuts
and the (unmodelled) batch-norm/activation layers are free. One MAC is one
multiplication, so bias adds parameters but no MACs; one MAC is two FLOPs.
"""
from __future__ import annotations

import enum
import logging
from collections.abc import Mapping
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType

from .graph_core import Conv, Fc, Graph, infer_shapes, input_features
from .number_utils import scaled

logger = logging.getLogger(__name__)

MEGA = 10**6
GIGA = 10**9
FLOPS_PER_MAC = 2


class MacConvention(enum.Enum):
    """How MAC/FLOP totals are rendered; per-node counts are always full."""

    FULL = "full"
    HALF = "half"

    @property
    def factor(self) -> Fraction:
        return Fraction(1) if self is MacConvention.FULL else Fraction(1, 2)


@dataclass(frozen=True)
class NodeCost:
    params: int
    macs: int

    @property
    def flops(self) -> int:
        return FLOPS_PER_MAC * self.macs


def count_params(graph: Graph) -> dict[str, int]:
    """Per-node parameters: weights plus bias for Conv/Fc, zero elsewhere."""
    shapes = infer_shapes(graph)
    params = {}
    for node_id, node in graph.nodes.items():
        if isinstance(node, Conv):
            c_in = shapes[graph.predecessors(node_id)[0]][0]
            count = node.kernel_h * node.kernel_w * c_in * node.out_channels
            params[node_id] = count + (node.out_channels if node.bias else 0)
        elif isinstance(node, Fc):
            f_in = input_features(shapes[graph.predecessors(node_id)[0]])
            params[node_id] = f_in * node.out_features + (node.out_features if node.bias else 0)
        else:
            params[node_id] = 0
    return params


def count_macs(graph: Graph) -> dict[str, int]:
    """Per-node multiply-accumulates: one per weight use per output position."""
    shapes = infer_shapes(graph)
    macs = {}
    for node_id, node in graph.nodes.items():
        if isinstance(node, Conv):
            c_in = shapes[graph.predecessors(node_id)[0]][0]
            _, h_out, w_out = shapes[node_id]
            macs[node_id] = node.kernel_h * node.kernel_w * c_in * node.out_channels * h_out * w_out
        elif isinstance(node, Fc):
            macs[node_id] = input_features(shapes[graph.predecessors(node_id)[0]]) * node.out_features
        else:
            macs[node_id] = 0
    return macs


@dataclass(frozen=True)
class CostReport:
    per_node: Mapping[str, NodeCost]
    convention: MacConvention = MacConvention.HALF

    @property
    def params(self) -> int:
        return sum(c.params for c in self.per_node.values())

    @property
    def macs(self) -> int:
        return sum(c.macs for c in self.per_node.values())

    @property
    def flops(self) -> int:
        return sum(c.flops for c in self.per_node.values())

    @property
    def params_m(self):
        return scaled(self.params, MEGA)

    @property
    def macs_g(self):
        return scaled(self.macs * self.convention.factor, GIGA)

    @property
    def flops_g(self):
        return scaled(self.flops * self.convention.factor, GIGA)


def cost_report(graph: Graph, convention: MacConvention = MacConvention.HALF) -> CostReport:
    params = count_params(graph)
    macs = count_macs(graph)
    per_node = {n: NodeCost(params[n], macs[n]) for n in sorted(graph.nodes)}
    report = CostReport(MappingProxyType(per_node), convention)
    logger.info("CostMetrics: '%s' params=%d macs=%d (%s convention)",
                graph.name, report.params, report.macs, convention.value)
    return report
