"""AnalysisRecord plus its table, CSV and JSON renderings.

CSV output is fixed-column, LF-terminated and built only from exact
values rounded half-even, so repeated runs are byte-identical.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction

from .cost_metrics import CostReport, MacConvention
from .depth_metrics import DepthReport
from .grad_depth import WeightedDepthReport
from .number_utils import DEPTH_PLACES, to_decimal

RECORD_COLUMNS_HEAD = ("architecture", "nominal_layer", "nominal_module", "d_eff_general", "d_eff_family")
RECORD_COLUMNS_TAIL = ("params_M", "macs_G", "flops_G", "path_count", "l_min", "l_max")
CUSTOM_COLUMN = "d_eff_grad_custom"
TRADEOFF_COLUMNS = ("architecture", "macs_G", "params_M", "top1")
DEPTH_ACCURACY_COLUMNS = ("architecture", "nominal_layer", "d_eff_general", "top1")

CONVENTIONS_NOTE = ("MAC = one multiplication; bias adds parameters but no MACs; "
                    "FLOPs = 2 x MACs")


def gamma_column(gamma: float) -> str:
    return f"d_eff_grad_g{float(gamma)}"


@dataclass(frozen=True)
class AnalysisRecord:
    architecture: str
    nominal_layer: int
    nominal_module: int
    d_eff_general: Fraction
    d_eff_family: Fraction
    family: str
    d_eff_grad: tuple[tuple[float, float], ...]  # (gamma, depth) in sweep order
    params: int
    macs: int
    flops: int
    params_M: Decimal
    macs_G: Decimal
    flops_G: Decimal
    mac_convention: MacConvention
    path_count: int | float
    l_min: int
    l_max: int
    d_eff_grad_custom: float | None = None
    warnings: tuple[str, ...] = ()
    per_node: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_reports(cls, architecture: str, depth: DepthReport, grads: list[WeightedDepthReport],
                     costs: CostReport, custom: WeightedDepthReport | None = None,
                     warnings: tuple[str, ...] = ()) -> AnalysisRecord:
        return cls(
            architecture=architecture,
            nominal_layer=depth.nominal_layer,
            nominal_module=depth.nominal_module,
            d_eff_general=depth.d_eff_general,
            d_eff_family=depth.d_eff_family,
            family=depth.family,
            d_eff_grad=tuple((g.gamma, g.d_eff_grad) for g in grads),
            params=costs.params,
            macs=costs.macs,
            flops=costs.flops,
            params_M=costs.params_m,
            macs_G=costs.macs_g,
            flops_G=costs.flops_g,
            mac_convention=costs.convention,
            path_count=depth.path_count,
            l_min=depth.l_min,
            l_max=depth.l_max,
            d_eff_grad_custom=custom.d_eff_grad if custom is not None else None,
            warnings=tuple(depth.warnings) + tuple(warnings),
            per_node={n: (c.params, c.macs) for n, c in costs.per_node.items()},
        )

    def gammas(self) -> tuple[float, ...]:
        return tuple(g for g, _ in self.d_eff_grad)

    def rendered_fields(self) -> dict:
        """Column name to rendered string, in CSV column order."""
        row = {
            "architecture": self.architecture,
            "nominal_layer": str(self.nominal_layer),
            "nominal_module": str(self.nominal_module),
            "d_eff_general": str(to_decimal(self.d_eff_general, DEPTH_PLACES)),
            "d_eff_family": str(to_decimal(self.d_eff_family, DEPTH_PLACES)),
        }
        for gamma, depth in self.d_eff_grad:
            row[gamma_column(gamma)] = str(to_decimal(depth, DEPTH_PLACES))
        row.update({
            "params_M": str(self.params_M),
            "macs_G": str(self.macs_G),
            "flops_G": str(self.flops_G),
            "path_count": format_path_count(self.path_count),
            "l_min": str(self.l_min),
            "l_max": str(self.l_max),
        })
        if self.d_eff_grad_custom is not None:
            row[CUSTOM_COLUMN] = str(to_decimal(self.d_eff_grad_custom, DEPTH_PLACES))
        return row

    def numeric_fields(self) -> dict:
        """Unrounded numeric view used by the expectation checker."""
        factor = self.mac_convention.factor
        values = {
            "architecture": self.architecture,
            "family": self.family,
            "nominal_layer": self.nominal_layer,
            "nominal_module": self.nominal_module,
            "d_eff_general": float(self.d_eff_general),
            "d_eff_family": float(self.d_eff_family),
            "params_M": self.params / 1e6,
            "macs_G": float(self.macs * factor) / 1e9,
            "flops_G": float(self.flops * factor) / 1e9,
            "path_count": self.path_count,
            "l_min": self.l_min,
            "l_max": self.l_max,
        }
        for gamma, depth in self.d_eff_grad:
            values[gamma_column(gamma)] = depth
        if self.d_eff_grad_custom is not None:
            values[CUSTOM_COLUMN] = self.d_eff_grad_custom
        return values


def format_path_count(count) -> str:
    if isinstance(count, float):
        return f"{count:.6e}"
    return str(count)


def record_columns(gammas, custom: bool = False) -> list[str]:
    columns = list(RECORD_COLUMNS_HEAD) + [gamma_column(g) for g in gammas] + list(RECORD_COLUMNS_TAIL)
    if custom:
        columns.append(CUSTOM_COLUMN)
    return columns


def _write_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def render_csv(records: list[AnalysisRecord]) -> str:
    if not records:
        raise ValueError("no records to render")
    custom = any(r.d_eff_grad_custom is not None for r in records)
    columns = record_columns(records[0].gammas(), custom)
    rows = []
    for record in records:
        fields = record.rendered_fields()
        rows.append([fields.get(c, "") for c in columns])
    return _write_csv(columns, rows)


def _json_value(text: str):
    if text.lstrip("-").isdigit():
        return int(text)
    try:
        return float(text)
    except ValueError:
        return text


def record_to_dict(record: AnalysisRecord, depth_convention: str = "both", per_node: bool = False) -> dict:
    fields = record.rendered_fields()
    out = {}
    for key, text in fields.items():
        if key == "nominal_layer" and depth_convention == "module":
            continue
        if key == "nominal_module" and depth_convention == "layer":
            continue
        out[key] = text if key == "architecture" else _json_value(text)
    out["path_count"] = record.path_count
    out["family"] = record.family
    out["models"] = [f"attenuation({g})" for g in record.gammas()]
    out["mac_convention"] = record.mac_convention.value
    out["conventions"] = CONVENTIONS_NOTE
    out["warnings"] = list(record.warnings)
    if per_node:
        out["per_node"] = {n: {"params": p, "macs": m} for n, (p, m) in sorted(record.per_node.items())}
    return out


def render_json(records: list[AnalysisRecord], depth_convention: str = "both", per_node: bool = False) -> str:
    payload = [record_to_dict(r, depth_convention, per_node) for r in records]
    if len(payload) == 1:
        payload = payload[0]
    return json.dumps(payload, indent=2) + "\n"


def render_table(records: list[AnalysisRecord], depth_convention: str = "both", per_node: bool = False) -> str:
    lines = []
    for record in records:
        fields = record.rendered_fields()
        lines.append(f"Architecture: {record.architecture}")
        if depth_convention in ("layer", "both"):
            lines.append(f"  Nominal depth (layers):   {fields['nominal_layer']}")
        if depth_convention in ("module", "both"):
            lines.append(f"  Nominal depth (modules):  {fields['nominal_module']}")
        lines.append(f"  Effective depth:          {fields['d_eff_general']}")
        lines.append(f"  Family depth ({record.family}): {fields['d_eff_family']}")
        for gamma in record.gammas():
            lines.append(f"  Gradient depth g={float(gamma)}:  {fields[gamma_column(gamma)]}")
        if CUSTOM_COLUMN in fields:
            lines.append(f"  Gradient depth (custom):  {fields[CUSTOM_COLUMN]}")
        lines.append(f"  Paths: {fields['path_count']} (lengths {record.l_min}..{record.l_max})")
        lines.append(f"  Params: {fields['params_M']} M   MACs: {fields['macs_G']} G   "
                     f"FLOPs: {fields['flops_G']} G ({record.mac_convention.value} convention)")
        for warning in record.warnings:
            lines.append(f"  Warning: {warning}")
        if per_node:
            lines.append("  Per-node costs (params, full MACs):")
            width = max((len(n) for n in record.per_node), default=0)
            for node_id, (params, macs) in sorted(record.per_node.items()):
                if params or macs:
                    lines.append(f"    {node_id:<{width}}  {params:>12}  {macs:>15}")
        lines.append("")
    lines.append(f"# {CONVENTIONS_NOTE}")
    return "\n".join(lines) + "\n"


def render_records(records: list[AnalysisRecord], fmt: str, depth_convention: str = "both",
                   per_node: bool = False) -> str:
    if fmt == "csv":
        return render_csv(records)
    if fmt == "json":
        return render_json(records, depth_convention, per_node)
    return render_table(records, depth_convention, per_node)


def _top1(value: float) -> str:
    return f"{value:g}"


def render_tradeoff(rows: list[tuple[AnalysisRecord, float]]) -> str:
    """(record, top1) rows sorted by MACs ascending; ties keep input order."""
    ordered = sorted(rows, key=lambda row: row[0].macs)
    return _write_csv(TRADEOFF_COLUMNS, [
        [r.architecture, str(r.macs_G), str(r.params_M), _top1(top1)] for r, top1 in ordered
    ])


def render_depth_accuracy(rows: list[tuple[AnalysisRecord, float]]) -> str:
    ordered = sorted(rows, key=lambda row: (row[0].nominal_layer, row[0].architecture))
    return _write_csv(DEPTH_ACCURACY_COLUMNS, [
        [r.architecture, str(r.nominal_layer), str(to_decimal(r.d_eff_general, DEPTH_PLACES)), _top1(top1)]
        for r, top1 in ordered
    ])
