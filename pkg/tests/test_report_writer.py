import csv
import io
import json

import pytest

from depth_analyzer.cost_metrics import MacConvention, cost_report
from depth_analyzer.depth_metrics import analyze_depth
from depth_analyzer.grad_depth import gamma_sweep, gradient_weighted_depth_custom
from depth_analyzer.report_writer import (
    AnalysisRecord,
    gamma_column,
    record_columns,
    render_csv,
    render_depth_accuracy,
    render_json,
    render_table,
    render_tradeoff,
)

HEADER = ("architecture,nominal_layer,nominal_module,d_eff_general,d_eff_family,d_eff_grad_g1.0,"
          "d_eff_grad_g0.9,d_eff_grad_g0.7,d_eff_grad_g0.5,params_M,macs_G,flops_G,path_count,l_min,l_max")


def make_record(graph, name=None, convention=MacConvention.HALF, weights=None):
    depth = analyze_depth(graph)
    custom = gradient_weighted_depth_custom(depth.polynomial, weights) if weights else None
    return AnalysisRecord.from_reports(name or graph.name, depth, gamma_sweep(depth.polynomial),
                                       cost_report(graph, convention), custom)


@pytest.fixture(scope="module")
def records(builtin_graphs):
    return {name: make_record(graph) for name, graph in builtin_graphs.items()}


def test_fixed_header_and_row(records):
    text = render_csv([records["vgg16"]])
    lines = text.split("\n")
    assert lines[0] == HEADER
    assert lines[1] == "vgg16,16,16,16.00,16.00,16.00,16.00,16.00,16.00,138.4,7.7,15.5,1,16,16"
    assert text.endswith("\n") and "\r" not in text


def test_resnet_row_values(records):
    row = next(csv.DictReader(io.StringIO(render_csv([records["resnet18"]]))))
    assert row["d_eff_general"] == "11.50"
    assert row["d_eff_family"] == "11.50"
    assert row["path_count"] == "256"
    assert (row["l_min"], row["l_max"]) == ("5", "18")
    assert row["params_M"] == "11.7"


def test_gamma_columns_follow_the_sweep():
    assert gamma_column(1) == "d_eff_grad_g1.0"
    assert record_columns((0.25,), custom=True)[5:7] == ["d_eff_grad_g0.25", "params_M"]
    assert record_columns((0.25,), custom=True)[-1] == "d_eff_grad_custom"


def test_custom_column_is_appended(toy_residual):
    record = make_record(toy_residual, weights={2: 1, 4: 1, 6: 1, 8: 1})
    header, row = render_csv([record]).splitlines()
    assert header == HEADER + ",d_eff_grad_custom"
    assert row.endswith(",8,2,8,5.00")


def test_csv_is_byte_stable(records):
    ordered = [records[n] for n in ("vgg11", "resnet50", "googlenet")]
    assert render_csv(ordered) == render_csv(ordered)
    assert [line.split(",")[0] for line in render_csv(ordered).splitlines()[1:]] == ["vgg11", "resnet50", "googlenet"]


def test_json_carries_labels_and_warnings(records):
    payload = json.loads(render_json([records["resnet50"]], per_node=True))
    assert payload["architecture"] == "resnet50"
    assert payload["d_eff_general"] == 28.0
    assert payload["path_count"] == 65536
    assert payload["models"] == ["attenuation(1.0)", "attenuation(0.9)", "attenuation(0.7)", "attenuation(0.5)"]
    assert payload["warnings"] == ["module depth: no concat modules, layer count used"]
    assert payload["per_node"]["fc"] == {"params": 2048 * 1000 + 1000, "macs": 2048 * 1000}
    assert "bias adds parameters but no MACs" in payload["conventions"]


def test_json_depth_convention_selects_fields(records):
    layer_only = json.loads(render_json([records["googlenet"]], depth_convention="layer"))
    assert "nominal_module" not in layer_only
    module_only = json.loads(render_json([records["googlenet"]], depth_convention="module"))
    assert module_only["nominal_module"] == 13
    assert "nominal_layer" not in module_only


def test_table_rendering(records):
    text = render_table([records["googlenet"]])
    assert "Architecture: googlenet" in text
    assert "Nominal depth (modules):  13" in text
    assert "Family depth (GoogLeNet): 17.50" in text
    assert "Paths: 262144 (lengths 13..22)" in text


def test_conventions_render_totals(builtin_graphs, records):
    assert str(records["resnet50"].macs_G) == "2.0"
    assert records["resnet50"].numeric_fields()["macs_G"] == pytest.approx(2.044592128)
    full = make_record(builtin_graphs["resnet50"], convention=MacConvention.FULL)
    assert str(full.macs_G) == "4.1"
    assert full.numeric_fields()["macs_G"] == pytest.approx(4.089184256)
    assert full.macs == records["resnet50"].macs


def test_tradeoff_sorted_by_macs(records):
    rows = [(records["vgg16"], 71.5), (records["resnet50"], 76.1), (records["googlenet"], 72.4)]
    lines = render_tradeoff(rows).splitlines()
    assert lines[0] == "architecture,macs_G,params_M,top1"
    assert [line.split(",")[0] for line in lines[1:]] == ["googlenet", "resnet50", "vgg16"]
    assert lines[2] == "resnet50,2.0,25.5,76.1"


def test_depth_accuracy_sorted_by_nominal_then_name(records):
    rows = [(records[n], 70.0) for n in ("resnet50", "vgg16", "googlenet", "resnet18")]
    lines = render_depth_accuracy(rows).splitlines()
    assert lines[0] == "architecture,nominal_layer,d_eff_general,top1"
    assert lines[1:] == ["vgg16,16,16.00,70", "resnet18,18,11.50,70", "googlenet,22,17.50,70",
                         "resnet50,50,28.00,70"]
