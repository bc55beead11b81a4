import json

import pytest

from depth_analyzer.expectation_checker import (
    ExpectationError,
    Expectations,
    check_record,
    check_records,
    check_value,
    load_expectations,
)

RECORD = {"architecture": "resnet18", "nominal_layer": 18, "d_eff_general": 11.5, "params_M": 11.679912,
          "macs_G": 0.907036672}


@pytest.mark.parametrize("expected", [
    18, 18.0, "ANY", "TYPE:integer", "TYPE:number", "APPROX:18.5:0.03", "VALUE_GT:17", "VALUE_GTE:18",
    "VALUE_LT:19", "VALUE_LTE:18",
])
def test_passing_validators(expected):
    assert check_value(18, expected, "root.nominal_layer", RECORD) == []


@pytest.mark.parametrize("expected, fragment", [
    (19, "Value mismatch"),
    ("TYPE:string", "Type mismatch"),
    ("APPROX:20:0.05", "not within 5% of 20.0"),
    ("VALUE_GT:18", "not > 18.0"),
    ("VALUE_LT:18", "not < 18.0"),
])
def test_failing_validators(expected, fragment):
    found = check_value(18, expected, "root.nominal_layer", RECORD)
    assert len(found) == 1
    assert fragment in found[0]
    assert "root.nominal_layer" in found[0]


def test_ratio_validator_uses_other_field():
    assert check_value(11.5, "RATIO_LT:nominal_layer:0.7", "r.d", RECORD) == []
    assert check_value(17.5, "RATIO_LT:nominal_layer:0.7", "r.d", {"nominal_layer": 22})
    with pytest.raises(ExpectationError, match="unknown field"):
        check_value(1, "RATIO_LT:missing:0.7", "r.d", RECORD)


def test_malformed_validators_raise():
    with pytest.raises(ExpectationError):
        check_value(1, "APPROX:1", "p", RECORD)
    with pytest.raises(ExpectationError):
        check_value(1, "VALUE_GT:abc", "p", RECORD)


def test_check_record_reports_missing_keys():
    found = check_record(RECORD, {"flops_G": 1.0, "path_count": "ANY_OR_MISSING", "params_M": "APPROX:11.7:0.03"},
                         path="resnet18")
    assert found == ["Missing key 'resnet18.flops_G' in record."]


def test_check_records_logs_pass_and_fail(caplog):
    expectations = Expectations("demo", records={
        "resnet18": {"nominal_layer": 18, "d_eff_general": 12},
        "vgg16": {"nominal_layer": 16},
    })
    with caplog.at_level("INFO"):
        found = check_records({"resnet18": RECORD}, expectations)
    assert len(found) == 2
    assert "PASS resnet18.nominal_layer" in caplog.text
    assert "FAIL resnet18.d_eff_general" in caplog.text
    assert "No record for expected architecture 'vgg16'." in found


def test_load_expectations(tmp_path):
    path = tmp_path / "expected.json"
    path.write_text(json.dumps({"options": {"mac_convention": "half"},
                                "expected_records": {"vgg16": {"nominal_layer": 16}}}), encoding="utf-8")
    expectations = load_expectations(path)
    assert expectations.test_name == "expected.json"
    assert expectations.options == {"mac_convention": "half"}
    assert expectations.records == {"vgg16": {"nominal_layer": 16}}


@pytest.mark.parametrize("payload, message", [
    ({}, "expected_records"),
    ({"expected_records": {}, "options": {"jobs": 2}}, "may only set"),
    ({"expected_records": {"vgg16": 16}}, "must be an object"),
])
def test_bad_expectation_files(tmp_path, payload, message):
    path = tmp_path / "expected.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    with pytest.raises(ExpectationError, match=message):
        load_expectations(path)
