# depth_analyzer/expectation_checker.py
"""Checks analysis records against an expected-values file.

Expected values are literals or validator strings:
ANY, ANY_OR_MISSING, TYPE:<name>, APPROX:<value>:<rel>, VALUE_LT:<v>,
VALUE_LTE:<v>, VALUE_GT:<v>, VALUE_GTE:<v>, RATIO_LT:<field>:<factor>.
See schemas/expected_values_format.md.
"""
from __future__ import annotations

import json
import logging
import math
import operator
import os
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)

COMPARISONS = {
    "VALUE_LT": (operator.lt, "<"),
    "VALUE_LTE": (operator.le, "<="),
    "VALUE_GT": (operator.gt, ">"),
    "VALUE_GTE": (operator.ge, ">="),
}
TYPE_MAP = {"string": str, "number": (int, float), "integer": int}
OPTION_KEYS = {"mac_convention", "shortcut", "fc_depth", "input_shape", "classes"}


class ExpectationError(Exception):
    """Custom exception for unreadable or malformed expected-values files."""
    pass


@dataclass(frozen=True)
class Expectations:
    test_name: str
    options: dict = field(default_factory=dict)
    records: dict = field(default_factory=dict)  # architecture -> expected fields


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _number(text: str, validator: str, path: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ExpectationError(f"invalid number '{text}' for {validator} at '{path}'") from None


def check_value(received, expected, path: str, record: dict) -> list[str]:
    """Discrepancies for one field; `record` supplies the other fields for RATIO_LT."""
    if not isinstance(expected, str):
        if _is_number(expected) and _is_number(received):
            ok = math.isclose(received, expected, rel_tol=0.0, abs_tol=1e-12)
        else:
            ok = received == expected
        return [] if ok else [f"Value mismatch at '{path}'. Expected '{expected}', Got '{received}'."]

    if expected in ("ANY", "ANY_OR_MISSING"):
        return []
    if expected.startswith("TYPE:"):
        type_name = expected.split(":", 1)[1]
        if type_name not in TYPE_MAP:
            raise ExpectationError(f"invalid expected type '{type_name}' at '{path}'")
        if not isinstance(received, TYPE_MAP[type_name]) or isinstance(received, bool):
            return [f"Type mismatch at '{path}'. Expected {type_name}, Got {type(received).__name__}."]
        return []
    if expected.startswith("APPROX:"):
        parts = expected.split(":")
        if len(parts) != 3:
            raise ExpectationError(f"APPROX needs '<value>:<rel>' at '{path}'")
        target = _number(parts[1], "APPROX", path)
        rel = _number(parts[2], "APPROX", path)
        if not _is_number(received) or abs(received - target) > rel * abs(target):
            return [f"Value at '{path}' ('{received}') not within {rel:.0%} of {target}."]
        return []
    if expected.startswith("RATIO_LT:"):
        parts = expected.split(":")
        if len(parts) != 3:
            raise ExpectationError(f"RATIO_LT needs '<field>:<factor>' at '{path}'")
        other, factor = parts[1], _number(parts[2], "RATIO_LT", path)
        if other not in record:
            raise ExpectationError(f"RATIO_LT at '{path}' refers to unknown field '{other}'")
        bound = factor * record[other]
        if not (_is_number(received) and received < bound):
            return [f"Value at '{path}' ('{received}') not < {factor} x {other} ({bound})."]
        return []
    prefix = expected.split(":", 1)[0]
    if prefix in COMPARISONS and ":" in expected:
        compare, symbol = COMPARISONS[prefix]
        num = _number(expected.split(":", 1)[1], prefix, path)
        if not (_is_number(received) and compare(received, num)):
            return [f"Value at '{path}' ('{received}') not {symbol} {num}."]
        return []
    if received != expected:
        return [f"Value mismatch at '{path}'. Expected '{expected}', Got '{received}'."]
    return []


def check_record(record: dict, expected: dict, path: str = "root") -> list[str]:
    """Compares a record's numeric fields against expected literals/validators."""
    discrepancies = []
    for key, exp_val in expected.items():
        current_path = f"{path}.{key}"
        if key not in record:
            if exp_val != "ANY_OR_MISSING":
                discrepancies.append(f"Missing key '{current_path}' in record.")
            continue
        discrepancies.extend(check_value(record[key], exp_val, current_path, record))
    return discrepancies


def load_expectations(path) -> Expectations:
    if not os.path.exists(path):
        raise ExpectationError(f"expected-values file '{path}' not found")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ExpectationError(f"could not decode expected-values file '{path}': {e}") from e
    if not isinstance(data, dict) or not isinstance(data.get("expected_records"), dict):
        raise ExpectationError(f"'{path}' needs an 'expected_records' object")
    options = data.get("options", {})
    if not isinstance(options, dict) or set(options) - OPTION_KEYS:
        raise ExpectationError(f"'options' in '{path}' may only set: {', '.join(sorted(OPTION_KEYS))}")
    for name, fields in data["expected_records"].items():
        if not isinstance(fields, dict):
            raise ExpectationError(f"expected record '{name}' in '{path}' must be an object")
    logger.info("ExpectationChecker: loaded %d expected records from %s", len(data["expected_records"]), path)
    return Expectations(test_name=data.get("test_name", os.path.basename(str(path))),
                        options=options, records=data["expected_records"])


def check_records(records: dict, expectations: Expectations) -> list[str]:
    """Checks every expected architecture; returns discrepancies, logs PASS/FAIL per record."""
    discrepancies = []
    for name, expected in expectations.records.items():
        if name not in records:
            discrepancies.append(f"No record for expected architecture '{name}'.")
            continue
        found = check_record(records[name], expected, path=name)
        for key in expected:
            status = "FAIL" if any(f"'{name}.{key}'" in d for d in found) else "PASS"
            logger.info("ExpectationChecker: %s %s.%s", status, name, key)
        discrepancies.extend(found)
    summary = "PASSED" if not discrepancies else f"FAILED ({len(discrepancies)} discrepancies)"
    logger.info("ExpectationChecker: %s summary: %s", expectations.test_name, summary)
    return discrepancies
