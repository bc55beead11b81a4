import pytest

from depth_analyzer.arch_builders import BUILTIN_ARCHITECTURES
from depth_analyzer.reference_data import (
    SHIPPED_ACCURACY_FILE,
    ReferenceDataError,
    load_custom_weights,
    load_reference_accuracy,
)
from conftest import TOY_WEIGHTS


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_shipped_accuracy_table():
    table = load_reference_accuracy(SHIPPED_ACCURACY_FILE)
    assert len(table) == 7
    assert sorted(table.names()) == sorted(BUILTIN_ARCHITECTURES)
    assert table.top1("vgg16") == 71.5
    assert table.top1("googlenet") == 72.4
    assert table.top1("alexnet") is None


def test_shipped_accuracy_is_marked_as_transcribed():
    header = [line for line in SHIPPED_ACCURACY_FILE.read_text(encoding="utf-8").splitlines()
              if line.startswith("#")]
    text = " ".join(header)
    assert "transcribed by hand" in text
    assert "reproduction_targets.json" in text
    assert "never computes" in text


def test_accepts_comments_and_whitespace(tmp_path):
    table = load_reference_accuracy(write(tmp_path, "# note\narchitecture, top1\nvgg16, 71.5\n\n"))
    assert table.rows == (("vgg16", 71.5),)


def test_empty_file_gives_empty_table(tmp_path):
    assert len(load_reference_accuracy(write(tmp_path, ""))) == 0


@pytest.mark.parametrize("text, message, line", [
    ("architecture,top1\nx,101\n", "out of range", 2),
    ("architecture,top1\nx,-1\n", "out of range", 2),
    ("architecture,top1\nx,abc\n", "not a number", 2),
    ("architecture,top1\nx,50\nx,60\n", "duplicate architecture 'x'", 3),
    ("architecture,top1\nx,50,1\n", "expected 2 columns", 2),
    ("name,acc\nx,50\n", "expected header", 1),
])
def test_accuracy_errors_name_the_line(tmp_path, text, message, line):
    with pytest.raises(ReferenceDataError, match=message) as info:
        load_reference_accuracy(write(tmp_path, text))
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_missing_file(tmp_path):
    with pytest.raises(ReferenceDataError, match="cannot open file"):
        load_reference_accuracy(tmp_path / "absent.csv")


def test_shipped_toy_weights():
    assert load_custom_weights(TOY_WEIGHTS) == {2: 1.0, 4: 0.5, 6: 0.25, 8: 0.125}


@pytest.mark.parametrize("text, message, line", [
    ("length,weight\n2,-0.5\n", "non-negative", 2),
    ("length,weight\n2,1\n2,3\n", "duplicate length 2", 3),
    ("length,weight\ntwo,1\n", "malformed row", 2),
    ("length,weight\n-1,1\n", "length must be non-negative", 2),
    ("length,weight\n2,inf\n", "finite", 2),
])
def test_weight_errors(tmp_path, text, message, line):
    with pytest.raises(ReferenceDataError, match=message) as info:
        load_custom_weights(write(tmp_path, text))
    assert info.value.line == line
