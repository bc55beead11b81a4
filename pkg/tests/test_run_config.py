import argparse
import json
import os

import pytest

from depth_analyzer.arch_builders import ShortcutPolicy
from depth_analyzer.cost_metrics import MacConvention
from depth_analyzer.grad_depth import DEFAULT_GAMMAS
from depth_analyzer.run_config import (
    AnalysisOptions,
    RunConfigError,
    Source,
    load_run_config,
    parse_gammas,
    parse_input_shape,
    resolve_options,
    resolve_sources,
)


def write_config(tmp_path, values, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(values), encoding="utf-8")
    return path


def test_defaults_without_flags_or_config():
    options = resolve_options(argparse.Namespace())
    assert options == AnalysisOptions()
    assert options.gammas == DEFAULT_GAMMAS
    assert options.input_shape == (3, 224, 224)
    assert options.mac_convention is MacConvention.HALF


def test_cli_overrides_config_overrides_default(tmp_path):
    config = load_run_config(write_config(tmp_path, {"classes": 10, "gamma": [0.5], "shortcut": "identity"}))
    args = argparse.Namespace(classes=100, gamma=None, shortcut=None, fc_depth="off")
    options = resolve_options(args, config)
    assert options.num_classes == 100
    assert options.gammas == (0.5,)
    assert options.shortcut is ShortcutPolicy.IDENTITY_PAD
    assert options.count_fc is False


def test_relative_paths_resolve_against_config_dir(tmp_path):
    sub = tmp_path / "configs"
    sub.mkdir()
    config = load_run_config(write_config(sub, {
        "sources": ["vgg16", {"spec": "nets/toy.archspec"}, {"arch": "googlenet"}],
        "accuracy": "acc.csv",
    }))
    assert config.get("sources") == [
        Source("arch", "vgg16"),
        Source("spec", os.path.join(str(sub), "nets", "toy.archspec")),
        Source("arch", "googlenet"),
    ]
    assert config.get("accuracy") == os.path.join(str(sub), "acc.csv")


def test_cli_sources_replace_config_sources(tmp_path):
    config = load_run_config(write_config(tmp_path, {"sources": ["vgg16"]}))
    assert resolve_sources(argparse.Namespace(sources=None), config) == [Source("arch", "vgg16")]
    cli = [Source("spec", "a.archspec"), Source("arch", "vgg11")]
    assert resolve_sources(argparse.Namespace(sources=cli), config) == cli


@pytest.mark.parametrize("values, message", [
    ({"colour": "red"}, "unknown key"),
    ({"sources": "vgg16"}, "must be a list"),
    ({"sources": [{"arch": "vgg16", "spec": "x"}]}, "exactly one of"),
])
def test_bad_config_files(tmp_path, values, message):
    with pytest.raises(RunConfigError, match=message):
        load_run_config(write_config(tmp_path, values))


def test_undecodable_and_missing_config(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(RunConfigError, match="could not decode"):
        load_run_config(path)
    with pytest.raises(RunConfigError, match="not found"):
        load_run_config(tmp_path / "absent.json")


@pytest.mark.parametrize("values, message", [
    ({"jobs": 0}, "jobs must be a positive integer"),
    ({"classes": "ten"}, "classes must be a positive integer"),
    ({"format": "xml"}, "format must be one of"),
    ({"oracle": "yes"}, "oracle must be true or false"),
])
def test_bad_config_values(tmp_path, values, message):
    config = load_run_config(write_config(tmp_path, values))
    with pytest.raises(RunConfigError, match=message):
        resolve_options(argparse.Namespace(), config)


def test_parse_input_shape():
    assert parse_input_shape("3x32x32") == (3, 32, 32)
    assert parse_input_shape([1, 28, 28]) == (1, 28, 28)
    for bad in ("3x32", "3x0x32", "axbxc"):
        with pytest.raises(RunConfigError):
            parse_input_shape(bad)


def test_parse_gammas():
    assert parse_gammas("1.0,0.5") == (1.0, 0.5)
    with pytest.raises(RunConfigError, match=r"\(0, 1\]"):
        parse_gammas("0.5,1.2")
    with pytest.raises(RunConfigError, match="comma-separated"):
        parse_gammas("0.5,x")
