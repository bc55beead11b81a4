import pytest

from depth_analyzer.arch_builders import (
    BUILTIN_ARCHITECTURES,
    BuilderError,
    ShortcutPolicy,
    build_architecture,
    build_googlenet,
    build_resnet,
    build_vgg,
)
from depth_analyzer.graph_core import Add, Concat, Conv, Fc, ShortcutPad, infer_shapes, validate


@pytest.mark.parametrize("name", BUILTIN_ARCHITECTURES)
def test_builtins_are_valid(builtin_graphs, name):
    graph = builtin_graphs[name]
    assert graph.name == name
    assert validate(graph).ok
    assert infer_shapes(graph)["output"] == (1000,)


@pytest.mark.parametrize("variant, convs", [(11, 8), (16, 13), (19, 16)])
def test_vgg_layout(variant, convs):
    graph = build_vgg(variant)
    assert len(graph.ids_of(Conv)) == convs
    assert graph.ids_of(Fc) == ["fc6", "fc7", "fc8"]
    assert infer_shapes(graph)["pool5"] == (512, 7, 7)


def test_resnet_shortcut_policies():
    projection = build_resnet(18)
    identity = build_resnet(18, policy=ShortcutPolicy.IDENTITY_PAD)
    assert len(projection.ids_of(Add)) == 8
    assert [n for n in projection.nodes if n.endswith(".downsample")] == [
        "layer2.0.downsample", "layer3.0.downsample", "layer4.0.downsample"]
    assert identity.ids_of(ShortcutPad) == ["layer2.0.pad", "layer3.0.pad", "layer4.0.pad"]
    assert not identity.nodes["layer1.0.conv1"].bias
    assert projection.nodes["fc"].bias


def test_resnet50_uses_bottlenecks_with_stride_on_the_3x3():
    graph = build_resnet(50)
    assert len(graph.ids_of(Add)) == 16
    assert graph.nodes["layer2.0.conv2"].stride == 2
    assert graph.nodes["layer2.0.conv1"].stride == 1
    shapes = infer_shapes(graph)
    assert shapes["layer1.0.add"] == (256, 56, 56)
    assert shapes["layer4.2.add"] == (2048, 7, 7)


def test_googlenet_layout():
    graph = build_googlenet()
    assert len(graph.ids_of(Concat)) == 9
    shapes = infer_shapes(graph)
    assert shapes["inception3a.concat"] == (256, 28, 28)
    assert shapes["inception4a.concat"] == (512, 14, 14)
    assert shapes["inception5b.concat"] == (1024, 7, 7)
    assert graph.predecessors("inception3a.concat") == [
        "inception3a.b1", "inception3a.b2", "inception3a.b3", "inception3a.b4"]


def test_small_inputs_and_class_counts():
    graph = build_architecture("resnet18", input_shape=(3, 32, 32), num_classes=10)
    assert infer_shapes(graph)["fc"] == (10,)
    assert infer_shapes(build_architecture("googlenet", input_shape=(3, 32, 32)))["gap"] == (1024,)


@pytest.mark.parametrize("kwargs, message", [
    ({"name": "alexnet"}, "unknown architecture"),
    ({"name": "vgg13"}, "unknown VGG variant"),
    ({"name": "resnet101"}, "unknown ResNet variant"),
    ({"name": "vgg16", "input_shape": (3, 16, 16)}, "spatial dims"),
    ({"name": "vgg16", "num_classes": 0}, "num_classes"),
])
def test_builder_errors(kwargs, message):
    with pytest.raises(BuilderError, match=message):
        build_architecture(**kwargs)


def test_names_are_case_insensitive():
    assert build_architecture("ResNet34").name == "resnet34"
