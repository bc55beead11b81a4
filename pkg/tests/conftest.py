import pytest

from depth_analyzer.arch_builders import BUILTIN_ARCHITECTURES, ShortcutPolicy, build_architecture
from depth_analyzer.archspec_parser import load_archspec
from depth_analyzer.reference_data import DATA_DIR

SCHEMAS_DIR = DATA_DIR.parent / "schemas"
TOY_RESIDUAL = SCHEMAS_DIR / "toy_residual.archspec"
TOY_WEIGHTS = SCHEMAS_DIR / "toy_weights.csv"


@pytest.fixture(scope="session")
def builtin_graphs():
    return {name: build_architecture(name) for name in BUILTIN_ARCHITECTURES}


@pytest.fixture(scope="session")
def identity_resnet18():
    return build_architecture("resnet18", policy=ShortcutPolicy.IDENTITY_PAD)


@pytest.fixture(scope="session")
def toy_residual():
    return load_archspec(TOY_RESIDUAL)
