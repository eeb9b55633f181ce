import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import load_reference_lz4  # noqa: E402

REPO_ROOT = Path(__file__).resolve().parents[1]
CONFIG_DIR = REPO_ROOT / "configs"
VECTOR_DIR = Path(__file__).parent / "vectors"


@pytest.fixture(scope="session")
def reference_lz4():
    ref = load_reference_lz4()
    if ref is None:
        pytest.skip("reference LZ4 library not available")
    return ref


@pytest.fixture(scope="session")
def config_dir() -> Path:
    return CONFIG_DIR


@pytest.fixture(scope="session")
def vector_dir() -> Path:
    return VECTOR_DIR
