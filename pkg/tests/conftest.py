import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synth import build_fixture_dataset  # noqa: E402


@pytest.fixture(scope="session")
def fixture_dataset(tmp_path_factory):
    """Bundled synthetic experiment data (prices, membership, configs)."""
    root = tmp_path_factory.mktemp("dataset")
    return build_fixture_dataset(root)
