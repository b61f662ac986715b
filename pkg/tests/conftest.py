import sys
from pathlib import Path

import pytest

# Make the sibling helpers module importable regardless of pytest's
# import mode.
sys.path.insert(0, str(Path(__file__).parent))

import helpers  # noqa: E402


@pytest.fixture
def rng():
    import random

    return random.Random(0xD1A2F)


@pytest.fixture(scope="session")
def corpus_229(tmp_path_factory):
    """The full synthetic batch corpus: 229 files over 5 domains."""
    import random

    root = tmp_path_factory.mktemp("corpus229")
    layout = helpers.write_corpus(root, random.Random(229), n_files=229)
    return root, layout
