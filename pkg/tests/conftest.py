import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fedhenet.he import ckks, serial
from fedhenet.he.context import EncryptionContext, ROLE_CLIENT
from fedhenet.he.params import HeParams

FIXTURES = Path(__file__).parent / "fixtures"

# one verdict line per acceptance criterion, echoed after the test summary
ACCEPTANCE_VERDICTS = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_VERDICTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def desk_params():
    return HeParams.desk(256)


@pytest.fixture(scope="session")
def desk_keys(desk_params):
    """Session-cached desk-profile keys with +/-1 and power-of-two steps."""
    steps = [1, -1, 2, -2, 4, -4, 8, -8, 16, -16, 32, -32, 64, -64]
    return ckks.keygen(desk_params, steps, seed=7)


@pytest.fixture(scope="session")
def desk_ctx(desk_params, desk_keys):
    sk, pk, rot = desk_keys
    return EncryptionContext(
        desk_params,
        backend="ckks",
        role=ROLE_CLIENT,
        public_key=pk,
        secret_key=sk,
        rotation_keys=rot,
        seed=99,
    )


@pytest.fixture(scope="session")
def desk_key_file(tmp_path_factory, desk_params, desk_keys):
    sk, pk, rot = desk_keys
    path = tmp_path_factory.mktemp("keys") / "desk.fhek"
    serial.save_keys(path, desk_params, sk=sk, pk=pk, rot=rot)
    return path


def random_dataset(rng, m=None, n=None, C=None):
    """Random EmbeddingDataset with every class present."""
    from fedhenet import EmbeddingDataset

    m = m if m is not None else int(rng.integers(10, 60))
    n = n if n is not None else int(rng.integers(2, 12))
    C = C if C is not None else int(rng.integers(2, 5))
    m = max(m, C)
    data = rng.normal(size=(m, n))
    labels = np.concatenate([np.arange(C), rng.integers(0, C, m - C)])
    rng.shuffle(labels)
    return EmbeddingDataset(data, labels, C)
