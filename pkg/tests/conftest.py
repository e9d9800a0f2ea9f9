import threading

import pytest

from dynroute import cases
from dynroute.network import generate_grid4x4, generate_manhattan
from dynroute.stub_server import make_server


@pytest.fixture(scope="session")
def manhattan():
    return generate_manhattan(4, 4)


@pytest.fixture(scope="session")
def grid4x4():
    return generate_grid4x4()


@pytest.fixture(scope="session")
def reference_candidates(manhattan):
    return cases.reference_candidates(manhattan)


@pytest.fixture
def stub_backend():
    """A running reference decision service; yields its base URL."""
    server = make_server()
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}/"
    server.shutdown()
    server.server_close()
