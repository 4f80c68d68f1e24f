"""
Shared fixtures: example programs, seeded generators and log capture.
"""
import logging
from io import StringIO

import numpy as np
import pytest

from deepgraphlog.config import reset_config
from deepgraphlog.frontend import load_program
from logging_setup import JSONFormatter
from observability.event_store import event_store

from .programs import BLOCKS, BLOCKS_GNN, REACHABILITY


@pytest.fixture
def blocks_source():
    return BLOCKS


@pytest.fixture
def blocks_program():
    return load_program(BLOCKS, "blocks.dgl")


@pytest.fixture
def blocks_gnn_program():
    return load_program(BLOCKS_GNN, "blocks_gnn.dgl")


@pytest.fixture
def reachability_program():
    return load_program(REACHABILITY, "reach.dgl")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def clean_state(monkeypatch):
    """Fresh config and event store per test, single-threaded unless a test asks otherwise."""
    monkeypatch.setenv("DGL_THREADS", "1")
    reset_config()
    event_store.clear()
    yield
    reset_config()


@pytest.fixture
def capture_logs():
    """Capture JSON log output to a string buffer."""
    buffer = StringIO()
    handler = logging.StreamHandler(buffer)
    handler.setFormatter(JSONFormatter())

    root = logging.getLogger()
    saved, level = root.handlers[:], root.level
    root.handlers = [handler]
    root.setLevel(logging.DEBUG)

    yield buffer

    root.handlers = saved
    root.setLevel(level)
