import socket
import threading
import time

import pytest
import uvicorn

from wildflow.ldp import LDPServer
from wildflow.service import create_app


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


@pytest.fixture
def live_server():
    """Start create_app(LDPServer) on a free local port; yields the LDPServer."""
    servers = []

    def start(containers=("instances/", "models/", "devices/")) -> LDPServer:
        port = free_port()
        ldp = LDPServer(f"http://127.0.0.1:{port}/", containers)
        server = uvicorn.Server(uvicorn.Config(create_app(ldp), host="127.0.0.1", port=port,
                                               log_level="warning"))
        thread = threading.Thread(target=server.run, daemon=True)
        thread.start()
        deadline = time.monotonic() + 10
        while not server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("server did not start")
            time.sleep(0.02)
        servers.append((server, thread))
        return ldp

    yield start
    for server, thread in servers:
        server.should_exit = True
        thread.join(timeout=5)


# -- session-wide state-machine audit ----------------------------------------
# Every LDPServer built during the run is recorded so the acceptance suite can
# audit all of their request logs. Tests that provoke violations on purpose
# carry the ``bad_transitions`` marker and their servers are left out.

AUDITED: list = []
_current = {"expected": False}
_original_init = LDPServer.__init__


def _recording_init(self, *args, **kwargs):
    _original_init(self, *args, **kwargs)
    if not _current["expected"]:
        AUDITED.append(self)


LDPServer.__init__ = _recording_init


def pytest_configure(config):
    config.addinivalue_line("markers", "bad_transitions: test provokes state-machine violations")


@pytest.fixture(autouse=True)
def _audit_scope(request):
    _current["expected"] = request.node.get_closest_marker("bad_transitions") is not None
    yield
    _current["expected"] = False


def pytest_collection_modifyitems(items):
    # acceptance criteria run last so the audit sees every other test's servers
    items.sort(key=lambda item: item.fspath.basename == "test_acceptance.py")


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
