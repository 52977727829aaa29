import threading
import time

import numpy as np
import pytest

from annolab.corpus import load_parallel_corpus

TOY_SOURCE = "das Haus\ndas Buch\nein Buch\n"
TOY_TARGET = "the house\nthe book\na book\n"


@pytest.fixture
def toy_corpus():
    return load_parallel_corpus(TOY_SOURCE, TOY_TARGET)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


class LiveService:
    """A real HTTP server on an ephemeral port backed by a temp store."""

    def __init__(self, store_path, workers=1):
        from annolab.api import bind_socket, create_app, make_server
        from annolab.registry import Registry

        self.registry = Registry(store_path, workers=workers)
        self._sock = bind_socket("127.0.0.1:0")
        self.port = self._sock.getsockname()[1]
        self.base_url = f"http://127.0.0.1:{self.port}"
        self._server = make_server(create_app(self.registry))
        self._thread = threading.Thread(
            target=self._server.run, kwargs={"sockets": [self._sock]}, daemon=True
        )
        self._thread.start()
        deadline = time.time() + 10
        while not self._server.started:
            if time.time() > deadline:
                raise RuntimeError("server did not start")
            time.sleep(0.01)

    def stop(self):
        self._server.should_exit = True
        self._thread.join(timeout=10)
        self.registry.close()


@pytest.fixture
def service(tmp_path):
    svc = LiveService(tmp_path / "store")
    yield svc
    svc.stop()
