"""Service behavior tests, ending with the service-contract gate check.

Everything runs against the hashing backend so the suite needs no model
download; the wire contract is identical for every backend.
"""

import socket
import threading
import time
from concurrent.futures import ThreadPoolExecutor

import httpx
import numpy as np
import pytest
import uvicorn
from fastapi.testclient import TestClient

from embedsvc.encoders import HashingEncoder
from embedsvc.service import API_VERSION, ServiceConfig, create_app


def make_app(batch_cap=256):
    return create_app(ServiceConfig(backend="hashing", batch_cap=batch_cap))


def wait_ready(app, client):
    assert app.state.loader_ready.wait(10.0), "encoder load timed out"
    resp = client.get("/health")
    assert resp.status_code == 200
    return resp


@pytest.fixture()
def client():
    app = make_app()
    with TestClient(app) as c:
        wait_ready(app, c)
        yield c


def cosine(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


class TestHealth:
    def test_ok_shape(self, client):
        body = client.get("/health").json()
        assert body["status"] == "ok"
        assert body["model_id"] == "hashing-v1"
        assert isinstance(body["dim"], int) and body["dim"] >= 1

    def test_dim_constant_across_calls(self, client):
        dims = {client.get("/health").json()["dim"] for _ in range(5)}
        assert len(dims) == 1

    def test_api_version_header(self, client):
        assert client.get("/health").headers["X-API-Version"] == API_VERSION


class TestEmbed:
    def test_count_dim_and_model_id_match(self, client):
        health = client.get("/health").json()
        body = client.post("/embed", json={"texts": ["a", "b", "c"]}).json()
        assert body["model_id"] == health["model_id"]
        assert body["dim"] == health["dim"]
        assert len(body["vectors"]) == 3
        assert all(len(v) == body["dim"] for v in body["vectors"])

    def test_order_preserving(self, client):
        texts = ["first text", "second text", "third text"]
        fwd = client.post("/embed", json={"texts": texts}).json()["vectors"]
        rev = client.post("/embed",
                          json={"texts": texts[::-1]}).json()["vectors"]
        assert fwd == rev[::-1]

    def test_same_text_twice_identical(self, client):
        vecs = client.post(
            "/embed", json={"texts": ["repeat me", "repeat me"]}
        ).json()["vectors"]
        assert vecs[0] == vecs[1]

    def test_repeated_request_byte_identical(self, client):
        payload = {"texts": ["alpha", "beta gamma"]}
        first = client.post("/embed", json=payload)
        second = client.post("/embed", json=payload)
        assert first.content == second.content

    def test_self_cosine_is_one(self, client):
        text = "The goal at the end of the match was controversial."
        vecs = client.post("/embed",
                           json={"texts": [text, text]}).json()["vectors"]
        assert abs(cosine(vecs[0], vecs[1]) - 1.0) <= 1e-6

    def test_api_version_header(self, client):
        resp = client.post("/embed", json={"texts": ["x"]})
        assert resp.headers["X-API-Version"] == API_VERSION

    def test_unknown_body_keys_tolerated(self, client):
        resp = client.post("/embed",
                           json={"texts": ["x"], "model_id": "whatever"})
        assert resp.status_code == 200


class TestEmbedErrors:
    def test_empty_list_is_400(self, client):
        assert client.post("/embed", json={"texts": []}).status_code == 400

    def test_over_cap_is_400(self, client):
        texts = [f"t{i}" for i in range(257)]
        resp = client.post("/embed", json={"texts": texts})
        assert resp.status_code == 400

    def test_at_cap_is_200(self, client):
        texts = [f"t{i}" for i in range(256)]
        resp = client.post("/embed", json={"texts": texts})
        assert resp.status_code == 200
        assert len(resp.json()["vectors"]) == 256

    def test_small_custom_cap(self):
        app = make_app(batch_cap=4)
        with TestClient(app) as c:
            wait_ready(app, c)
            assert c.post("/embed",
                          json={"texts": ["a"] * 5}).status_code == 400
            assert c.post("/embed",
                          json={"texts": ["a"] * 4}).status_code == 200

    @pytest.mark.parametrize("texts", [[1], ["ok", 2.5], ["ok", None],
                                       [True], "not a list", None])
    def test_non_string_entries_are_422(self, client, texts):
        assert client.post("/embed",
                           json={"texts": texts}).status_code == 422

    def test_missing_texts_key_is_422(self, client):
        assert client.post("/embed", json={}).status_code == 422

    def test_error_responses_carry_version_header(self, client):
        for resp in (client.post("/embed", json={"texts": []}),
                     client.post("/embed", json={"texts": [1]}),
                     client.get("/nope")):
            assert resp.headers["X-API-Version"] == API_VERSION


class TestRouting:
    def test_unknown_route_is_404(self, client):
        assert client.get("/nope").status_code == 404
        assert client.post("/embed/extra",
                           json={"texts": ["x"]}).status_code == 404


class TestLoading:
    def test_503_until_loaded(self):
        gate = threading.Event()

        def slow_factory():
            gate.wait(10.0)
            return HashingEncoder()

        app = create_app(ServiceConfig(backend="hashing"),
                         encoder_factory=slow_factory)
        with TestClient(app) as c:
            health = c.get("/health")
            assert health.status_code == 503
            assert health.json()["status"] == "loading"
            assert health.headers["X-API-Version"] == API_VERSION
            assert c.post("/embed",
                          json={"texts": ["x"]}).status_code == 503
            gate.set()
            wait_ready(app, c)
            assert c.post("/embed",
                          json={"texts": ["x"]}).status_code == 200

    def test_load_failure_stays_503(self):
        def broken_factory():
            raise RuntimeError("weights missing")

        app = create_app(ServiceConfig(backend="hashing"),
                         encoder_factory=broken_factory)
        with TestClient(app) as c:
            assert app.state.loader_ready.wait(10.0)
            health = c.get("/health")
            assert health.status_code == 503
            assert health.json()["status"] == "error"


class TestConcurrency:
    def test_interleaved_requests_match_sequential(self, client):
        batches = [[f"batch {i} text {j}" for j in range(1 + i % 3)]
                   for i in range(12)]
        expected = [client.post("/embed", json={"texts": b}).json()
                    for b in batches]
        with ThreadPoolExecutor(max_workers=8) as pool:
            got = list(pool.map(
                lambda b: client.post("/embed", json={"texts": b}).json(),
                batches))
        assert got == expected


class TestLiveServer:
    def test_round_trip_over_real_socket(self):
        sock = socket.socket()
        sock.bind(("127.0.0.1", 0))
        port = sock.getsockname()[1]
        server = uvicorn.Server(
            uvicorn.Config(make_app(), log_level="warning"))
        thread = threading.Thread(target=server.run,
                                  kwargs={"sockets": [sock]}, daemon=True)
        thread.start()
        base = f"http://127.0.0.1:{port}"
        try:
            deadline = time.monotonic() + 15.0
            health = None
            while time.monotonic() < deadline:
                try:
                    resp = httpx.get(base + "/health", timeout=1.0)
                except httpx.TransportError:
                    time.sleep(0.05)
                    continue
                if resp.status_code == 200:
                    health = resp.json()
                    break
                time.sleep(0.05)
            assert health is not None, "server never became healthy"
            resp = httpx.post(base + "/embed",
                              json={"texts": ["over the wire", "again"]},
                              timeout=5.0)
            assert resp.status_code == 200
            assert resp.headers["X-API-Version"] == API_VERSION
            body = resp.json()
            assert body["model_id"] == health["model_id"]
            assert len(body["vectors"]) == 2
            assert all(len(v) == health["dim"] for v in body["vectors"])
        finally:
            server.should_exit = True
            thread.join(timeout=10.0)


def report(num: int, name: str, ok: bool, budget_s: float,
           elapsed_s: float, detail: str = "") -> None:
    verdict = "PASS" if ok and elapsed_s < budget_s else "FAIL"
    line = f"{verdict} criterion {num:2d}: {name} " \
           f"[{elapsed_s:.2f}s < {budget_s:.0f}s]"
    if verdict == "FAIL" and detail:
        line += f" ({detail})"
    print(line)
    assert ok and elapsed_s < budget_s, detail or name


def test_criterion_12_service_contract():
    t0 = time.perf_counter()
    problems = []

    gate = threading.Event()

    def slow_factory():
        gate.wait(10.0)
        return HashingEncoder()

    loading_app = create_app(ServiceConfig(backend="hashing"),
                             encoder_factory=slow_factory)
    with TestClient(loading_app) as c:
        if c.get("/health").status_code != 503:
            problems.append("no 503 while loading")
        gate.set()

    app = make_app()
    with TestClient(app) as c:
        wait_ready(app, c)
        health = c.get("/health").json()
        if health["status"] != "ok":
            problems.append("health not ok after warmup")
        dims = {c.get("/health").json()["dim"] for _ in range(3)}
        if dims != {health["dim"]}:
            problems.append("dim not constant")

        texts = ["one short text", "a different text", "one short text"]
        first = c.post("/embed", json={"texts": texts})
        second = c.post("/embed", json={"texts": texts})
        vecs = first.json()["vectors"]
        if first.content != second.content:
            problems.append("repeated request not deterministic")
        if vecs[0] != vecs[2]:
            problems.append("identical texts got different vectors")
        rev = c.post("/embed", json={"texts": texts[::-1]}).json()["vectors"]
        if rev != vecs[::-1]:
            problems.append("not order-preserving")
        if abs(cosine(vecs[0], vecs[2]) - 1.0) > 1e-6:
            problems.append("self-cosine off unity")

        if c.post("/embed", json={"texts": []}).status_code != 400:
            problems.append("empty batch not 400")
        over = [f"t{i}" for i in range(257)]
        if c.post("/embed", json={"texts": over}).status_code != 400:
            problems.append("over-cap batch not 400")
        if c.post("/embed", json={"texts": ["ok", 7]}).status_code != 422:
            problems.append("non-string entry not 422")

    elapsed = time.perf_counter() - t0
    report(12, "service contract", not problems, 60.0, elapsed,
           "; ".join(problems))
