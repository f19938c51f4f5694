"""Drives the adapter over raw pipes, the way a client process would."""

import json
import math
import subprocess
import sys

import pytest


class Server:
    """Minimal line-protocol driver for one adapter process."""

    def __init__(self, checkpoint, extra=()):
        argv = [sys.executable, "-m", "gutek_adapter.server", "--model", checkpoint]
        argv += list(extra)
        self.proc = subprocess.Popen(
            argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
        )
        self.handshake = json.loads(self._read_line())

    def _read_line(self):
        line = self.proc.stdout.readline()
        assert line, self.proc.stderr.read()
        return line

    def send_raw(self, text):
        self.proc.stdin.write(text + "\n")
        self.proc.stdin.flush()

    def rpc(self, payload):
        self.send_raw(json.dumps(payload))
        return json.loads(self._read_line())

    def close(self):
        self.proc.stdin.close()
        self.proc.wait(timeout=10)


@pytest.fixture(scope="module")
def server(checkpoint):
    srv = Server(checkpoint)
    yield srv
    srv.close()


def test_handshake_shape(server, checkpoint):
    hs = server.handshake
    assert hs["protocol"] == 1
    assert hs["model_id"] == checkpoint
    assert hs["labels"] == ["neg", "pos"]
    assert hs["capabilities"] == ["predict", "embed"]
    assert hs["embedding_dim"] == 32
    assert hs["max_length"] == 64


def test_predict_rows_are_distributions(server):
    resp = server.rpc({"id": 1, "op": "predict", "texts": ["the movie was good .", "awful plot"]})
    assert resp["id"] == 1
    rows = resp["scores"]
    assert len(rows) == 2
    for row in rows:
        assert len(row) == 2
        assert all(0.0 <= p <= 1.0 for p in row)
        assert math.isclose(sum(row), 1.0, abs_tol=1e-6)


def test_embed_dim_matches_handshake(server):
    resp = server.rpc({"id": 2, "op": "embed", "texts": ["fine acting", ""]})
    vectors = resp["vectors"]
    assert len(vectors) == 2
    for vec in vectors:
        assert len(vec) == server.handshake["embedding_dim"]
        assert all(math.isfinite(x) for x in vec)


def test_repeated_text_gives_identical_vectors(server):
    text = "the acting was great but the plot was boring"
    first = server.rpc({"id": 3, "op": "embed", "texts": [text, "bad film", text]})
    again = server.rpc({"id": 4, "op": "embed", "texts": [text]})
    assert first["vectors"][0] == first["vectors"][2]
    assert first["vectors"][0] == again["vectors"][0]

    p1 = server.rpc({"id": 5, "op": "predict", "texts": [text]})
    p2 = server.rpc({"id": 6, "op": "predict", "texts": ["good", text, "bad"]})
    assert p1["scores"][0] == p2["scores"][1]


def test_long_input_is_truncated_not_fatal(server):
    long_text = "very " * 5000
    resp = server.rpc({"id": 7, "op": "predict", "texts": [long_text]})
    assert "error" not in resp
    assert math.isclose(sum(resp["scores"][0]), 1.0, abs_tol=1e-6)


def test_unknown_op_is_an_error_response(server):
    resp = server.rpc({"id": 8, "op": "translate", "texts": ["a"]})
    assert resp["id"] == 8
    assert resp["error"].startswith("unsupported op")


def test_bad_requests_answered_without_crashing(server):
    resp = server.rpc({"id": 9, "op": "predict", "texts": "not a list"})
    assert resp["id"] == 9
    assert "texts" in resp["error"]

    resp = server.rpc({"id": 10, "op": "predict", "texts": ["ok", 5]})
    assert "error" in resp

    server.send_raw("{this is not json")
    resp = json.loads(server._read_line())
    assert resp["id"] is None
    assert "error" in resp

    server.send_raw(json.dumps([1, 2, 3]))
    resp = json.loads(server._read_line())
    assert "error" in resp

    # server must still be healthy afterwards
    resp = server.rpc({"id": 11, "op": "predict", "texts": ["still alive"]})
    assert resp["id"] == 11
    assert "scores" in resp


def test_responses_come_back_in_request_order(server):
    for payload in [
        {"id": 20, "op": "predict", "texts": ["a"]},
        {"id": 21, "op": "embed", "texts": ["b"]},
        {"id": 22, "op": "predict", "texts": ["c"]},
    ]:
        server.send_raw(json.dumps(payload))
    ids = [json.loads(server._read_line())["id"] for _ in range(3)]
    assert ids == [20, 21, 22]


def test_max_length_flag_caps_the_limit(checkpoint):
    srv = Server(checkpoint, extra=["--max-length", "16"])
    try:
        assert srv.handshake["max_length"] == 16
        resp = srv.rpc({"id": 1, "op": "predict", "texts": ["word " * 200]})
        assert "scores" in resp
    finally:
        srv.close()


def test_clean_shutdown_on_eof(checkpoint):
    srv = Server(checkpoint)
    srv.close()
    assert srv.proc.returncode == 0


def test_missing_checkpoint_exits_nonzero(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "gutek_adapter.server", "--model", str(tmp_path / "nope")],
        capture_output=True,
        text=True,
        timeout=60,
    )
    assert proc.returncode == 1
    assert "gutek-adapter:" in proc.stderr


def test_gutek_client_end_to_end(checkpoint):
    gutek = pytest.importorskip("gutek")
    model = gutek.make_model(f"subprocess:{sys.executable} -m gutek_adapter.server --model {checkpoint}")
    try:
        assert model.labels == ("neg", "pos")
        outs = gutek.predict_batch(model, ["the movie was good .", "awful plot"])
        assert all(isinstance(o, gutek.ModelOutput) for o in outs)
        vecs = gutek.embed_batch(model, ["fine", "fine"])
        assert vecs[0].values == vecs[1].values
        assert len(vecs[0].values) == 32
        result = gutek.explain(model, "Great acting. The plot was awful. Fine movie.")
        assert len(result.unit_scores) == 3
    finally:
        model.close()
