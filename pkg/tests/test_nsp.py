import json
import random
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from fluidity.errors import (
    ConfigError,
    MissingScoreError,
    ProtocolError,
    TransportError,
    ValidationError,
)
from fluidity.nsp import (
    FileBackend,
    NspBackendConfig,
    RemoteBackend,
    StubBackend,
    canonical_text,
    load_score_file,
    make_backend,
    pair_key,
    parse_backend_spec,
    write_score_file,
)


class TestPairKey:
    def test_matches_shared_fixture(self, data_dir):
        fixture = json.loads((data_dir / "nsp_keys.json").read_text())
        for entry in fixture["entries"]:
            assert pair_key(entry["statement"], entry["response"]) == entry["key"]

    def test_whitespace_canonicalization(self):
        assert canonical_text("  a \t b\n c ") == "a b c"
        assert pair_key(" a  b ", "c") == pair_key("a b", "c")

    def test_distinct_pairs_distinct_keys(self):
        assert pair_key("a", "b") != pair_key("b", "a")


class TestStubBackend:
    def test_fixed_probability(self):
        backend = StubBackend()
        result = backend.score("anything", "at all")
        assert result.probability == 0.5
        assert result.is_next == 1

    def test_repeat_call_identical(self):
        backend = StubBackend()
        assert backend.score("a", "b") == backend.score("a", "b")

    def test_threshold_edge(self):
        backend = StubBackend(probability=0.49, threshold=0.5)
        assert backend.score("a", "b").is_next == 0


class TestFileBackend:
    def test_lookup_identity(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        write_score_file(path, [("s", "r", 0.91)])
        backend = load_score_file(path)
        result = backend.score("s", "r")
        assert result.probability == 0.91
        assert result.is_next == 1

    def test_threshold_edge(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        write_score_file(path, [("s", "r", 0.49)])
        backend = load_score_file(path, threshold=0.5)
        assert backend.score("s", "r").is_next == 0

    def test_missing_pair(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        write_score_file(path, [("s", "r", 0.5)])
        backend = load_score_file(path)
        with pytest.raises(MissingScoreError, match=pair_key("other", "pair")):
            backend.score("other", "pair")

    def test_two_entries_both_served(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        write_score_file(path, [("a", "b", 0.2), ("c", "d", 0.8)])
        backend = load_score_file(path)
        assert backend.score("a", "b").probability == 0.2
        assert backend.score("c", "d").probability == 0.8

    def test_duplicate_key_rejected(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        entry = {"key": pair_key("s", "r"), "statement": "s", "response": "r", "p_next": 0.5}
        path.write_text(json.dumps(entry) + "\n" + json.dumps(entry) + "\n")
        with pytest.raises(ValidationError, match="duplicate"):
            load_score_file(path)

    def test_probability_out_of_bounds(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        entry = {"key": pair_key("s", "r"), "statement": "s", "response": "r", "p_next": 1.5}
        path.write_text(json.dumps(entry) + "\n")
        with pytest.raises(ValidationError, match="1.5"):
            load_score_file(path)

    def test_drifted_key_rejected(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        entry = {"key": "0" * 64, "statement": "s", "response": "r", "p_next": 0.5}
        path.write_text(json.dumps(entry) + "\n")
        with pytest.raises(ValidationError, match="canonical hash"):
            load_score_file(path)

    def test_header_record_skipped(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        write_score_file(path, [("s", "r", 0.7)], extra_header={"model": "test"})
        assert load_score_file(path).score("s", "r").probability == 0.7


class TestScoreBatch:
    def test_empty(self):
        assert StubBackend().score_batch([]) == []

    def test_three_pairs_via_stub(self):
        results = StubBackend().score_batch([("a", "b")] * 3)
        assert len(results) == 3
        assert all(r.probability == 0.5 for r in results)

    def test_batch_equals_elementwise(self, tmp_path):
        rng = random.Random(99)
        pairs = [(f"statement {i}", f"response {i}") for i in range(50)]
        entries = [(s, r, rng.random()) for s, r in pairs]
        path = tmp_path / "scores.jsonl"
        write_score_file(path, entries)
        backend = load_score_file(path)
        batch = backend.score_batch(pairs)
        single = [backend.score(s, r) for s, r in pairs]
        assert batch == single

    def test_failure_names_index(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        write_score_file(path, [("a", "b", 0.5)])
        backend = load_score_file(path)
        with pytest.raises(MissingScoreError, match="batch element 1"):
            backend.score_batch([("a", "b"), ("no", "entry")])


class TestBackendConfig:
    def test_stub_spec(self):
        config = parse_backend_spec("stub")
        assert config.kind == "stub"

    def test_file_spec(self):
        config = parse_backend_spec("file:/tmp/scores.jsonl")
        assert config.kind == "file"
        assert config.location == "/tmp/scores.jsonl"

    def test_remote_spec_keeps_url(self):
        config = parse_backend_spec("remote:http://localhost:8100")
        assert config.location == "http://localhost:8100"

    def test_bad_spec(self):
        with pytest.raises(ConfigError):
            parse_backend_spec("nonsense")

    def test_location_required(self):
        with pytest.raises(ConfigError):
            NspBackendConfig(kind="file")

    def test_threshold_bounds(self):
        with pytest.raises(ConfigError):
            NspBackendConfig(kind="stub", threshold=1.0)

    def test_make_backend_stub(self):
        backend = make_backend(NspBackendConfig(kind="stub", threshold=0.6))
        assert isinstance(backend, StubBackend)
        assert backend.threshold == 0.6


class _Handler(BaseHTTPRequestHandler):
    behavior = "ok"
    calls = 0

    def log_message(self, *args):  # quiet
        pass

    def do_GET(self):
        if self.path == "/v1/health":
            self.send_response(200)
            self.end_headers()
            self.wfile.write(b"{}")

    def do_POST(self):
        type(self).calls += 1
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length))
        if type(self).behavior == "flaky" and type(self).calls < 3:
            self.send_response(503)
            self.end_headers()
            return
        if type(self).behavior == "malformed":
            payload = {"unexpected": "shape"}
        else:
            payload = {"results": [{"p_next": 0.75} for _ in body["pairs"]]}
        data = json.dumps(payload).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


@pytest.fixture
def http_server():
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _Handler.behavior = "ok"
    _Handler.calls = 0
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()


class TestRemoteBackend:
    def test_health_and_score(self, http_server):
        backend = RemoteBackend(base_url=http_server, timeout=5)
        assert backend.check_health() is True
        result = backend.score("s", "r")
        assert result.probability == 0.75
        assert result.is_next == 1

    def test_batch_alignment(self, http_server):
        backend = RemoteBackend(base_url=http_server, timeout=5)
        results = backend.score_batch([("a", "b"), ("c", "d")])
        assert len(results) == 2

    def test_retries_on_5xx(self, http_server):
        _Handler.behavior = "flaky"
        backend = RemoteBackend(base_url=http_server, timeout=5, backoff=0.01)
        assert backend.score("s", "r").probability == 0.75
        assert _Handler.calls == 3

    def test_malformed_payload_is_protocol_error(self, http_server):
        _Handler.behavior = "malformed"
        backend = RemoteBackend(base_url=http_server, timeout=5)
        with pytest.raises(ProtocolError):
            backend.score("s", "r")

    def test_unreachable_is_transport_error(self):
        backend = RemoteBackend(
            base_url="http://127.0.0.1:1", timeout=0.2, retries=1, backoff=0.01
        )
        with pytest.raises(TransportError):
            backend.score("s", "r")
        assert backend.check_health() is False
