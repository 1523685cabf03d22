import http.client
import json
import threading

import pytest

from pycc.service import (CompletionError, ModelBundle, analyze_cursor,
                          complete, make_server)

SRC = "import os\nos."


class TestAnalyzeCursor:
    def test_simple_trigger(self):
        raw = SRC.encode("utf-8")
        ctx, cls, in_if, history, flags = analyze_cursor(raw, len(raw), T=100)
        assert cls == "os"
        assert ctx[-1] == "."
        assert ctx[:2] == ["Import", "os"]
        assert flags == []

    def test_chained_receiver(self):
        raw = b"import os\nos.path."
        ctx, cls, _, _, _ = analyze_cursor(raw, len(raw), T=100)
        assert cls == "os.path"

    def test_history_collected(self):
        raw = b"import os\nos.getcwd()\nos.listdir(p)\nos."
        _, cls, _, history, _ = analyze_cursor(raw, len(raw), T=100)
        assert history == ["getcwd", "listdir"]

    def test_in_if_detected(self):
        raw = b"import os\nif os."
        _, cls, in_if, _, _ = analyze_cursor(raw, len(raw), T=100)
        assert cls == "os" and in_if is True

    def test_unknown_receiver_flagged(self):
        raw = b"x = f()\nx."
        ctx, cls, _, _, flags = analyze_cursor(raw, len(raw), T=100)
        assert cls is None
        assert "unknown_receiver" in flags
        assert ctx[-1] == "."

    def test_not_a_completion_point(self):
        with pytest.raises(CompletionError):
            analyze_cursor(b"import os", 9, T=100)

    def test_cursor_beyond_source(self):
        with pytest.raises(CompletionError):
            analyze_cursor(b"os.", 99, T=100)


class TestComplete:
    def test_neural_toy_members(self, neural_bundle):
        response = complete(neural_bundle, SRC, len(SRC.encode()), k=5)
        assert len(response["suggestions"]) == 5
        members = set(neural_bundle.vocab.class_members["os"])
        for s in response["suggestions"]:
            assert s["token"] in members
        assert response["class_name"] == "os"
        ranks = [s["rank"] for s in response["suggestions"]]
        assert ranks == list(range(1, 6))
        scores = [s["score"] for s in response["suggestions"]]
        assert scores == sorted(scores, reverse=True)

    def test_k_one(self, neural_bundle):
        response = complete(neural_bundle, SRC, len(SRC.encode()), k=1)
        assert len(response["suggestions"]) == 1
        assert response["suggestions"][0]["rank"] == 1

    def test_unknown_receiver_fallback(self, neural_bundle):
        src = "q = mystery()\nq."
        response = complete(neural_bundle, src, len(src.encode()), k=3)
        assert "unknown_receiver" in response["fallback_flags"]
        assert len(response["suggestions"]) == 3

    def test_idempotent(self, neural_bundle):
        a = complete(neural_bundle, SRC, len(SRC.encode()), k=5)
        b = complete(neural_bundle, SRC, len(SRC.encode()), k=5)
        assert a["suggestions"] == b["suggestions"]

    def test_markov_uses_history(self, markov_bundle):
        src = "import os\np = 'x'\nif os.path.isfile(p):\n    os.remove(p)\n    os."
        response = complete(markov_bundle, src, len(src.encode()), k=3)
        assert response["suggestions"]
        assert response["suggestions"][0]["token"] == "rename"

    def test_serving_never_mutates_model(self, markov_bundle):
        import hashlib
        import json as json_mod

        def digest(bundle):
            h = hashlib.sha256()
            h.update(json_mod.dumps(bundle.markov.to_json_dict(),
                                    sort_keys=True).encode())
            h.update(bundle.vocab.content_hash().encode())
            return h.hexdigest()

        before = digest(markov_bundle)
        src = "import os\np = 'x'\nif os.path.isfile(p):\n    os."
        for _ in range(1000):
            complete(markov_bundle, src, len(src.encode()), k=5)
        assert digest(markov_bundle) == before

    def test_frequency_bundle(self, toy_pipeline):
        bundle = ModelBundle(kind="frequency", vocab=toy_pipeline["vocab"],
                             model_id="frequency",
                             table=toy_pipeline["frequency"])
        response = complete(bundle, SRC, len(SRC.encode()), k=4)
        assert response["suggestions"]
        scores = [s["score"] for s in response["suggestions"]]
        assert scores == sorted(scores, reverse=True)

    def test_alphabetic_bundle(self, toy_pipeline):
        bundle = ModelBundle(kind="alphabetic", vocab=toy_pipeline["vocab"],
                             model_id="alphabetic")
        response = complete(bundle, SRC, len(SRC.encode()), k=4)
        tokens = [s["token"] for s in response["suggestions"]]
        assert tokens == sorted(tokens)


@pytest.fixture()
def server(neural_bundle):
    srv = make_server(neural_bundle, 0)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield srv
    srv.shutdown()
    srv.server_close()


def request(srv, method, path, payload=None):
    conn = http.client.HTTPConnection("127.0.0.1", srv.server_address[1],
                                      timeout=10)
    body = json.dumps(payload) if payload is not None else None
    headers = {"Content-Type": "application/json"} if body else {}
    conn.request(method, path, body=body, headers=headers)
    resp = conn.getresponse()
    data = json.loads(resp.read().decode("utf-8"))
    conn.close()
    return resp.status, data


class TestHttp:
    def test_health(self, server, toy_pipeline):
        status, data = request(server, "GET", "/health")
        assert status == 200
        assert data["model_id"] == "neural"
        assert data["quantized"] is False
        assert data["vocab_hash"] == toy_pipeline["vocab"].content_hash()

    def test_valid_completion(self, server):
        status, data = request(server, "POST", "/complete",
                               {"source": SRC, "cursor": len(SRC.encode()),
                                "k": 5})
        assert status == 200
        assert 1 <= len(data["suggestions"]) <= 5
        assert "latency_ms" in data

    def test_malformed_json_400(self, server):
        conn = http.client.HTTPConnection("127.0.0.1",
                                          server.server_address[1], timeout=10)
        conn.request("POST", "/complete", body="{not json",
                     headers={"Content-Type": "application/json"})
        resp = conn.getresponse()
        assert resp.status == 400
        conn.close()

    def test_missing_fields_400(self, server):
        status, data = request(server, "POST", "/complete", {"source": "x."})
        assert status == 400

    def test_cursor_out_of_range_422(self, server):
        status, data = request(server, "POST", "/complete",
                               {"source": "os.", "cursor": 500})
        assert status == 422
        assert "error" in data

    def test_not_completion_point_422(self, server):
        status, _ = request(server, "POST", "/complete",
                            {"source": "import os\n", "cursor": 5})
        assert status == 422

    def test_model_field_mismatch_422(self, server):
        status, data = request(server, "POST", "/complete",
                               {"source": SRC, "cursor": len(SRC.encode()),
                                "model": "other-model"})
        assert status == 422

    def test_model_field_match_ok(self, server):
        status, _ = request(server, "POST", "/complete",
                            {"source": SRC, "cursor": len(SRC.encode()),
                             "model": "neural"})
        assert status == 200

    def test_concurrent_requests_consistent(self, server):
        results = []

        def hit():
            status, data = request(server, "POST", "/complete",
                                   {"source": SRC, "cursor": len(SRC.encode())})
            results.append((status, tuple(s["token"] for s in data["suggestions"])))

        threads = [threading.Thread(target=hit) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len({r for r in results}) == 1
        assert results[0][0] == 200
