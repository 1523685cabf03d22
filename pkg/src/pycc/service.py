"""Edit-time completion and the local HTTP endpoint.

A completion request is resolved by appending a sentinel identifier at
the cursor and running the normal ingest pipeline on the truncated
source: the sentinel's call-site record carries exactly the context,
receiver class, if-flag, and same-class history that training saw.
"""

import json
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


from . import neural as neural_mod
from .analysis import EOS_TOKEN
from .baselines import (FrequencyTable, MarkovModel, rank_frequency,
                        rank_markov)
from .corpus import ingest_file
from .vocab import Vocabulary, encode_sample
from .analysis import CallSiteRecord

SENTINEL = "__pycc_cursor__"


class CompletionError(ValueError):
    """Request is not a valid completion point (HTTP 422)."""


@dataclass
class ModelBundle:
    kind: str                   # neural | frequency | frequency-if | markov | alphabetic
    vocab: Vocabulary
    model_id: str
    quantized: bool = False
    neural: object = None
    table: FrequencyTable = None
    markov: MarkovModel = None

    @property
    def lookback(self):
        if self.neural is not None:
            return self.neural.config.lookback
        return 1000


def analyze_cursor(source_bytes: bytes, cursor: int, T: int):
    """Parse the truncated source with a sentinel after the trigger.

    Returns (context_tokens, class_name, in_if, history, flags); context
    always ends with the end-of-sequence token.
    """
    if cursor > len(source_bytes):
        raise CompletionError("cursor beyond end of source")
    if cursor < 1 or source_bytes[cursor - 1:cursor] != b".":
        raise CompletionError("not a completion point: no '.' before cursor")
    try:
        prefix = source_bytes[:cursor].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CompletionError(f"undecodable source prefix: {exc}") from None

    flags = []
    # First candidate covers expression/assignment contexts; the second
    # closes dangling block headers ('if os.<cursor>') with a tiny suite.
    for suffix in (SENTINEL, SENTINEL + ":\n    0\n"):
        records, _ = ingest_file(prefix + suffix, repo="", file="<edit>", T=T)
        target = None
        for rec in records:
            if rec.label == SENTINEL and rec.span[0] == cursor:
                target = rec
                break
        if target is not None:
            history = [r.label for r in records
                       if r.class_name == target.class_name
                       and r.label != SENTINEL and r.span[0] < cursor]
            return (target.context_tokens, target.class_name, target.in_if,
                    history, flags)

    # Receiver unknown or statement unparseable: serialize what parses and
    # rank unrestricted.
    flags.append("unknown_receiver")
    from .parser import parse_source
    from .analysis import infer_types, serialize_ast
    module, _ = parse_source(prefix, "<edit>")
    bindings = infer_types(module)
    tokens, _ = serialize_ast(module, bindings)
    context = tokens[max(0, len(tokens) - T):] + [EOS_TOKEN]
    return context, None, False, [], flags


def _global_frequency(table: FrequencyTable):
    counts = {}
    for sub in (table.outside, table.inside):
        for per_class in sub.values():
            for label, c in per_class.items():
                counts[label] = counts.get(label, 0) + c
    return counts


def _scored_from_counts(counts):
    total = sum(counts.values()) or 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [(label, c / total) for label, c in ranked]


def rank_with_bundle(bundle: ModelBundle, context_tokens, class_name, in_if,
                     history, k):
    """Dispatch to the bundled model; returns (suggestions, flags)."""
    vocab = bundle.vocab
    flags = []
    if bundle.kind == "neural":
        record = CallSiteRecord(repo="", file="<edit>", class_name=class_name or "",
                                label=vocab.eos_token, context_tokens=context_tokens,
                                in_if=in_if, span=(0, 0))
        encoded = encode_sample(record, vocab)
        candidate = None
        if class_name is not None:
            members = vocab.class_members.get(class_name)
            if members:
                candidate = {vocab.token_to_id[m] for m in members
                             if m in vocab.token_to_id}
            else:
                flags.append("unknown_receiver")
        suggestions, pflags = neural_mod.predict(
            bundle.neural, encoded.context_ids, k, vocab,
            candidate_filter=candidate)
        return suggestions, flags + pflags

    if bundle.kind == "alphabetic":
        members = vocab.class_members.get(class_name) if class_name else None
        if members:
            scored = [(m, 1.0 / len(members)) for m in sorted(members)]
        else:
            flags.append("unknown_receiver")
            tokens = sorted(vocab.id_to_token[i] for i in vocab.method_ids)
            scored = [(m, 1.0 / max(len(tokens), 1)) for m in tokens]
    elif bundle.kind in ("frequency", "frequency-if"):
        table = bundle.table
        known = class_name is not None and (
            class_name in table.outside or class_name in table.inside)
        if known:
            merged = table.merged(class_name)
            order = rank_frequency(table, class_name,
                                   in_if=in_if if bundle.kind == "frequency-if" else None)
            total = sum(merged.values())
            scored = [(label, merged[label] / total) for label in order]
        else:
            flags.append("unknown_receiver")
            scored = _scored_from_counts(_global_frequency(table))
    elif bundle.kind == "markov":
        scored = rank_markov(bundle.markov, class_name, history) \
            if class_name else []
        if not scored:
            flags.append("unknown_receiver")
            counts = {}
            for per_class in bundle.markov.unigrams.values():
                for label, c in per_class.items():
                    counts[label] = counts.get(label, 0) + c
            scored = _scored_from_counts(counts)
    else:
        raise CompletionError(f"unknown model kind {bundle.kind!r}")

    suggestions = [neural_mod.RankedSuggestion(token, float(score), rank)
                   for rank, (token, score) in enumerate(scored[:k], start=1)]
    return suggestions, flags


def complete(bundle: ModelBundle, source: str, cursor: int, k: int = 5):
    """Full completion flow; returns the response dict."""
    start = time.perf_counter()
    source_bytes = source.encode("utf-8")
    context, class_name, in_if, history, flags = analyze_cursor(
        source_bytes, cursor, bundle.lookback)
    suggestions, more_flags = rank_with_bundle(
        bundle, context, class_name, in_if, history, k)
    latency_ms = (time.perf_counter() - start) * 1000.0
    return {
        "suggestions": [{"token": s.token, "score": s.score, "rank": s.rank}
                        for s in suggestions],
        "class_name": class_name,
        "latency_ms": latency_ms,
        "fallback_flags": sorted(set(flags + more_flags)),
    }


# --- HTTP -----------------------------------------------------------------

class _Handler(BaseHTTPRequestHandler):
    bundle: ModelBundle = None

    def log_message(self, fmt, *args):
        pass

    def _send(self, status, payload):
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "POST, GET, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    def do_GET(self):
        if self.path == "/health":
            self._send(200, {
                "model_id": self.bundle.model_id,
                "quantized": self.bundle.quantized,
                "vocab_hash": self.bundle.vocab.content_hash(),
            })
        else:
            self._send(404, {"error": "not found"})

    def do_POST(self):
        if self.path != "/complete":
            self._send(404, {"error": "not found"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            payload = json.loads(self.rfile.read(length).decode("utf-8"))
            source = payload["source"]
            cursor = int(payload["cursor"])
            k = int(payload.get("k", 5))
            if not isinstance(source, str) or k < 1:
                raise ValueError("bad request fields")
        except (ValueError, KeyError, json.JSONDecodeError) as exc:
            self._send(400, {"error": f"malformed request: {exc}"})
            return
        requested = payload.get("model")
        if requested and requested != self.bundle.model_id:
            self._send(422, {"error": f"model {requested!r} not served here "
                                      f"(serving {self.bundle.model_id!r})"})
            return
        try:
            response = complete(self.bundle, source, cursor, k)
        except CompletionError as exc:
            self._send(422, {"error": str(exc)})
            return
        self._send(200, response)


def make_server(bundle: ModelBundle, port: int, host="127.0.0.1"):
    handler = type("BoundHandler", (_Handler,), {"bundle": bundle})
    return ThreadingHTTPServer((host, port), handler)


def serve(bundle: ModelBundle, port: int, host="127.0.0.1", announce=None):
    server = make_server(bundle, port, host)
    message = f"serving {bundle.model_id} on {host}:{server.server_address[1]}"
    if announce is None:
        print(message, flush=True)
    else:
        announce(message)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0
