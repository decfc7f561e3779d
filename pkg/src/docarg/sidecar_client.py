"""Client for external model sidecars over line-delimited JSON.

One request, one reply, one line of JSON each.  Requests:

    {"op": "hello"}                          -> {"dim": int, "vocab": [..]?}
    {"op": "embed", "text": [words]}         -> {"vec": [floats]}
    {"op": "next", "input": [..], "prefix": [..]} -> {"probs": {token: p}}

Servers may reply {"error": "..."} to any request and keep the session
alive; the client surfaces that as ProtocolError.  ``next`` replies may be
top-k truncated: the residual mass goes to ``<unk>`` client-side, then the
distribution is renormalized.

Endpoints: ``tcp:HOST:PORT`` (or bare ``HOST:PORT``) connects a socket;
``cmd:COMMAND`` spawns the command and talks over its stdin/stdout.
"""

from __future__ import annotations

import json
import math
import queue
import shlex
import socket
import subprocess
import threading

import numpy as np

from .errors import ProtocolError, SidecarTimeout
from .generation import EOS, TokenDistribution, UNK
from .retrieval import Embedding

SUM_TOL = 1e-6


class _Connection:
    """One line-oriented channel with a background reader thread."""

    def __init__(self, endpoint: str, timeout: float):
        self.timeout = timeout
        self._lock = threading.Lock()
        self._replies: queue.Queue = queue.Queue()
        if endpoint.startswith("cmd:"):
            self._proc = subprocess.Popen(
                shlex.split(endpoint[4:]),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
            self._write = self._proc.stdin.write
            self._flush = self._proc.stdin.flush
            reader = self._proc.stdout
        else:
            spec = endpoint[4:] if endpoint.startswith("tcp:") else endpoint
            host, _, port = spec.rpartition(":")
            if not host or not port.isdigit():
                raise ProtocolError(f"bad endpoint {endpoint!r}")
            self._sock = socket.create_connection((host, int(port)), timeout=timeout)
            self._proc = None
            fh = self._sock.makefile("rw", encoding="utf-8", newline="\n")
            self._write = fh.write
            self._flush = fh.flush
            reader = fh
        self._reader_thread = threading.Thread(
            target=self._pump, args=(reader,), daemon=True
        )
        self._reader_thread.start()

    def _pump(self, reader):
        try:
            for line in reader:
                self._replies.put(line)
        except Exception:
            pass
        self._replies.put(None)

    def request(self, payload: dict) -> dict:
        with self._lock:
            try:
                self._write(json.dumps(payload) + "\n")
                self._flush()
            except (BrokenPipeError, OSError) as exc:
                raise ProtocolError(f"sidecar connection lost: {exc}") from exc
            try:
                line = self._replies.get(timeout=self.timeout)
            except queue.Empty:
                raise SidecarTimeout(
                    f"no reply within {self.timeout}s to op {payload.get('op')!r}"
                ) from None
        if line is None:
            raise ProtocolError("sidecar closed the connection")
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"reply is not valid JSON: {exc.msg}") from exc
        if not isinstance(reply, dict):
            raise ProtocolError("reply is not a JSON object")
        if "error" in reply:
            raise ProtocolError(f"sidecar error: {reply['error']}")
        return reply

    def close(self):
        if self._proc is not None:
            self._proc.stdin.close()
            self._proc.wait(timeout=5)
        else:
            # shutdown, not just close: the reader thread's file handle keeps
            # the descriptor alive, so close() alone never sends FIN
            try:
                self._sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            self._sock.close()


class SidecarEmbedder:
    """Embedder backed by a sidecar's ``embed`` op."""

    def __init__(self, endpoint: str, timeout: float = 30.0):
        self._conn = _Connection(endpoint, timeout)
        hello = self._conn.request({"op": "hello"})
        if not isinstance(hello.get("dim"), int) or hello["dim"] < 1:
            raise ProtocolError("hello reply field 'dim' must be a positive int")
        self.dimension = hello["dim"]

    def embed(self, tokens) -> Embedding:
        reply = self._conn.request({"op": "embed", "text": list(tokens)})
        vec = reply.get("vec")
        if not isinstance(vec, list) or len(vec) != self.dimension:
            raise ProtocolError(
                f"embed reply field 'vec' must be a list of {self.dimension} numbers"
            )
        values = np.asarray(vec, dtype=np.float64)
        norm = float(np.linalg.norm(values))
        if abs(norm - 1.0) > SUM_TOL:
            raise ProtocolError(f"embed reply field 'vec' has norm {norm}, want 1")
        return Embedding(values / norm)

    def close(self):
        self._conn.close()


class SidecarGenerator:
    """Generator backed by a sidecar's ``next`` op."""

    def __init__(self, endpoint: str, timeout: float = 30.0):
        self.endpoint = endpoint
        self.timeout = timeout
        self._conn = _Connection(endpoint, timeout)
        hello = self._conn.request({"op": "hello"})
        vocab = hello.get("vocab")
        self.vocabulary = frozenset(vocab) if vocab else frozenset({EOS})

    def next_distribution(self, ginput, prefix) -> TokenDistribution:
        reply = self._conn.request(
            {"op": "next", "input": list(ginput.rendered), "prefix": list(prefix)}
        )
        probs = reply.get("probs")
        if not isinstance(probs, dict) or not probs:
            raise ProtocolError("next reply field 'probs' must be a non-empty object")
        out: dict[str, float] = {}
        for tok, p in probs.items():
            if not isinstance(p, (int, float)) or p < 0:
                raise ProtocolError(f"next reply field 'probs[{tok!r}]' is not a "
                                    "non-negative number")
            out[str(tok)] = float(p)
        total = math.fsum(out.values())
        if total > 1.0 + SUM_TOL:
            raise ProtocolError(f"next reply field 'probs' sums to {total} > 1")
        residual = max(0.0, 1.0 - total)
        if residual:
            out[UNK] = out.get(UNK, 0.0) + residual
        total = math.fsum(out.values())
        return TokenDistribution({t: p / total for t, p in out.items()})

    def close(self):
        self._conn.close()
