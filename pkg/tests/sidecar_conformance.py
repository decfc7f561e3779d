"""Protocol conformance checks runnable against any sidecar endpoint.

Each check drives the real client classes, so passing here means the
server interoperates with the pipeline, not merely that its JSON looks
right.  The functions raise AssertionError (or a client error) on any
violation; ``run_all`` is the one-call entry point used both against the
bundled stub and against external sidecar implementations.
"""

import numpy as np

from docarg.errors import ProtocolError
from docarg.generation import GeneratorInput
from docarg.sidecar_client import SidecarEmbedder, SidecarGenerator

PROBE_INPUT = GeneratorInput(
    memory_segment=None,
    template_segment=("tpl",),
    context_segment=("ctx",),
    rendered=("<S>", "tpl", "</S>", "ctx", "[EOS]"),
)


def check_embedder(endpoint):
    emb = SidecarEmbedder(endpoint)
    try:
        assert emb.dimension >= 1
        v1 = emb.embed(["the", "arrest", "happened"])
        v2 = emb.embed(["the", "arrest", "happened"])
        assert abs(float(np.linalg.norm(v1.values)) - 1.0) <= 1e-6
        assert np.array_equal(v1.values, v2.values), "embed must be deterministic"
        v3 = emb.embed(["something", "entirely", "different"])
        assert len(v3.values) == emb.dimension
    finally:
        emb.close()


def check_error_reply_keeps_session(endpoint):
    emb = SidecarEmbedder(endpoint)
    try:
        try:
            emb._conn.request({"op": "definitely-not-an-op"})
        except ProtocolError:
            pass
        else:
            raise AssertionError("unknown op must produce an error reply")
        emb.embed(["still", "alive"])
    finally:
        emb.close()


def check_generator(endpoint):
    gen = SidecarGenerator(endpoint)
    try:
        dists = [
            gen.next_distribution(PROBE_INPUT, ()),
            gen.next_distribution(PROBE_INPUT, ("a",)),
        ]
        for dist in dists:
            dist.check(1e-9)
        return dists
    finally:
        gen.close()


def check_one_reply_per_request(endpoint):
    """Alternating ops stay in lockstep over a single connection."""
    gen = SidecarGenerator(endpoint)
    try:
        for _ in range(10):
            reply = gen._conn.request({"op": "hello"})
            assert isinstance(reply.get("dim"), int)
            gen.next_distribution(PROBE_INPUT, ()).check(1e-9)
    finally:
        gen.close()


def run_all(endpoint):
    check_embedder(endpoint)
    check_error_reply_keeps_session(endpoint)
    check_generator(endpoint)
    check_one_reply_per_request(endpoint)
