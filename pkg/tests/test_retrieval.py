"""Embedding, memory scoring, and retrieval selection."""

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from docarg.errors import EmptyMemory, ValidationError
from docarg.memory import DocumentMemory, EventRecord
from docarg.retrieval import (
    Embedding,
    HashedTfidfEmbedder,
    embed_default,
    retrieve,
    retrieve_random,
    score_memory,
)
from oracles import argmax_lowest_index, cosine, softmax


def record(i, tokens):
    return EventRecord(f"e{i}", "T.M.L", tuple(tokens), {})


def memory_of(*token_lists):
    mem = DocumentMemory()
    for i, tokens in enumerate(token_lists):
        mem.add_event(record(i, tokens))
    return mem


class PlantedEmbedder:
    """Maps specific token tuples to preset 2-d unit vectors."""

    dimension = 2

    def __init__(self, table):
        self.table = {tuple(k): np.asarray(v, dtype=float) for k, v in table.items()}

    def embed(self, tokens):
        vec = self.table[tuple(tokens)]
        return Embedding(vec / np.linalg.norm(vec))


def planted_cosines(values):
    """Embedder + memory with the given query-record cosines."""
    table = {("q",): (1.0, 0.0)}
    token_lists = []
    for i, f in enumerate(values):
        tokens = (f"m{i}",)
        table[tokens] = (f, math.sqrt(1.0 - f * f))
        token_lists.append(tokens)
    return PlantedEmbedder(table), memory_of(*token_lists)


class TestEmbedding:
    def test_unit_norm_enforced(self):
        Embedding(np.array([0.6, 0.8]))
        with pytest.raises(ValidationError):
            Embedding(np.array([0.6, 0.9]))

    def test_default_embedder_is_deterministic(self):
        a = embed_default(("bomb", "attack"))
        b = embed_default(("bomb", "attack"))
        assert np.array_equal(a.values, b.values)

    def test_every_embedding_has_unit_norm(self):
        emb = HashedTfidfEmbedder(dimension=32)
        for text in (["a"], ["a", "b", "c"], [], ["a"] * 50):
            assert abs(np.linalg.norm(emb.embed(text).values) - 1.0) < 1e-6

    def test_empty_text_maps_to_fixed_basis_vector(self):
        emb = HashedTfidfEmbedder(dimension=8)
        vec = emb.embed([]).values
        assert vec[0] == 1.0 and np.count_nonzero(vec) == 1

    def test_fitted_idf_separates_topics(self):
        corpus = [
            "bomb attack today".split(),
            "bomb attack injured many".split(),
            "court hearing today".split(),
            "court hearing adjourned".split(),
        ]
        emb = HashedTfidfEmbedder(dimension=64).fit(corpus)
        q = emb.embed("bomb attack".split()).values
        near = emb.embed("bomb attack today".split()).values
        far = emb.embed("court hearing".split()).values
        assert cosine(q, near) > cosine(q, far)

    def test_dimension_must_be_positive(self):
        with pytest.raises(ValidationError):
            HashedTfidfEmbedder(dimension=0)


class TestScoreMemory:
    def test_singleton_memory_scores_one(self):
        emb, mem = planted_cosines([0.3])
        assert score_memory(["q"], mem, emb) == [(0, 1.0)]

    def test_identical_records_split_mass_evenly(self):
        emb = HashedTfidfEmbedder(dimension=16)
        mem = memory_of(["same", "text"], ["same", "text"])
        scores = dict(score_memory(["query", "words"], mem, emb))
        assert scores[0] == pytest.approx(0.5, abs=1e-12)
        assert scores[1] == pytest.approx(0.5, abs=1e-12)

    def test_matches_plain_softmax_oracle(self):
        emb, mem = planted_cosines([0.9, 0.1, 0.1])
        got = score_memory(["q"], mem, emb)
        expected = softmax([0.9, 0.1, 0.1])
        for (i, p), want in zip(got, expected):
            assert p == pytest.approx(want, abs=1e-12)
        assert max(got, key=lambda t: t[1])[0] == 0

    def test_empty_memory_is_an_error(self):
        emb = HashedTfidfEmbedder(dimension=8)
        with pytest.raises(EmptyMemory):
            score_memory(["q"], DocumentMemory(), emb)

    @given(st.lists(st.floats(min_value=-1.0, max_value=1.0), min_size=1, max_size=40))
    @settings(max_examples=60, deadline=None)
    def test_scores_sum_to_one_and_lie_in_unit_interval(self, sims):
        emb, mem = planted_cosines(sims)
        scores = score_memory(["q"], mem, emb)
        total = sum(p for _, p in scores)
        assert abs(total - 1.0) <= 1e-9
        assert all(0.0 < p <= 1.0 for _, p in scores)

    def test_shifting_all_similarities_leaves_scores_unchanged(self):
        base = [0.4, -0.2, 0.1]
        emb_a, mem_a = planted_cosines(base)
        emb_b, mem_b = planted_cosines([s + 0.5 for s in base])
        a = [p for _, p in score_memory(["q"], mem_a, emb_a)]
        b = [p for _, p in score_memory(["q"], mem_b, emb_b)]
        assert a == pytest.approx(b, abs=1e-12)


class TestRetrieve:
    def test_exact_copy_of_a_record_retrieves_it(self):
        emb = HashedTfidfEmbedder(dimension=64)
        mem = memory_of(
            "police arrested the suspect".split(),
            "a bomb exploded downtown".split(),
            "the court sentenced him".split(),
        )
        got = retrieve("a bomb exploded downtown".split(), mem, emb)
        assert got is mem.records[1]

    def test_empty_memory_returns_none(self):
        emb = HashedTfidfEmbedder(dimension=8)
        assert retrieve(["q"], DocumentMemory(), emb) is None

    def test_all_identical_records_tie_to_the_first(self):
        emb = HashedTfidfEmbedder(dimension=16)
        mem = memory_of(["same"], ["same"], ["same"])
        assert retrieve(["q"], mem, emb) is mem.records[0]

    @given(
        st.lists(st.floats(min_value=-1.0, max_value=1.0), min_size=1, max_size=100)
    )
    @settings(max_examples=60, deadline=None)
    def test_selection_agrees_with_raw_similarity_argmax(self, sims):
        emb, mem = planted_cosines(sims)
        got = retrieve(["q"], mem, emb)
        assert got is mem.records[argmax_lowest_index(sims)]


class TestRetrieveRandom:
    def test_singleton_memory_always_selected(self):
        mem = memory_of(["only"])
        for seed in range(5):
            assert retrieve_random(mem, seed) is mem.records[0]

    def test_fixed_seed_is_reproducible(self):
        mem = memory_of(["a"], ["b"], ["c"])
        first = retrieve_random(mem, 42)
        assert all(retrieve_random(mem, 42) is first for _ in range(10))

    def test_empty_memory_returns_none(self):
        assert retrieve_random(DocumentMemory(), 0) is None

    def test_draws_are_near_uniform(self):
        mem = memory_of(["a"], ["b"], ["c"], ["d"])
        counts = [0, 0, 0, 0]
        for seed in range(10_000):
            rec = retrieve_random(mem, seed)
            counts[mem.records.index(rec)] += 1
        for c in counts:
            assert abs(c / 10_000 - 0.25) <= 0.02
