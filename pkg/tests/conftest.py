"""Shared builders for the test suite.

Everything here constructs package objects through their public
constructors; independent re-implementations used as oracles live in
``oracles.py`` instead, so the two cannot share bugs.
"""

from __future__ import annotations

import random
from pathlib import Path

import pytest

from docarg.constraints import ConstraintSet
from docarg.corpus import CorefCluster, Document, EventMention, GoldArgument, Span
from docarg.ontology import Ontology, RoleSpec, load_ontology, parse_template

REPO_ROOT = Path(__file__).resolve().parent.parent
KAIROS_PATH = REPO_ROOT / "data" / "ontology" / "kairos.jsonl"
CHECKLIST_PATH = REPO_ROOT / "data" / "constraints" / "curation_checklist.jsonl"

ARREST = "Justice.ArrestJailDetain.Unspecified"
ARREST_TEMPLATE = "<arg1> arrested or jailed <arg2> for <arg3> crime at <arg4> place"


def make_roles(*defs) -> tuple[RoleSpec, ...]:
    """defs: (name, entity_types iterable) in slot order."""
    return tuple(
        RoleSpec(name, frozenset(etypes), i) for i, (name, etypes) in enumerate(defs, 1)
    )


def build_ontology(spec: dict) -> Ontology:
    """spec: event_type -> (role defs, template text)."""
    event_types = {}
    hierarchy = {}
    for etype, (defs, template) in spec.items():
        roles = make_roles(*defs)
        event_types[etype] = (roles, parse_template(template, roles))
        parts = etype.split(".")
        if len(parts) > 1:
            hierarchy[etype] = ".".join(parts[:-1])
    return Ontology(event_types, hierarchy)


def arrest_roles() -> tuple[RoleSpec, ...]:
    return make_roles(
        ("Jailer", ["PER", "ORG", "GPE"]),
        ("Detainee", ["PER"]),
        ("Crime", ["ABS"]),
        ("Place", ["GPE", "LOC", "FAC"]),
    )


def arrest_template():
    return parse_template(ARREST_TEMPLATE, arrest_roles())


def make_doc(
    doc_id: str,
    tokens,
    events=(),
    clusters=(),
    sentence_bounds=None,
) -> Document:
    tokens = tuple(tokens)
    if sentence_bounds is None:
        sentence_bounds = (Span(0, len(tokens)),) if tokens else ()
    return Document(
        doc_id=doc_id,
        tokens=tokens,
        sentence_bounds=tuple(sentence_bounds),
        events=tuple(events),
        clusters=tuple(clusters),
    )


def make_event(event_id, event_type, trigger, args=()):
    """args: (role, (start, end), entity_id) or (role, (start, end), entity_id, head)."""
    arguments = []
    for a in args:
        role, (s, e), entity_id = a[0], a[1], a[2]
        head = Span(*a[3]) if len(a) > 3 and a[3] else None
        arguments.append(GoldArgument(role, Span(s, e), entity_id, head))
    return EventMention(event_id, event_type, Span(*trigger), tuple(arguments))


def make_cluster(cluster_id, entity_id, spans):
    return CorefCluster(cluster_id, entity_id, tuple(Span(s, e) for s, e in spans))


# ---------------------------------------------------------------------------
# Randomized synthetic corpora for the harvester oracle


def random_harvest_case(rng: random.Random):
    """An (ontology, documents) pair within the oracle-equivalence bounds:
    at most 5 event types, 4 roles each, 20 documents."""
    entity_type_pool = ["PER", "ORG", "GPE", "WEA"]
    n_types = rng.randint(2, 5)
    spec = {}
    for t in range(n_types):
        n_roles = rng.randint(1, 4)
        defs = []
        for r in range(n_roles):
            etypes = rng.sample(entity_type_pool, rng.randint(1, 2))
            defs.append((f"Role{r}", etypes))
        template = " ".join(f"<arg{i}> lit{t}x{i}" for i in range(1, n_roles + 1))
        spec[f"Cat{t}.Mid{t}.Leaf{t}"] = (defs, template)
    ontology = build_ontology(spec)
    type_names = sorted(spec)

    docs = []
    n_docs = rng.randint(1, 20)
    for d in range(n_docs):
        n_events = rng.randint(0, 4)
        n_tokens = max(2 * n_events + 4, 6)
        tokens = [f"w{i}" for i in range(n_tokens)]
        events = []
        for i in range(n_events):
            etype = rng.choice(type_names)
            trig = (2 * i, 2 * i + 1)
            args = []
            for role_def in spec[etype][0]:
                for _ in range(rng.randint(0, 2)):
                    s = rng.randrange(n_tokens)
                    args.append(
                        (role_def[0], (s, s + 1), f"ent{rng.randint(0, 4)}")
                    )
            events.append(make_event(f"d{d}e{i}", etype, trig, args))
        docs.append(make_doc(f"doc{d}", tokens, events))
    return ontology, docs


# ---------------------------------------------------------------------------
# Fixtures


@pytest.fixture(scope="session")
def kairos():
    return load_ontology(KAIROS_PATH)


@pytest.fixture()
def empty_constraints():
    return ConstraintSet()
