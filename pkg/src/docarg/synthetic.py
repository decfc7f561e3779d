"""Synthetic dependency corpus for end-to-end pipeline checks.

Two event types share a person-filled role.  Training documents keep
those roles on distinct entities, so harvesting labels the cross-type
pair improbable.  Each evaluation document then plants the earlier
event's argument name throughout the context and gives the later event
no informative argument of its own: a copy-driven generator reuses the
known name for the later event's slot, which the constraint adjustment
must suppress.  Spurious conflicting-role assignments are therefore the
efficacy measure — the unconstrained run commits at least one per
document, the constrained run none.
"""

from __future__ import annotations

import random

from .constraints import ConstraintSet, is_improbable
from .corpus import Document, EventMention, GoldArgument, Span
from .generation import NgramGenerator, gold_training_pairs, train_ngram
from .memory import DocumentMemory, EventRecord
from .ontology import Ontology, RoleSpec, parse_template

COLLAPSE = "Harm.Collapse.Collapse"
ASSAULT = "Harm.Assault.Assault"

# The templates share the prefix literal "got" on purpose: decoding both
# types walks the same trained n-gram contexts, so the later event's
# first slot is filled from the copy channel before the sequences end.
_SPEC = {
    COLLAPSE: ((("Casualty", ("PER",)),), "<arg1> got hurt"),
    ASSAULT: (
        (("Assailant", ("PER",)), ("Weapon", ("WEA",))),
        "<arg1> got rough with <arg2> weapon",
    ),
}


def build_synthetic_ontology() -> Ontology:
    event_types = {}
    hierarchy = {}
    for etype, (defs, text) in _SPEC.items():
        roles = tuple(
            RoleSpec(name, frozenset(etypes), i)
            for i, (name, etypes) in enumerate(defs, 1)
        )
        event_types[etype] = (roles, parse_template(text, roles))
        hierarchy[etype] = etype.rsplit(".", 1)[0]
    return Ontology(event_types, hierarchy)


def _doc(doc_id, sentences, events) -> Document:
    tokens, bounds, pos = [], [], 0
    for sent in sentences:
        tokens.extend(sent)
        bounds.append(Span(pos, pos + len(sent)))
        pos += len(sent)
    return Document(doc_id, tuple(tokens), tuple(bounds), tuple(events), ())


def training_corpus(n_docs: int = 20) -> list[Document]:
    """Both event types per document, always on distinct entities."""
    docs = []
    for t in range(n_docs):
        casualty, assailant, weapon = f"Resident{t}", f"Visitor{t}", f"club{t}"
        sentences = [
            [casualty, "collapsed", "."],
            [assailant, "prodded", "people", "using", weapon, "."],
        ]
        events = [
            EventMention(
                f"t{t}c", COLLAPSE, Span(1, 2),
                (GoldArgument("Casualty", Span(0, 1), f"cas{t}"),),
            ),
            EventMention(
                f"t{t}a", ASSAULT, Span(4, 5),
                (
                    GoldArgument("Assailant", Span(3, 4), f"asl{t}"),
                    GoldArgument("Weapon", Span(7, 8), f"wpn{t}"),
                ),
            ),
        ]
        docs.append(_doc(f"train{t}", sentences, events))
    return docs


def adversarial_corpus(n_docs: int = 20, seed: int = 0) -> list[Document]:
    """The dependency documents: only the first event names its argument.

    The casualty name is the most frequent copyable token in the whole
    document, so an unconstrained copy-channel decode reuses it for the
    second event's person slot.
    """
    docs = []
    for d in range(n_docs):
        rng = random.Random(seed * 1000 + d)
        name = f"Victim{d}"
        verb = rng.choice(["moaned", "wailed", "slumped"])
        subject = rng.choice(["somebody", "someone"])
        where = rng.choice(["nearby", "outside"])
        sentences = [
            [name, "collapsed", name, verb, "."],
            [subject, "prodded", name, where, name, "."],
        ]
        events = [
            EventMention(
                f"d{d}c", COLLAPSE, Span(1, 2),
                (GoldArgument("Casualty", Span(0, 1), f"vic{d}"),),
            ),
            # no informative assailant exists anywhere in the document
            EventMention(f"d{d}a", ASSAULT, Span(6, 7), ()),
        ]
        docs.append(_doc(f"adv{d}", sentences, events))
    return docs


def train_synthetic_generator(
    ontology: Ontology, docs, max_input_length: int = 360
) -> NgramGenerator:
    """Fit the backoff n-gram on gold (input, target) pairs."""
    return train_ngram(gold_training_pairs(ontology, docs, max_input_length))


def count_conflicting_assignments(records, cs: ConstraintSet) -> int:
    """Replay records in emission order; count assignments whose entity the
    memory already held under an improbable partner role."""
    mem = DocumentMemory()
    violations = 0
    for rec in records:
        for role, texts in rec.role_assignments.items():
            for text in texts:
                if any(
                    is_improbable(cs, (rec.event_type, role), (etype, prior))
                    for etype, prior, _count in mem.entity_roles(text)
                ):
                    violations += 1
        mem.add_event(rec)
    return violations


def records_from_predictions(rows) -> dict[str, list[EventRecord]]:
    """Rebuild per-document record streams from prediction JSON rows."""
    by_doc: dict[str, list[EventRecord]] = {}
    for row in rows:
        by_doc.setdefault(row["doc_id"], []).append(
            EventRecord(
                event_id=row["event_id"],
                event_type=row["event_type"],
                sequence_tokens=(),
                role_assignments={
                    role: tuple(e["text"] for e in entries)
                    for role, entries in row["role_assignments"].items()
                },
            )
        )
    return by_doc
