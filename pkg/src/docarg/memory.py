"""Per-document memory of already-generated (or gold) event sequences.

One DocumentMemory lives for the duration of one document and is discarded
afterwards; nothing leaks across documents.  Entity identity is the exact
generated text, case-sensitive, no normalization.  Single-writer: the
extraction loop for a document owns its memory; share nothing across
threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence


@dataclass(frozen=True)
class EventRecord:
    event_id: str
    event_type: str
    sequence_tokens: tuple[str, ...]
    role_assignments: Mapping[str, tuple[str, ...]]  # role -> entity texts
    source: str = "generated"  # or "gold"


@dataclass
class DocumentMemory:
    records: list[EventRecord] = field(default_factory=list)
    # entity text -> {(event_type, role): count}
    entity_index: dict[str, dict[tuple[str, str], int]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)

    def add_event(self, rec: EventRecord) -> "DocumentMemory":
        self.records.append(rec)
        for role, texts in rec.role_assignments.items():
            for text in texts:
                counts = self.entity_index.setdefault(text, {})
                key = (rec.event_type, role)
                counts[key] = counts.get(key, 0) + 1
        return self

    def entity_roles(self, entity: str) -> list[tuple[str, str, int]]:
        """(event_type, role, count) triples for an exact entity text."""
        counts = self.entity_index.get(entity, {})
        return [(t, r, c) for (t, r), c in counts.items()]

    def promotion_candidates(
        self, min_count: int = 5
    ) -> list[tuple[str, str, str, int]]:
        """Entities recorded under one role strictly more than min_count times.

        Returns (entity, event_type, role, count) in first-seen order."""
        out = []
        for entity, counts in self.entity_index.items():
            for (etype, role), c in counts.items():
                if c > min_count:
                    out.append((entity, etype, role, c))
        return out


def add_event(mem: DocumentMemory, rec: EventRecord) -> DocumentMemory:
    return mem.add_event(rec)


def gold_record(doc, event, ontology) -> EventRecord:
    """Build the memory record a gold annotation implies.

    The sequence is the filled template; role assignments are the gold
    argument texts grouped by role, in document order.
    """
    from .ontology import template_of
    from .templates import fill_template

    template = template_of(ontology, event.event_type)
    roles = {r.role_name: r.slot_index for r in ontology.roles_of(event.event_type)}
    assignment: dict[int, list[str]] = {}
    role_texts: dict[str, list[str]] = {}
    for arg in sorted(event.arguments, key=lambda a: (a.span.start, a.span.end)):
        if arg.role not in roles:
            continue
        text = doc.text(arg.span)
        assignment.setdefault(roles[arg.role], []).append(text)
        role_texts.setdefault(arg.role, []).append(text)
    seq = fill_template(template, assignment)
    return EventRecord(
        event_id=event.event_id,
        event_type=event.event_type,
        sequence_tokens=seq.tokens,
        role_assignments={r: tuple(v) for r, v in role_texts.items()},
        source="gold",
    )
