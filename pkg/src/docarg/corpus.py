"""Documents, gold annotations, and adversarial sentence splicing.

A documents file is line-delimited JSON, one document per line:

    {"doc_id": "d1",
     "tokens": ["The", "police", "arrested", "him", "."],
     "sentence_bounds": [[0, 5]],
     "events": [{"event_id": "d1-e1",
                 "event_type": "Justice.ArrestJailDetain.Unspecified",
                 "trigger": [2, 3],
                 "arguments": [{"role": "Jailer", "span": [1, 2],
                                "entity_id": "ent-police"},
                               {"role": "Detainee", "span": [3, 4],
                                "head": [3, 4], "entity_id": "ent-him"}]}],
     "clusters": [{"cluster_id": "c1", "entity_id": "ent-him",
                   "mentions": [[3, 4]]}]}

All spans are half-open token offset pairs.  ``sentence_bounds`` must
partition ``[0, len(tokens))`` contiguously.  Events are kept sorted by
trigger start; files may list them in any order.

WikiEvents import note: ``doc_id``/``tokens`` map directly; sentence bounds
come from cumulative sentence lengths; each ``event_mentions[*]`` entry maps
to an event here with ``trigger.start/end`` and one argument per
``arguments[*]`` (the argument span is the referenced entity mention's
offsets, its head span the mention head if annotated, ``entity_id`` the
mention's coref-resolved id); coreference clusters map to ``clusters`` with
one mention span per member entity mention.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

from .errors import ParseError, SpanOutOfBounds, ValidationError


@dataclass(frozen=True, order=True)
class Span:
    start: int
    end: int

    def __post_init__(self):
        if self.start < 0 or self.end <= self.start:
            raise SpanOutOfBounds(f"bad span [{self.start}, {self.end})")

    def shifted(self, offset: int) -> "Span":
        return Span(self.start + offset, self.end + offset)


@dataclass(frozen=True)
class GoldArgument:
    role: str
    span: Span
    entity_id: str
    head_span: Span | None = None

    def __post_init__(self):
        h = self.head_span
        if h is not None and not (self.span.start <= h.start and h.end <= self.span.end):
            raise ValidationError(f"head span {h} outside argument span {self.span}")


@dataclass(frozen=True)
class EventMention:
    event_id: str
    event_type: str
    trigger: Span
    arguments: tuple[GoldArgument, ...]


@dataclass(frozen=True)
class CorefCluster:
    cluster_id: str
    entity_id: str
    mention_spans: tuple[Span, ...]


@dataclass(frozen=True)
class Document:
    doc_id: str
    tokens: tuple[str, ...]
    sentence_bounds: tuple[Span, ...]
    events: tuple[EventMention, ...]
    clusters: tuple[CorefCluster, ...]

    def __post_init__(self):
        n = len(self.tokens)
        pos = 0
        for s in self.sentence_bounds:
            if s.start != pos:
                raise ValidationError(
                    f"{self.doc_id}: sentence bounds not contiguous at {pos}"
                )
            pos = s.end
        if pos != n:
            raise ValidationError(
                f"{self.doc_id}: sentence bounds cover [0, {pos}) of {n} tokens"
            )
        for ev in self.events:
            self._check_span(ev.trigger, f"trigger of {ev.event_id}")
            for arg in ev.arguments:
                self._check_span(arg.span, f"argument {arg.role} of {ev.event_id}")
        for cl in self.clusters:
            for sp in cl.mention_spans:
                self._check_span(sp, f"mention of cluster {cl.cluster_id}")
        starts = [ev.trigger.start for ev in self.events]
        if starts != sorted(starts):
            raise ValidationError(f"{self.doc_id}: events not in trigger order")

    def _check_span(self, span: Span, what: str):
        if span.end > len(self.tokens):
            raise SpanOutOfBounds(f"{self.doc_id}: {what} spans {span} beyond doc end")

    def text(self, span: Span) -> str:
        return " ".join(self.tokens[span.start : span.end])


@dataclass(frozen=True)
class DatasetStats:
    doc_count: int
    sentence_count: int
    avg_events: float | None  # None when there are no documents
    avg_tokens: float | None


@dataclass(frozen=True)
class AdversarialInsertion:
    """One whole sentence to splice into a document.

    ``insert_after_sentence`` is a 0-based sentence index; -1 inserts before
    the first sentence.  Spans inside ``events`` are relative to
    ``sentence_tokens``.
    """

    doc_id: str
    insert_after_sentence: int
    sentence_tokens: tuple[str, ...]
    events: tuple[EventMention, ...]


def _span_from(raw, what: str, line_no=None) -> Span:
    if not (isinstance(raw, (list, tuple)) and len(raw) == 2):
        raise ParseError(f"{what}: span must be a [start, end] pair", line=line_no)
    return Span(int(raw[0]), int(raw[1]))


def _event_from(raw: dict, line_no=None) -> EventMention:
    for key in ("event_id", "event_type", "trigger"):
        if key not in raw:
            raise ParseError(f"event missing field {key!r}", line=line_no)
    args = []
    for a in raw.get("arguments", ()):
        for key in ("role", "span", "entity_id"):
            if key not in a:
                raise ParseError(
                    f"argument of {raw['event_id']} missing {key!r}", line=line_no
                )
        head = _span_from(a["head"], "head", line_no) if a.get("head") else None
        args.append(
            GoldArgument(
                role=a["role"],
                span=_span_from(a["span"], "argument span", line_no),
                entity_id=a["entity_id"],
                head_span=head,
            )
        )
    return EventMention(
        event_id=raw["event_id"],
        event_type=raw["event_type"],
        trigger=_span_from(raw["trigger"], "trigger", line_no),
        arguments=tuple(args),
    )


def load_documents(path) -> list[Document]:
    """Load a line-delimited documents file; re-sorts events by trigger."""
    docs = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=line_no) from exc
            for key in ("doc_id", "tokens", "sentence_bounds"):
                if key not in rec:
                    raise ParseError(f"document missing field {key!r}", line=line_no)
            events = sorted(
                (_event_from(e, line_no) for e in rec.get("events", ())),
                key=lambda ev: (ev.trigger.start, ev.trigger.end, ev.event_id),
            )
            clusters = []
            for c in rec.get("clusters", ()):
                for key in ("cluster_id", "entity_id", "mentions"):
                    if key not in c:
                        raise ParseError(f"cluster missing field {key!r}", line=line_no)
                clusters.append(
                    CorefCluster(
                        cluster_id=c["cluster_id"],
                        entity_id=c["entity_id"],
                        mention_spans=tuple(
                            _span_from(m, "cluster mention", line_no)
                            for m in c["mentions"]
                        ),
                    )
                )
            docs.append(
                Document(
                    doc_id=rec["doc_id"],
                    tokens=tuple(rec["tokens"]),
                    sentence_bounds=tuple(
                        _span_from(s, "sentence bound", line_no)
                        for s in rec["sentence_bounds"]
                    ),
                    events=tuple(events),
                    clusters=tuple(clusters),
                )
            )
    return docs


def document_json(doc: Document) -> dict:
    """One line-delimited record per document; inverse of load_documents."""
    span = lambda s: [s.start, s.end]
    events = []
    for ev in doc.events:
        args = []
        for a in ev.arguments:
            entry = {"role": a.role, "span": span(a.span), "entity_id": a.entity_id}
            if a.head_span is not None:
                entry["head"] = span(a.head_span)
            args.append(entry)
        events.append(
            {
                "event_id": ev.event_id,
                "event_type": ev.event_type,
                "trigger": span(ev.trigger),
                "arguments": args,
            }
        )
    rec = {
        "doc_id": doc.doc_id,
        "tokens": list(doc.tokens),
        "sentence_bounds": [span(s) for s in doc.sentence_bounds],
        "events": events,
    }
    if doc.clusters:
        rec["clusters"] = [
            {
                "cluster_id": c.cluster_id,
                "entity_id": c.entity_id,
                "mentions": [span(m) for m in c.mention_spans],
            }
            for c in doc.clusters
        ]
    return rec


def save_documents(docs, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(document_json(doc), ensure_ascii=False) + "\n")


def dataset_stats(docs) -> DatasetStats:
    n = len(docs)
    if n == 0:
        return DatasetStats(0, 0, None, None)
    sentences = sum(len(d.sentence_bounds) for d in docs)
    events = sum(len(d.events) for d in docs)
    tokens = sum(len(d.tokens) for d in docs)
    return DatasetStats(n, sentences, events / n, tokens / n)


def validate_against_ontology(docs, ontology) -> list[str]:
    """Return one message per event whose type or roles the ontology lacks."""
    issues = []
    for doc in docs:
        for ev in doc.events:
            if ev.event_type not in ontology:
                issues.append(f"{doc.doc_id}/{ev.event_id}: unknown type {ev.event_type}")
                continue
            known = {r.role_name for r in ontology.roles_of(ev.event_type)}
            for arg in ev.arguments:
                if arg.role not in known:
                    issues.append(
                        f"{doc.doc_id}/{ev.event_id}: role {arg.role} not in "
                        f"{ev.event_type}"
                    )
    return issues


def _shift_event(ev: EventMention, at: int, by: int) -> EventMention:
    def sh(span: Span) -> Span:
        return span.shifted(by) if span.start >= at else span

    return replace(
        ev,
        trigger=sh(ev.trigger),
        arguments=tuple(
            replace(
                a,
                span=sh(a.span),
                head_span=sh(a.head_span) if a.head_span else None,
            )
            for a in ev.arguments
        ),
    )


def splice_adversarial(doc: Document, insertion: AdversarialInsertion) -> Document:
    """Insert one sentence (with its events) at a sentence boundary.

    Original annotation spans at or after the insertion point shift right by
    the inserted length; inserted event spans are re-based from
    sentence-relative to document offsets.  With no inserted tokens and no
    events the document comes back unchanged.
    """
    k = insertion.insert_after_sentence
    if not insertion.sentence_tokens and not insertion.events:
        return doc
    if not -1 <= k < len(doc.sentence_bounds):
        raise SpanOutOfBounds(
            f"{doc.doc_id}: insert_after_sentence {k} outside "
            f"0..{len(doc.sentence_bounds) - 1}"
        )
    at = 0 if k == -1 else doc.sentence_bounds[k].end
    by = len(insertion.sentence_tokens)

    tokens = doc.tokens[:at] + insertion.sentence_tokens + doc.tokens[at:]
    bounds = (
        doc.sentence_bounds[: k + 1]
        + (Span(at, at + by),)
        + tuple(s.shifted(by) for s in doc.sentence_bounds[k + 1 :])
    )

    inserted = []
    for ev in insertion.events:
        for sp in [ev.trigger] + [a.span for a in ev.arguments]:
            if sp.end > by:
                raise SpanOutOfBounds(
                    f"{doc.doc_id}: inserted event {ev.event_id} spans {sp} "
                    f"outside its sentence"
                )
        inserted.append(_shift_event(ev, at=0, by=at))

    events = sorted(
        [_shift_event(ev, at, by) for ev in doc.events] + inserted,
        key=lambda ev: (ev.trigger.start, ev.trigger.end, ev.event_id),
    )
    clusters = tuple(
        replace(
            c,
            mention_spans=tuple(
                sp.shifted(by) if sp.start >= at else sp for sp in c.mention_spans
            ),
        )
        for c in doc.clusters
    )
    return Document(doc.doc_id, tokens, bounds, tuple(events), clusters)


def load_insertions(path) -> list[AdversarialInsertion]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=line_no) from exc
            for key in ("doc_id", "insert_after_sentence", "sentence_tokens"):
                if key not in rec:
                    raise ParseError(f"insertion missing field {key!r}", line=line_no)
            out.append(
                AdversarialInsertion(
                    doc_id=rec["doc_id"],
                    insert_after_sentence=int(rec["insert_after_sentence"]),
                    sentence_tokens=tuple(rec["sentence_tokens"]),
                    events=tuple(_event_from(e, line_no) for e in rec.get("events", ())),
                )
            )
    return out
