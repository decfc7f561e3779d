"""Knowledge-constrained probability adjustment and the extraction loop.

While the decoder is inside a template slot, the adjuster inspects the
document memory: an entity already recorded under a role that forms an
improbable pair with the slot's role gets its continuation tokens scaled by
``penalty`` (0 blocks outright); an entity recorded strictly more than
``promotion_min_count`` times under a role whose strongest probable partner
is the slot's role gets its continuation tokens scaled by ``boost``.  A
token hit by both keeps the penalty.  The result is renormalized to sum 1.

Continuation semantics: the argument text being written is the slot content
since the last ``and``.  For each tracked entity, every suffix of that
segment matching a proper prefix of the entity's tokens marks the next
entity token; with no such suffix the entity's first token is marked.  An
entity mentioned by the current event's own earlier slots is not penalized:
memory is only updated after the whole event is decoded.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .constraints import ConstraintSet, is_improbable, probable_partner
from .corpus import Document, EventMention, Span
from .errors import DocargError, ExtractionError, UnknownEventType, ValidationError
from .generation import (
    EOS,
    TokenDistribution,
    build_input,
    context_window,
    decode_greedy,
    render_template_segment,
)
from .memory import DocumentMemory, EventRecord
from .ontology import Ontology, template_of
from .retrieval import Embedder, retrieve, retrieve_random
from .templates import PLACEHOLDER, SlotState, parse_decoded

import zlib


@dataclass(frozen=True)
class AdjustConfig:
    penalty: float = 0.01  # multiplier for conflicting-entity continuations
    boost: float = 1.5  # multiplier for promoted-entity continuations
    promotion_min_count: int = 5  # promote only strictly above this count
    penalize: bool = True
    promote: bool = True

    def __post_init__(self):
        if not 0.0 <= self.penalty <= 1.0 <= self.boost:
            raise ValidationError(
                f"need 0 <= penalty <= 1 <= boost, got {self.penalty}, {self.boost}"
            )


class BlockIndex:
    """Prefix tree over entity token sequences.

    Built per (memory state, active role); cheap because memories hold at
    most a document's worth of entities.  ``continuations`` returns the
    tokens that would extend any tracked entity given the current argument
    segment.
    """

    def __init__(self, entities):
        self._root: dict = {}
        for text in entities:
            node = self._root
            for tok in text.split():
                node = node.setdefault(tok, {})

    def __bool__(self) -> bool:
        return bool(self._root)

    def _walk(self, tokens) -> dict | None:
        node = self._root
        for tok in tokens:
            node = node.get(tok)
            if node is None:
                return None
        return node

    def continuations(self, segment) -> set[str]:
        marked: set[str] = set()
        matched = False
        for j in range(1, len(segment) + 1):
            node = self._walk(segment[len(segment) - j :])
            if node is not None:
                matched = True
                marked.update(node.keys())
        if not matched:
            marked.update(self._root.keys())
        return marked


def _conflicting_entities(
    mem: DocumentMemory, cs: ConstraintSet, slot: tuple[str, str]
) -> list[str]:
    out = []
    for entity, counts in mem.entity_index.items():
        if any(is_improbable(cs, slot, held) for held in counts):
            out.append(entity)
    return out


def _promoted_entities(
    mem: DocumentMemory, cs: ConstraintSet, slot: tuple[str, str], min_count: int
) -> list[str]:
    out = []
    for entity, etype, role, _count in mem.promotion_candidates(min_count):
        if probable_partner(cs, (etype, role)) == slot:
            out.append(entity)
    return out


def adjust(
    dist: TokenDistribution,
    slot: SlotState,
    current_event_type: str,
    mem: DocumentMemory,
    cs: ConstraintSet,
    cfg: AdjustConfig,
) -> TokenDistribution:
    """Scale blocked/promoted continuation tokens and renormalize.

    Outside a slot, after derailment, or when nothing applies, the input
    distribution is returned unchanged (same object)."""
    if not slot.in_slot:
        return dist
    active = (current_event_type, slot.active_role)
    segment = slot.current_segment()

    penalized: set[str] = set()
    if cfg.penalize and cs.improbable:
        index = BlockIndex(_conflicting_entities(mem, cs, active))
        if index:
            penalized = index.continuations(segment)
    boosted: set[str] = set()
    if cfg.promote and cs.probable:
        index = BlockIndex(
            _promoted_entities(mem, cs, active, cfg.promotion_min_count)
        )
        if index:
            boosted = index.continuations(segment)
    if not penalized and not boosted:
        return dist

    probs = {}
    for tok, p in dist.probs.items():
        if tok in penalized:
            p = p * cfg.penalty  # penalty wins over boost
        elif tok in boosted:
            p = p * cfg.boost
        probs[tok] = p
    total = sum(probs.values())
    if total <= 0.0:
        # Every token was hard-blocked; fall back to the empty placeholder
        # so the slot closes without naming a conflicting entity.
        return TokenDistribution({PLACEHOLDER: 1.0})
    return TokenDistribution({t: p / total for t, p in probs.items()})


@dataclass(frozen=True)
class ExtractOptions:
    constrained: bool = True
    ablation: str = "none"  # none | no_retrieval | random_memory
    max_input_length: int = 360
    max_steps: int = 128
    seed: int = 13

    def __post_init__(self):
        if self.ablation not in ("none", "no_retrieval", "random_memory"):
            raise ValidationError(f"unknown ablation {self.ablation!r}")


def _event_seed(base: int, doc_id: str, ordinal: int) -> int:
    return zlib.crc32(f"{base}:{doc_id}:{ordinal}".encode("utf-8"))


def retrieval_query(
    doc: Document, trigger: Span, options: ExtractOptions
) -> tuple[str, ...]:
    """Context tokens used to query memory: the trigger window, markers off."""
    window = context_window(doc, trigger, options.max_input_length)
    return tuple(t for t in window if t not in ("<trg>", "</trg>"))


def extract_event(
    doc: Document,
    event: EventMention,
    ontology: Ontology,
    generator,
    cs: ConstraintSet,
    cfg: AdjustConfig,
    mem: DocumentMemory,
    embedder: Embedder,
    options: ExtractOptions,
    ordinal: int = 0,
    input_sink: list | None = None,
) -> EventRecord:
    """Decode one event and append its record to the document memory."""
    try:
        template = template_of(ontology, event.event_type)
        if options.ablation == "no_retrieval":
            retrieved = None
        elif options.ablation == "random_memory":
            retrieved = retrieve_random(
                mem, _event_seed(options.seed, doc.doc_id, ordinal)
            )
        else:
            retrieved = retrieve(
                retrieval_query(doc, event.trigger, options), mem, embedder
            )
        ginput = build_input(
            retrieved, template, doc, event.trigger, options.max_input_length
        )
        if input_sink is not None:
            input_sink.append((event.event_id, ginput))

        adjuster = None
        if options.constrained:
            def adjuster(dist, state, _etype=event.event_type):
                return adjust(dist, state, _etype, mem, cs, cfg)

        decoded = decode_greedy(
            generator, ginput, template, adjuster, max_steps=options.max_steps
        )
        parsed = parse_decoded(decoded, template)
        role_assignments = {
            template.role_of(idx).role_name: texts
            for idx, texts in sorted(parsed.slots.items())
        }
        record = EventRecord(
            event_id=event.event_id,
            event_type=event.event_type,
            sequence_tokens=decoded,
            role_assignments=role_assignments,
            source="generated",
        )
        mem.add_event(record)
        return record
    except DocargError as exc:
        raise ExtractionError(event.event_id, exc) from exc


@dataclass
class DocumentResult:
    doc_id: str
    records: list[EventRecord] = field(default_factory=list)
    errors: list[ExtractionError] = field(default_factory=list)
    inputs: list = field(default_factory=list)  # (event_id, GeneratorInput)

    @property
    def partial(self) -> bool:
        return bool(self.errors)


def extract_document(
    doc: Document,
    ontology: Ontology,
    generator,
    cs: ConstraintSet,
    cfg: AdjustConfig,
    embedder: Embedder,
    options: ExtractOptions,
    keep_inputs: bool = False,
) -> DocumentResult:
    """Extract every event of a document against a fresh memory.

    Events run in trigger order; a failing event is recorded and skipped,
    and later events still run (the result is flagged partial)."""
    mem = DocumentMemory()
    result = DocumentResult(doc.doc_id)
    sink = result.inputs if keep_inputs else None
    for ordinal, event in enumerate(doc.events):
        try:
            result.records.append(
                extract_event(
                    doc, event, ontology, generator, cs, cfg, mem, embedder,
                    options, ordinal=ordinal, input_sink=sink,
                )
            )
        except ExtractionError as exc:
            result.errors.append(exc)
    return result


def _occurrences(tokens: tuple[str, ...], needle: tuple[str, ...]) -> list[int]:
    n = len(needle)
    return [
        i for i in range(len(tokens) - n + 1) if tokens[i : i + n] == needle
    ]


def resolve_span(doc: Document, text: str, trigger: Span) -> Span | None:
    """Doc offsets of an argument text: the occurrence nearest the trigger.

    Ties prefer the earlier occurrence; None when the text never occurs."""
    needle = tuple(text.split())
    if not needle:
        return None
    starts = _occurrences(doc.tokens, needle)
    if not starts:
        return None
    best = min(starts, key=lambda s: (abs(s - trigger.start), s))
    return Span(best, best + len(needle))


def prediction_json(doc: Document, event: EventMention, record: EventRecord) -> dict:
    """Serializable prediction row with spans resolved where possible."""
    roles = {}
    for role, texts in record.role_assignments.items():
        resolved = []
        for text in texts:
            span = resolve_span(doc, text, event.trigger)
            entry = {"text": text}
            if span is not None:
                entry["span"] = [span.start, span.end]
            resolved.append(entry)
        roles[role] = resolved
    return {
        "doc_id": doc.doc_id,
        "event_id": record.event_id,
        "event_type": record.event_type,
        "role_assignments": roles,
    }
