"""Filling templates into target sequences and parsing decoded sequences back.

A target sequence is the template with each slot replaced by argument text
(multiple arguments joined with a bare ``and``) or by the placeholder token
``<arg>`` when the slot has no argument.  ``parse_decoded`` inverts that
greedily, anchoring on template literals left to right; it never raises, and
reports misalignment through a flag instead.

``SlotState`` is the companion automaton used during decoding: fed one
emitted token at a time, it tracks which slot (if any) the decoder is
currently filling so that a probability adjuster can reason about the role
under construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from .corpus import Document, Span
from .errors import UnknownSlot
from .ontology import EventTemplate, Literal, Slot

PLACEHOLDER = "<arg>"
JOINER = "and"


@dataclass(frozen=True)
class Tag:
    """Provenance of one target-sequence token.

    kind is "literal" for template words, "content" for argument text, or
    "placeholder" for an empty slot; slot is the owning slot index for the
    latter two.
    """

    kind: str
    slot: int | None = None


@dataclass(frozen=True)
class TargetSequence:
    tokens: tuple[str, ...]
    tags: tuple[Tag, ...]

    def __post_init__(self):
        assert len(self.tokens) == len(self.tags)


def fill_template(
    template: EventTemplate,
    assignment: Mapping[int, Sequence[str | Span]],
    doc: Document | None = None,
) -> TargetSequence:
    """Render a template with slot assignments into a target sequence.

    Assignment values are argument texts (or Spans resolved through doc).
    Slots without an assignment render as the single ``<arg>`` token.
    Raises UnknownSlot for assignment keys with no template placeholder.
    """
    valid = set(template.slot_indices)
    for idx in assignment:
        if idx not in valid:
            raise UnknownSlot(f"slot {idx} not in template")
    tokens: list[str] = []
    tags: list[Tag] = []
    for tok in template.tokens:
        if isinstance(tok, Literal):
            tokens.append(tok.word)
            tags.append(Tag("literal"))
            continue
        fillers = assignment.get(tok.index, ())
        if not fillers:
            tokens.append(PLACEHOLDER)
            tags.append(Tag("placeholder", tok.index))
            continue
        for pos, filler in enumerate(fillers):
            if isinstance(filler, Span):
                if doc is None:
                    raise UnknownSlot(f"slot {tok.index}: Span filler without document")
                filler = doc.text(filler)
            if pos:
                tokens.append(JOINER)
                tags.append(Tag("content", tok.index))
            for word in filler.split():
                tokens.append(word)
                tags.append(Tag("content", tok.index))
    return TargetSequence(tuple(tokens), tuple(tags))


@dataclass(frozen=True)
class ParsedAssignment:
    """Slot contents recovered from a decoded sequence.

    ``aligned`` is False when some template literal could not be anchored or
    tokens were left over with no slot to hold them; slots parsed before the
    failure are still reported.
    """

    slots: dict[int, tuple[str, ...]]
    aligned: bool = True


def _content_to_args(content: Sequence[str]) -> tuple[str, ...]:
    # Placeholder tokens never survive into argument text.
    words = [w for w in content if w != PLACEHOLDER]
    args: list[str] = []
    current: list[str] = []
    for w in words:
        if w == JOINER:
            if current:
                args.append(" ".join(current))
            current = []
        else:
            current.append(w)
    if current:
        args.append(" ".join(current))
    return tuple(args)


def parse_decoded(tokens: Sequence[str], template: EventTemplate) -> ParsedAssignment:
    """Recover slot assignments by greedy left-to-right literal anchoring.

    Each template literal is matched to its first occurrence at or after the
    current position; tokens between anchors belong to the slots in between
    (all of them to the first slot of an adjacent run).  Content is split
    into multiple arguments on standalone ``and``.
    """
    slots: dict[int, tuple[str, ...]] = {}
    pending: list[int] = []
    pos = 0
    aligned = True

    def flush(content: Sequence[str]):
        nonlocal aligned
        if not pending:
            if any(w != PLACEHOLDER for w in content):
                aligned = False
            return
        args = _content_to_args(content)
        if args:
            slots[pending[0]] = args

    for tok in template.tokens:
        if isinstance(tok, Slot):
            pending.append(tok.index)
            continue
        try:
            hit = tokens.index(tok.word, pos)
        except ValueError:
            return ParsedAssignment(slots, aligned=False)
        flush(tokens[pos:hit])
        pending = []
        pos = hit + 1
    flush(tokens[pos:])
    return ParsedAssignment(slots, aligned=aligned)


@dataclass(frozen=True)
class SlotState:
    """Decoder-side cursor over the template.

    ``template_pos`` indexes the template token being produced.  When that
    token is a Slot, ``active_slot``/``active_role`` identify it and
    ``slot_prefix`` holds the content emitted for it so far.  A literal
    mismatch or emission past the end sets ``derailed``, after which the
    state stops tracking (and adjusters stop constraining).
    """

    template_pos: int = 0
    active_slot: int | None = None
    active_role: str | None = None
    slot_prefix: tuple[str, ...] = ()
    derailed: bool = False

    @property
    def in_slot(self) -> bool:
        return self.active_slot is not None and not self.derailed

    def current_segment(self) -> tuple[str, ...]:
        """Slot content since the last joiner: the argument being written."""
        for i in range(len(self.slot_prefix) - 1, -1, -1):
            if self.slot_prefix[i] == JOINER:
                return self.slot_prefix[i + 1 :]
        return self.slot_prefix


def _enter(template: EventTemplate, pos: int) -> SlotState:
    if pos < len(template.tokens) and isinstance(template.tokens[pos], Slot):
        idx = template.tokens[pos].index
        return SlotState(pos, idx, template.role_of(idx).role_name, ())
    return SlotState(pos)


def initial_slot_state(template: EventTemplate) -> SlotState:
    return _enter(template, 0)


def _next_literal(template: EventTemplate, pos: int) -> tuple[int, str] | None:
    for i in range(pos, len(template.tokens)):
        tok = template.tokens[i]
        if isinstance(tok, Literal):
            return i, tok.word
    return None


def advance_slot_state(
    state: SlotState, template: EventTemplate, emitted: str
) -> SlotState:
    if state.derailed:
        return state
    if state.template_pos >= len(template.tokens):
        return replace(state, derailed=True)
    tok = template.tokens[state.template_pos]
    if isinstance(tok, Literal):
        if emitted == tok.word:
            return _enter(template, state.template_pos + 1)
        return replace(state, derailed=True)
    # Inside a slot: a token equal to the next literal closes the slot
    # (literal preference); anything else extends the slot content.
    nxt = _next_literal(template, state.template_pos + 1)
    if nxt is not None and emitted == nxt[1]:
        return _enter(template, nxt[0] + 1)
    return replace(
        state, slot_prefix=state.slot_prefix + (emitted,)
    )
