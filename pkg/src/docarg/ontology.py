"""Event ontology: role inventories and generation templates per event type.

An ontology file is line-delimited JSON, one event type per line:

    {"event_type": "Justice.ArrestJailDetain.Unspecified",
     "roles": [{"name": "Jailer", "entity_types": ["PER", "ORG", "GPE"]}, ...],
     "template": "<arg1> arrested or jailed <arg2> for <arg3> crime at <arg4> place"}

The i-th role in the list owns placeholder ``<argi>`` (1-based).  Every role
must appear exactly once in the template.  Dotted type identifiers carry an
optional hierarchy (``a.b.c`` has parent ``a.b``); it is stored but nothing
downstream consumes it.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import ParseError, UnknownEventType, ValidationError

_PLACEHOLDER = re.compile(r"^<arg(\d+)>$")


@dataclass(frozen=True)
class RoleSpec:
    """One argument role of an event type."""

    role_name: str
    entity_types: frozenset[str]
    slot_index: int  # 1-based position, matches <argN> in the template

    def __post_init__(self):
        if not self.entity_types:
            raise ValidationError(f"role {self.role_name}: empty entity_types")
        if self.slot_index < 1:
            raise ValidationError(f"role {self.role_name}: slot_index must be >= 1")


@dataclass(frozen=True)
class Literal:
    """A fixed template word."""

    word: str


@dataclass(frozen=True)
class Slot:
    """A fillable position, identified by its 1-based slot index."""

    index: int


@dataclass(frozen=True)
class EventTemplate:
    """Parsed template: interleaved Literal and Slot tokens.

    Slot indices are strictly ascending and each maps to exactly one role.
    ``adjacent_slots`` flags templates where two slots touch with no literal
    between them; such templates parse ambiguously (all content between the
    surrounding anchors is attributed to the first slot of the run).
    """

    tokens: tuple[Literal | Slot, ...]
    roles: tuple[RoleSpec, ...]
    adjacent_slots: bool = False

    def role_of(self, slot_index: int) -> RoleSpec:
        for r in self.roles:
            if r.slot_index == slot_index:
                return r
        raise ValidationError(f"no role with slot index {slot_index}")

    @property
    def slot_indices(self) -> tuple[int, ...]:
        return tuple(t.index for t in self.tokens if isinstance(t, Slot))


@dataclass(frozen=True)
class Ontology:
    """All event types with their roles and templates."""

    event_types: dict[str, tuple[tuple[RoleSpec, ...], EventTemplate]]
    hierarchy: dict[str, str] = field(default_factory=dict)

    def __contains__(self, event_type: str) -> bool:
        return event_type in self.event_types

    def roles_of(self, event_type: str) -> tuple[RoleSpec, ...]:
        if event_type not in self.event_types:
            raise UnknownEventType(event_type)
        return self.event_types[event_type][0]


def parse_template(text: str, roles: tuple[RoleSpec, ...]) -> EventTemplate:
    """Tokenize a template string on whitespace into Literal/Slot tokens.

    Raises ValidationError for a placeholder with no matching role, a
    duplicate placeholder, or placeholders out of ascending order.
    """
    tokens: list[Literal | Slot] = []
    seen: list[int] = []
    known = {r.slot_index for r in roles}
    for word in text.split():
        m = _PLACEHOLDER.match(word)
        if m is None:
            tokens.append(Literal(word))
            continue
        idx = int(m.group(1))
        if idx not in known:
            raise ValidationError(f"template placeholder <arg{idx}> has no role")
        if idx in seen:
            raise ValidationError(f"template repeats placeholder <arg{idx}>")
        if seen and idx < seen[-1]:
            raise ValidationError(f"template placeholder <arg{idx}> out of order")
        seen.append(idx)
        tokens.append(Slot(idx))
    adjacent = any(
        isinstance(a, Slot) and isinstance(b, Slot) for a, b in zip(tokens, tokens[1:])
    )
    return EventTemplate(tuple(tokens), tuple(roles), adjacent)


def render_template(template: EventTemplate) -> str:
    """Inverse of parse_template: back to the placeholder string."""
    words = []
    for tok in template.tokens:
        words.append(tok.word if isinstance(tok, Literal) else f"<arg{tok.index}>")
    return " ".join(words)


def _parse_record(rec: dict, line_no: int) -> tuple[str, tuple[RoleSpec, ...], EventTemplate]:
    for key in ("event_type", "roles", "template"):
        if key not in rec:
            raise ParseError(f"missing field {key!r}", line=line_no)
    etype = rec["event_type"]
    if not isinstance(etype, str) or not etype:
        raise ParseError("event_type must be a non-empty string", line=line_no)
    roles = []
    names = set()
    for i, r in enumerate(rec["roles"], start=1):
        if "name" not in r or "entity_types" not in r:
            raise ParseError(f"role {i} missing name or entity_types", line=line_no)
        if r["name"] in names:
            raise ValidationError(f"{etype}: duplicate role name {r['name']!r}")
        names.add(r["name"])
        roles.append(RoleSpec(r["name"], frozenset(r["entity_types"]), i))
    template = parse_template(rec["template"], tuple(roles))
    if len(template.slot_indices) != len(roles):
        raise ValidationError(
            f"{etype}: template has {len(template.slot_indices)} slots "
            f"for {len(roles)} roles"
        )
    return etype, tuple(roles), template


def load_ontology(path) -> Ontology:
    """Load a line-delimited ontology file.

    ParseError carries the 1-based line number of the offending record."""
    event_types: dict[str, tuple[tuple[RoleSpec, ...], EventTemplate]] = {}
    hierarchy: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=line_no) from exc
            etype, roles, template = _parse_record(rec, line_no)
            if etype in event_types:
                raise ValidationError(f"duplicate event type {etype}")
            event_types[etype] = (roles, template)
            parts = etype.split(".")
            if len(parts) > 1:
                hierarchy[etype] = ".".join(parts[:-1])
    return Ontology(event_types, hierarchy)


def template_of(ontology: Ontology, event_type: str) -> EventTemplate:
    if event_type not in ontology.event_types:
        raise UnknownEventType(event_type)
    return ontology.event_types[event_type][1]
