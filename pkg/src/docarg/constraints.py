"""Argument-pair constraints mined from type co-occurrence statistics.

For every unordered pair of distinct event types that co-occur in at least
one document, and every pair of their roles sharing at least one entity
type, the harvester counts how often one gold entity fills both roles in
the same document.  Pairs whose shared-entity rate exceeds the threshold
are labeled probable; the rest improbable.  A human curation overlay can
then relabel, drop, or add pairs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from .errors import ParseError, ValidationError

# (event_type, role)
ArgSlot = tuple[str, str]


@dataclass(frozen=True)
class ArgPair:
    """Unordered pair of (event_type, role) slots in canonical order."""

    a: ArgSlot
    b: ArgSlot

    @classmethod
    def of(cls, x: ArgSlot, y: ArgSlot) -> "ArgPair":
        x, y = (tuple(x), tuple(y))
        return cls(*sorted((x, y)))


class PairStats(NamedTuple):
    cnt_args: int  # (document, entity) incidences filling both roles
    cnt_events: int  # documents containing both event types


@dataclass
class ConstraintSet:
    improbable: frozenset[ArgPair] = frozenset()
    probable: frozenset[ArgPair] = frozenset()
    stats: dict[ArgPair, PairStats] = field(default_factory=dict)

    def __post_init__(self):
        overlap = self.improbable & self.probable
        if overlap:
            raise ValidationError(f"pairs in both label sets: {sorted(overlap)[:3]}")


def _role_fills(doc) -> dict[ArgSlot, set[str]]:
    """Entity ids observed per (event_type, role) in one document."""
    fills: dict[ArgSlot, set[str]] = {}
    for ev in doc.events:
        for arg in ev.arguments:
            fills.setdefault((ev.event_type, arg.role), set()).add(arg.entity_id)
    return fills


def harvest(
    ontology,
    docs,
    threshold: float = 0.001,
    probable_above_threshold: bool = True,
) -> ConstraintSet:
    """Mine a ConstraintSet from gold-annotated documents.

    Same-type pairs are excluded, as are role pairs with disjoint entity
    types.  The label test is strict: a pair is probable iff
    cnt_args / cnt_events > threshold.  ``probable_above_threshold=False``
    flips the two labels, for replication against mining runs that used the
    inverted orientation.
    """
    type_doc_count: dict[frozenset, int] = {}
    pair_args: dict[ArgPair, int] = {}

    per_doc = []
    for doc in docs:
        fills = _role_fills(doc)
        # Types the ontology does not know cannot form constraints; the CLI
        # surfaces them as validation errors before harvesting.
        types = sorted(
            {ev.event_type for ev in doc.events if ev.event_type in ontology.event_types}
        )
        per_doc.append((types, fills))
        for i, ti in enumerate(types):
            for tj in types[i + 1 :]:
                key = frozenset((ti, tj))
                type_doc_count[key] = type_doc_count.get(key, 0) + 1

    roles_by_type = {t: ontology.roles_of(t) for t in ontology.event_types}

    for types, fills in per_doc:
        for i, ti in enumerate(types):
            for tj in types[i + 1 :]:
                for ri in roles_by_type[ti]:
                    ents_i = fills.get((ti, ri.role_name))
                    if not ents_i:
                        continue
                    for rj in roles_by_type[tj]:
                        if not (ri.entity_types & rj.entity_types):
                            continue
                        ents_j = fills.get((tj, rj.role_name))
                        if not ents_j:
                            continue
                        shared = len(ents_i & ents_j)
                        if shared:
                            pair = ArgPair.of(
                                (ti, ri.role_name), (tj, rj.role_name)
                            )
                            pair_args[pair] = pair_args.get(pair, 0) + shared

    improbable, probable = set(), set()
    stats: dict[ArgPair, PairStats] = {}
    seen_types = sorted(
        {t for types, _ in per_doc for t in types if t in roles_by_type}
    )
    for i, ti in enumerate(seen_types):
        for tj in seen_types[i + 1 :]:
            cnt = type_doc_count.get(frozenset((ti, tj)), 0)
            if cnt == 0:
                continue
            for ri in roles_by_type[ti]:
                for rj in roles_by_type[tj]:
                    if not (ri.entity_types & rj.entity_types):
                        continue
                    pair = ArgPair.of((ti, ri.role_name), (tj, rj.role_name))
                    args = pair_args.get(pair, 0)
                    stats[pair] = PairStats(args, cnt)
                    above = args / cnt > threshold
                    if above == probable_above_threshold:
                        probable.add(pair)
                    else:
                        improbable.add(pair)
    return ConstraintSet(frozenset(improbable), frozenset(probable), stats)


def apply_curation(
    cs: ConstraintSet, overlay: Iterable[tuple[ArgPair, str]]
) -> ConstraintSet:
    """Apply (pair, target_label) edits; label is probable/improbable/drop.

    Pairs absent from the harvested set may be added; they carry no stats.
    """
    improbable = set(cs.improbable)
    probable = set(cs.probable)
    for pair, label in overlay:
        improbable.discard(pair)
        probable.discard(pair)
        if label == "improbable":
            improbable.add(pair)
        elif label == "probable":
            probable.add(pair)
        elif label != "drop":
            raise ValidationError(f"unknown curation label {label!r}")
    kept = {
        p: s for p, s in cs.stats.items() if p in improbable or p in probable
    }
    return ConstraintSet(frozenset(improbable), frozenset(probable), kept)


def is_improbable(cs: ConstraintSet, x: ArgSlot, y: ArgSlot) -> bool:
    return ArgPair.of(x, y) in cs.improbable


def probable_partner(cs: ConstraintSet, x: ArgSlot) -> ArgSlot | None:
    """The slot most often sharing entities with x among probable pairs.

    Ties on cnt_args resolve to the lexicographically smaller partner;
    pairs without stats count as zero.
    """
    x = tuple(x)
    best: ArgSlot | None = None
    best_count = -1
    for pair in cs.probable:
        if x == pair.a:
            partner = pair.b
        elif x == pair.b:
            partner = pair.a
        else:
            continue
        count = cs.stats[pair].cnt_args if pair in cs.stats else 0
        if count > best_count or (count == best_count and partner < best):
            best, best_count = partner, count
    return best


def save_constraints(cs: ConstraintSet, path) -> None:
    records = []
    for label, pairs in (("improbable", cs.improbable), ("probable", cs.probable)):
        for pair in pairs:
            st = cs.stats.get(pair)
            records.append(
                {
                    "pair": [list(pair.a), list(pair.b)],
                    "label": label,
                    "cnt_args": st.cnt_args if st else 0,
                    "cnt_events": st.cnt_events if st else 0,
                }
            )
    records.sort(key=lambda r: r["pair"])
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def _pair_from(raw, line_no) -> ArgPair:
    if not (isinstance(raw, list) and len(raw) == 2):
        raise ParseError("pair must be [[type, role], [type, role]]", line=line_no)
    (ta, ra), (tb, rb) = raw
    return ArgPair.of((ta, ra), (tb, rb))


def load_constraints(path) -> ConstraintSet:
    improbable, probable = set(), set()
    stats: dict[ArgPair, PairStats] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=line_no) from exc
            pair = _pair_from(rec.get("pair"), line_no)
            label = rec.get("label")
            if label == "improbable":
                improbable.add(pair)
            elif label == "probable":
                probable.add(pair)
            else:
                raise ParseError(f"unknown label {label!r}", line=line_no)
            if rec.get("cnt_events", 0) or rec.get("cnt_args", 0):
                stats[pair] = PairStats(int(rec["cnt_args"]), int(rec["cnt_events"]))
    return ConstraintSet(frozenset(improbable), frozenset(probable), stats)


def load_curation(path) -> list[tuple[ArgPair, str]]:
    overlay = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=line_no) from exc
            if "target_label" not in rec:
                raise ParseError("curation record missing target_label", line=line_no)
            overlay.append((_pair_from(rec.get("pair"), line_no), rec["target_label"]))
    return overlay
