"""Scoring extracted arguments against gold annotations.

Matching is per event, one-to-one: predictions are aligned greedily to gold
arguments (both sides in deterministic sorted order), each gold creditable
once.  Candidate golds are preferred by match tightness (exact offsets,
then head word, then coreference) and, within a tightness level, by role
agreement.  Identification credits any aligned pair; classification
additionally requires the aligned roles to agree, so classification F1 can
never exceed identification F1, and the error taxonomy (missing, spurious,
misclassified) falls out of the same alignment.

The three criteria nest by construction: an exact-offset match also counts
for head and coref, a head match also counts for coref.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Document, Span
from .errors import EmptySpan, KeyMismatch, ValidationError

_PUNCT = set(string.punctuation)

EventKey = tuple[str, str]  # (doc_id, event_id)
GoldKey = tuple[str, str, str, int, int]  # + role, span start, span end


@dataclass(frozen=True)
class MatchConfig:
    mode: str = "classification"  # identification | classification
    criterion: str = "head"  # exact | head | coref

    def __post_init__(self):
        if self.mode not in ("identification", "classification"):
            raise ValidationError(f"unknown mode {self.mode!r}")
        if self.criterion not in ("exact", "head", "coref"):
            raise ValidationError(f"unknown criterion {self.criterion!r}")


_LEVEL = {"exact": 0, "head": 1, "coref": 2}


@dataclass(frozen=True)
class Prediction:
    doc_id: str
    event_id: str
    role: str
    text: str
    span: Span | None = None


@dataclass(frozen=True)
class ResolvedGold:
    role: str
    span: Span
    entity_id: str
    text: str
    head: str
    trigger_start: int
    head_start: int


@dataclass(frozen=True)
class ResolvedCluster:
    entity_id: str
    spans: tuple[Span, ...]
    texts: tuple[str, ...]


@dataclass(frozen=True)
class GoldView:
    golds: dict[EventKey, tuple[ResolvedGold, ...]]
    clusters: dict[str, tuple[ResolvedCluster, ...]]
    doc_info: dict[str, tuple[int, int]]  # doc_id -> (n_tokens, n_events)


def head_of(tokens: Sequence[str]) -> str:
    """Last token after stripping trailing all-punctuation tokens."""
    if not tokens:
        raise EmptySpan("no tokens to take a head from")
    i = len(tokens) - 1
    while i > 0 and tokens[i] and all(ch in _PUNCT for ch in tokens[i]):
        i -= 1
    return tokens[i]


def build_gold_view(docs: Iterable[Document]) -> GoldView:
    golds: dict[EventKey, tuple[ResolvedGold, ...]] = {}
    clusters: dict[str, tuple[ResolvedCluster, ...]] = {}
    doc_info: dict[str, tuple[int, int]] = {}
    for doc in docs:
        doc_info[doc.doc_id] = (len(doc.tokens), len(doc.events))
        clusters[doc.doc_id] = tuple(
            ResolvedCluster(
                c.entity_id,
                c.mention_spans,
                tuple(doc.text(sp) for sp in c.mention_spans),
            )
            for c in doc.clusters
        )
        for ev in doc.events:
            resolved = []
            for arg in ev.arguments:
                head_span = arg.head_span or arg.span
                resolved.append(
                    ResolvedGold(
                        role=arg.role,
                        span=arg.span,
                        entity_id=arg.entity_id,
                        text=doc.text(arg.span),
                        head=head_of(doc.tokens[head_span.start : head_span.end]),
                        trigger_start=ev.trigger.start,
                        head_start=head_span.start,
                    )
                )
            golds[(doc.doc_id, ev.event_id)] = tuple(resolved)
    return GoldView(golds, clusters, doc_info)


def _match_level(
    pred: Prediction, gold: ResolvedGold, clusters: tuple[ResolvedCluster, ...]
) -> int | None:
    """Tightest criterion the pair satisfies, or None."""
    if pred.span is not None and pred.span == gold.span:
        return 0
    pred_tokens = pred.text.split()
    if pred_tokens and head_of(pred_tokens) == gold.head:
        return 1
    for cluster in clusters:
        if cluster.entity_id != gold.entity_id:
            continue
        if pred.span is not None and pred.span in cluster.spans:
            return 2
        if pred.span is None and pred.text in cluster.texts:
            return 2
    return None


def match(
    pred: Prediction,
    gold: ResolvedGold,
    clusters: tuple[ResolvedCluster, ...],
    cfg: MatchConfig,
) -> bool:
    level = _match_level(pred, gold, clusters)
    if level is None or level > _LEVEL[cfg.criterion]:
        return False
    return cfg.mode == "identification" or pred.role == gold.role


def _sorted_preds(preds: Iterable[Prediction]) -> list[Prediction]:
    return sorted(
        preds,
        key=lambda p: (p.role, p.span.start if p.span else 10**9, p.text),
    )


def _align_event(
    preds: Sequence[Prediction],
    golds: Sequence[ResolvedGold],
    clusters: tuple[ResolvedCluster, ...],
    criterion: str,
) -> tuple[list[tuple[Prediction, ResolvedGold]], list[Prediction], list[ResolvedGold]]:
    """Greedy one-to-one alignment; returns (pairs, spurious, missing)."""
    level = _LEVEL[criterion]
    order = sorted(range(len(golds)), key=lambda i: (golds[i].role, golds[i].span))
    taken = [False] * len(golds)
    pairs: list[tuple[Prediction, ResolvedGold]] = []
    spurious: list[Prediction] = []
    for pred in _sorted_preds(preds):
        best = None
        for gi in order:
            if taken[gi]:
                continue
            lv = _match_level(pred, golds[gi], clusters)
            if lv is None or lv > level:
                continue
            cand = (lv, golds[gi].role != pred.role, gi)
            if best is None or cand < best:
                best = cand
        if best is None:
            spurious.append(pred)
        else:
            taken[best[2]] = True
            pairs.append((pred, golds[best[2]]))
    missing = [g for gi, g in enumerate(golds) if not taken[gi]]
    return pairs, spurious, missing


def _group_by_event(
    preds: Iterable[Prediction], golds: Mapping[EventKey, tuple]
) -> dict[EventKey, list[Prediction]]:
    grouped: dict[EventKey, list[Prediction]] = {key: [] for key in golds}
    for pred in preds:
        key = (pred.doc_id, pred.event_id)
        if key not in grouped:
            raise KeyMismatch(f"prediction for unknown event {key}")
        grouped[key].append(pred)
    return grouped


def _event_counts(
    preds: Sequence[Prediction],
    golds: Sequence[ResolvedGold],
    clusters: tuple[ResolvedCluster, ...],
    cfg: MatchConfig,
) -> tuple[int, int, int]:
    pairs, spurious, missing = _align_event(preds, golds, clusters, cfg.criterion)
    if cfg.mode == "identification":
        tp = len(pairs)
    else:
        tp = sum(1 for p, g in pairs if p.role == g.role)
    fp = len(preds) - tp
    fn = len(golds) - tp
    return tp, fp, fn


def _prf(tp: int, fp: int, fn: int) -> dict:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {
        "tp": tp, "fp": fp, "fn": fn,
        "precision": precision, "recall": recall, "f1": f1,
    }


_DOC_LENGTH_EDGES = (250, 500, 750)
_EVENT_COUNT_EDGES = (8, 16, 24)


def _bucket_label(value: int, edges: tuple[int, ...]) -> str:
    lo = 0
    for edge in edges:
        if value < edge:
            return f"{lo}-{edge - 1}"
        lo = edge
    return f"{lo}+"


@dataclass
class ScoreReport:
    mode: str
    criterion: str
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    per_document: dict[str, dict] = field(default_factory=dict)
    by_doc_length: dict[str, dict] = field(default_factory=dict)
    by_event_count: dict[str, dict] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "criterion": self.criterion,
            **_prf(self.tp, self.fp, self.fn),
            "per_document": self.per_document,
            "by_doc_length": self.by_doc_length,
            "by_event_count": self.by_event_count,
        }


def score(
    preds: Iterable[Prediction],
    golds: Mapping[EventKey, tuple[ResolvedGold, ...]],
    clusters: Mapping[str, tuple[ResolvedCluster, ...]],
    cfg: MatchConfig,
    doc_info: Mapping[str, tuple[int, int]] | None = None,
) -> ScoreReport:
    grouped = _group_by_event(preds, golds)
    doc_counts: dict[str, list[int]] = {}
    total = [0, 0, 0]
    for key, event_preds in grouped.items():
        doc_id = key[0]
        counts = _event_counts(
            event_preds, golds[key], clusters.get(doc_id, ()), cfg
        )
        slot = doc_counts.setdefault(doc_id, [0, 0, 0])
        for i in range(3):
            slot[i] += counts[i]
            total[i] += counts[i]

    report = ScoreReport(cfg.mode, cfg.criterion, *total, **{
        k: v for k, v in _prf(*total).items() if k in ("precision", "recall", "f1")
    })
    for doc_id in sorted(doc_counts):
        report.per_document[doc_id] = _prf(*doc_counts[doc_id])
    if doc_info:
        length_counts: dict[str, list[int]] = {}
        event_counts: dict[str, list[int]] = {}
        for doc_id, counts in doc_counts.items():
            if doc_id not in doc_info:
                continue
            n_tokens, n_events = doc_info[doc_id]
            for buckets, label in (
                (length_counts, _bucket_label(n_tokens, _DOC_LENGTH_EDGES)),
                (event_counts, _bucket_label(n_events, _EVENT_COUNT_EDGES)),
            ):
                slot = buckets.setdefault(label, [0, 0, 0])
                for i in range(3):
                    slot[i] += counts[i]
        report.by_doc_length = {k: _prf(*v) for k, v in sorted(length_counts.items())}
        report.by_event_count = {k: _prf(*v) for k, v in sorted(event_counts.items())}
    return report


@dataclass(frozen=True)
class ErrorBreakdown:
    missing: int
    spurious: int
    misclassified: int
    missing_keys: tuple[GoldKey, ...] = ()


def error_breakdown(
    preds: Iterable[Prediction],
    golds: Mapping[EventKey, tuple[ResolvedGold, ...]],
    clusters: Mapping[str, tuple[ResolvedCluster, ...]],
    criterion: str = "head",
) -> ErrorBreakdown:
    """Partition errors on the identification alignment.

    Aligned pairs with differing roles are misclassified; unmatched golds
    are missing; unmatched predictions are spurious."""
    grouped = _group_by_event(preds, golds)
    n_missing = n_spurious = n_misclassified = 0
    missing_keys: list[GoldKey] = []
    for key, event_preds in grouped.items():
        doc_id, event_id = key
        pairs, spurious, missing = _align_event(
            event_preds, golds[key], clusters.get(doc_id, ()), criterion
        )
        n_spurious += len(spurious)
        n_missing += len(missing)
        n_misclassified += sum(1 for p, g in pairs if p.role != g.role)
        missing_keys.extend(
            (doc_id, event_id, g.role, g.span.start, g.span.end) for g in missing
        )
    return ErrorBreakdown(
        n_missing, n_spurious, n_misclassified, tuple(missing_keys)
    )


@dataclass(frozen=True)
class DistanceReport:
    hist_all: dict[int, int]
    hist_missing: dict[int, int]
    mean_all: float | None
    mean_missing: float | None


def distance_distribution(
    golds: Mapping[EventKey, tuple[ResolvedGold, ...]],
    missing_keys: Iterable[GoldKey],
    bucket_width: int = 25,
) -> DistanceReport:
    """Token distance from each gold argument head to its trigger.

    Buckets are [0, w), [w, 2w), ... keyed by their start."""
    missing = set(missing_keys)
    hist_all: dict[int, int] = {}
    hist_missing: dict[int, int] = {}
    dists_all: list[int] = []
    dists_missing: list[int] = []
    for (doc_id, event_id), args in golds.items():
        for g in args:
            dist = abs(g.head_start - g.trigger_start)
            bucket = (dist // bucket_width) * bucket_width
            hist_all[bucket] = hist_all.get(bucket, 0) + 1
            dists_all.append(dist)
            if (doc_id, event_id, g.role, g.span.start, g.span.end) in missing:
                hist_missing[bucket] = hist_missing.get(bucket, 0) + 1
                dists_missing.append(dist)
    return DistanceReport(
        dict(sorted(hist_all.items())),
        dict(sorted(hist_missing.items())),
        sum(dists_all) / len(dists_all) if dists_all else None,
        sum(dists_missing) / len(dists_missing) if dists_missing else None,
    )


def bootstrap_significance(
    preds_a: Iterable[Prediction],
    preds_b: Iterable[Prediction],
    golds: Mapping[EventKey, tuple[ResolvedGold, ...]],
    clusters: Mapping[str, tuple[ResolvedCluster, ...]],
    cfg: MatchConfig,
    n: int = 5000,
    seed: int = 0,
) -> float:
    """One-sided paired bootstrap over events.

    Returns the fraction of resamples where system b's F1 is at least
    system a's; small values mean a's advantage is stable."""
    keys = sorted(golds)
    if not keys:
        raise KeyMismatch("no gold events to resample")
    grouped_a = _group_by_event(preds_a, golds)
    grouped_b = _group_by_event(preds_b, golds)
    stats = np.zeros((len(keys), 6), dtype=np.int64)
    for i, key in enumerate(keys):
        cl = clusters.get(key[0], ())
        stats[i, 0:3] = _event_counts(grouped_a[key], golds[key], cl, cfg)
        stats[i, 3:6] = _event_counts(grouped_b[key], golds[key], cl, cfg)

    rng = np.random.default_rng(seed)
    weights = rng.multinomial(len(keys), np.full(len(keys), 1.0 / len(keys)), size=n)
    sums = weights @ stats  # (n, 6)

    def f1(tp, fp, fn):
        with np.errstate(invalid="ignore", divide="ignore"):
            p = np.where(tp + fp > 0, tp / np.maximum(tp + fp, 1), 0.0)
            r = np.where(tp + fn > 0, tp / np.maximum(tp + fn, 1), 0.0)
            return np.where(p + r > 0, 2 * p * r / np.maximum(p + r, 1e-300), 0.0)

    f1_a = f1(sums[:, 0], sums[:, 1], sums[:, 2])
    f1_b = f1(sums[:, 3], sums[:, 4], sums[:, 5])
    return float(np.mean(f1_b >= f1_a))


def predictions_from_json(records: Iterable[dict]) -> list[Prediction]:
    """Predictions-file rows to Prediction objects."""
    preds = []
    for rec in records:
        for role, entries in rec.get("role_assignments", {}).items():
            for entry in entries:
                span = None
                if "span" in entry:
                    span = Span(entry["span"][0], entry["span"][1])
                preds.append(
                    Prediction(
                        doc_id=rec["doc_id"],
                        event_id=rec["event_id"],
                        role=role,
                        text=entry["text"],
                        span=span,
                    )
                )
    return preds
