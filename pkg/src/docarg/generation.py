"""Generator-facing input construction and greedy decoding.

The rendered input is ``<S> memory </S> <S> template </S> context [EOS]``;
the memory block (the retrieved record's sequence) is omitted entirely when
no record was retrieved.  The context is a window of document tokens
centered on the trigger, which is wrapped in ``<trg>`` ``</trg>`` markers;
when the budget is tight the window is trimmed symmetrically from both
ends.  Memory and template segments are never trimmed.

Generators are pluggable: anything with ``next_distribution(input, prefix)``
returning a TokenDistribution works.  Two reference generators live here (a
scripted table for tests and a backoff n-gram with a copy channel); a
sidecar client adapter connects external models over the line protocol.
"""

from __future__ import annotations

import json
import math
import pickle
from dataclasses import dataclass
from typing import Protocol, Sequence

from .corpus import Document, Span
from .errors import (
    DegenerateDistribution,
    EmptyTraining,
    InputTooLong,
    ParseError,
)
from .ontology import EventTemplate, Literal
from .templates import (
    PLACEHOLDER,
    SlotState,
    TargetSequence,
    advance_slot_state,
    initial_slot_state,
)

SEG_OPEN = "<S>"
SEG_CLOSE = "</S>"
EOS = "[EOS]"
UNK = "<unk>"
TRG_OPEN = "<trg>"
TRG_CLOSE = "</trg>"

RESERVED = frozenset({PLACEHOLDER, SEG_OPEN, SEG_CLOSE, EOS, UNK})
# Tokens that never belong in generated argument text.
NON_EMITTABLE = frozenset({SEG_OPEN, SEG_CLOSE, UNK, TRG_OPEN, TRG_CLOSE})

_BOS = ""  # whitespace tokenization can never produce an empty token


@dataclass(frozen=True)
class TokenDistribution:
    probs: dict[str, float]

    def check(self, tol: float = 1e-6) -> None:
        if any(p < 0 for p in self.probs.values()):
            raise DegenerateDistribution("negative probability")
        total = math.fsum(self.probs.values())
        if abs(total - 1.0) > tol:
            raise DegenerateDistribution(f"probabilities sum to {total}")

    def argmax_token(self) -> str:
        best, best_p = None, -1.0
        for tok, p in self.probs.items():
            if p > best_p or (p == best_p and (best is None or tok < best)):
                best, best_p = tok, p
        if best is None:
            raise DegenerateDistribution("empty distribution")
        return best


@dataclass(frozen=True)
class GeneratorInput:
    memory_segment: tuple[str, ...] | None
    template_segment: tuple[str, ...]
    context_segment: tuple[str, ...]
    rendered: tuple[str, ...]

    def trigger_text(self) -> str:
        """Tokens between the trigger markers, space-joined."""
        ctx = self.context_segment
        try:
            a = ctx.index(TRG_OPEN)
            b = ctx.index(TRG_CLOSE, a + 1)
        except ValueError:
            return ""
        return " ".join(ctx[a + 1 : b])


class Generator(Protocol):
    def next_distribution(
        self, ginput: GeneratorInput, prefix: tuple[str, ...]
    ) -> TokenDistribution: ...

    @property
    def vocabulary(self) -> frozenset[str]: ...


def render_template_segment(template: EventTemplate) -> tuple[str, ...]:
    return tuple(
        t.word if isinstance(t, Literal) else PLACEHOLDER for t in template.tokens
    )


def context_window(doc: Document, trigger: Span, budget: int) -> tuple[str, ...]:
    """Marker-wrapped window of at most ``budget`` tokens around the trigger."""
    marked = (
        doc.tokens[: trigger.start]
        + (TRG_OPEN,)
        + doc.tokens[trigger.start : trigger.end]
        + (TRG_CLOSE,)
        + doc.tokens[trigger.end :]
    )
    if len(marked) <= budget:
        return marked
    block_start, block_end = trigger.start, trigger.end + 2
    if budget < block_end - block_start:
        raise InputTooLong(
            f"budget {budget} cannot hold the {block_end - block_start}-token "
            f"marked trigger"
        )
    left = (budget - (block_end - block_start)) // 2
    start = min(max(block_start - left, 0), len(marked) - budget)
    return marked[start : start + budget]


def build_input(
    memory_rec,
    template: EventTemplate,
    doc: Document,
    trigger: Span,
    max_len: int,
) -> GeneratorInput:
    """Assemble the generator input, trimming only the context segment."""
    mem = tuple(memory_rec.sequence_tokens) if memory_rec is not None else None
    tpl = render_template_segment(template)
    fixed = (len(mem) + 2 if mem is not None else 0) + len(tpl) + 2 + 1
    if fixed > max_len:
        raise InputTooLong(
            f"memory and template need {fixed} tokens, budget is {max_len}"
        )
    ctx = context_window(doc, trigger, max_len - fixed)
    rendered = (
        ((SEG_OPEN,) + mem + (SEG_CLOSE,) if mem is not None else ())
        + (SEG_OPEN,)
        + tpl
        + (SEG_CLOSE,)
        + ctx
        + (EOS,)
    )
    return GeneratorInput(mem, tpl, ctx, rendered)


def decode_greedy(
    generator: Generator,
    ginput: GeneratorInput,
    template: EventTemplate,
    adjuster=None,
    max_steps: int = 128,
) -> tuple[str, ...]:
    """Greedy argmax decoding with an optional probability adjuster.

    The adjuster is called as ``adjuster(dist, slot_state)`` after the raw
    distribution passes its sum check; absent, it is the identity.  Argmax
    ties break to the lexicographically smallest token.  Decoding stops at
    ``[EOS]`` (not returned) or after max_steps.
    """
    state: SlotState = initial_slot_state(template)
    out: list[str] = []
    for _ in range(max_steps):
        dist = generator.next_distribution(ginput, tuple(out))
        dist.check(1e-6)
        if adjuster is not None:
            dist = adjuster(dist, state)
        token = dist.argmax_token()
        if token == EOS:
            break
        out.append(token)
        state = advance_slot_state(state, template, token)
    return tuple(out)


# ---------------------------------------------------------------------------
# Scripted table generator


@dataclass(frozen=True)
class TableGenerator:
    """Emits pre-scripted per-step distributions, keyed by trigger text.

    After the scripted steps run out, all mass goes to [EOS].  A ``*`` entry
    is the fallback for unknown triggers.
    """

    entries: dict[str, tuple[dict[str, float], ...]]

    def next_distribution(self, ginput, prefix) -> TokenDistribution:
        steps = self.entries.get(ginput.trigger_text())
        if steps is None:
            steps = self.entries.get("*", ())
        if len(prefix) >= len(steps):
            return TokenDistribution({EOS: 1.0})
        return TokenDistribution(dict(steps[len(prefix)]))

    @property
    def vocabulary(self) -> frozenset[str]:
        vocab = {EOS}
        for steps in self.entries.values():
            for step in steps:
                vocab.update(step)
        return frozenset(vocab)


def _normalize_steps(raw_steps) -> tuple[dict[str, float], ...]:
    steps = []
    for step in raw_steps:
        if isinstance(step, str):
            steps.append({step: 1.0})
        else:
            steps.append({str(t): float(p) for t, p in step.items()})
    return tuple(steps)


def table_generator(entries: dict) -> TableGenerator:
    return TableGenerator({k: _normalize_steps(v) for k, v in entries.items()})


def load_table(path) -> TableGenerator:
    entries: dict[str, tuple[dict[str, float], ...]] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=line_no) from exc
            if "trigger" not in rec or "steps" not in rec:
                raise ParseError("table record needs trigger and steps", line=line_no)
            entries[rec["trigger"]] = _normalize_steps(rec["steps"])
    return TableGenerator(entries)


# ---------------------------------------------------------------------------
# Backoff n-gram generator with a copy channel


class NgramGenerator:
    """Word n-gram over target sequences, interpolated with input copying.

    Target tokens seen no more than ``unk_threshold`` times collapse to
    ``<unk>`` for counting and context lookup, so held-out names at decode
    time still hit trained contexts.  Predicted ``<unk>`` mass is routed
    through the copy distribution (counts of non-reserved tokens in the
    live memory + context segments), which is also mixed in directly with
    weight ``lam``.  Deterministic; no sampling anywhere.
    """

    def __init__(self, order, levels, kept, vocab, lam, k):
        self.order = order
        self.levels = levels  # context length -> {context tuple -> {next: count}}
        self.kept = kept  # target tokens counted under their own identity
        self.vocab = vocab  # emittable closed vocabulary, sorted tuple
        self.lam = lam
        self.k = k

    def _map(self, token: str) -> str:
        if token in self.kept or token in RESERVED:
            return token
        return UNK

    def next_distribution(self, ginput, prefix) -> TokenDistribution:
        padded = [_BOS] * (self.order - 1) + [self._map(t) for t in prefix]
        table = None
        for length in range(self.order - 1, -1, -1):
            ctx = tuple(padded[len(padded) - length :]) if length else ()
            table = self.levels[length].get(ctx)
            if table is not None:
                break
        total = sum(table.values())
        denom = total + self.k * len(self.vocab)
        p_unk = (table.get(UNK, 0) + self.k) / denom

        copy_counts: dict[str, int] = {}
        source = (ginput.memory_segment or ()) + ginput.context_segment
        for tok in source:
            if tok not in NON_EMITTABLE and tok != PLACEHOLDER:
                copy_counts[tok] = copy_counts.get(tok, 0) + 1
        copy_total = sum(copy_counts.values())

        probs: dict[str, float] = {}
        for tok in self.vocab:
            if tok == UNK:
                continue
            probs[tok] = (1 - self.lam) * (table.get(tok, 0) + self.k) / denom
        if copy_total:
            route = (1 - self.lam) * p_unk + self.lam
            for tok, c in copy_counts.items():
                probs[tok] = probs.get(tok, 0.0) + route * c / copy_total
        total_mass = math.fsum(probs.values())
        return TokenDistribution({t: p / total_mass for t, p in probs.items()})

    @property
    def vocabulary(self) -> frozenset[str]:
        return frozenset(self.vocab)

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            pickle.dump(self, fh)


def load_ngram(path) -> NgramGenerator:
    with open(path, "rb") as fh:
        model = pickle.load(fh)
    if not isinstance(model, NgramGenerator):
        raise ParseError(f"{path} does not hold an n-gram model")
    return model


def gold_training_pairs(
    ontology, docs, max_input_length: int = 360
) -> list[tuple[GeneratorInput, tuple[str, ...]]]:
    """(input, gold target sequence) pairs for every annotated event."""
    from .memory import gold_record
    from .ontology import template_of

    pairs = []
    for doc in docs:
        for ev in doc.events:
            template = template_of(ontology, ev.event_type)
            ginput = build_input(None, template, doc, ev.trigger, max_input_length)
            pairs.append((ginput, gold_record(doc, ev, ontology).sequence_tokens))
    return pairs


def train_ngram(
    pairs: Sequence[tuple[GeneratorInput, Sequence[str]]],
    order: int = 3,
    lam: float = 0.3,
    k: float = 0.01,
    unk_threshold: int = 1,
) -> NgramGenerator:
    """Count n-grams of orders 1..order over (input, target) pairs.

    Targets may be TargetSequences or plain token sequences; [EOS] is
    appended to each.  The closed vocabulary is the union of target and
    input tokens plus reserved symbols.
    """
    if not pairs:
        raise EmptyTraining("no training pairs")

    token_counts: dict[str, int] = {}
    targets = []
    input_tokens: set[str] = set()
    for ginput, target in pairs:
        toks = tuple(target.tokens if isinstance(target, TargetSequence) else target)
        targets.append((ginput, toks))
        for t in toks:
            token_counts[t] = token_counts.get(t, 0) + 1
        input_tokens.update(ginput.rendered)

    kept = frozenset(
        t for t, c in token_counts.items() if c > unk_threshold and t not in RESERVED
    )

    def mapped(tok: str) -> str:
        return tok if (tok in kept or tok in RESERVED) else UNK

    levels: list[dict[tuple, dict[str, int]]] = [{} for _ in range(order)]
    for _, toks in targets:
        seq = [mapped(t) for t in toks] + [EOS]
        padded = [_BOS] * (order - 1) + seq
        for i in range(len(seq)):
            pos = i + order - 1
            nxt = padded[pos]
            for length in range(order):
                ctx = tuple(padded[pos - length : pos]) if length else ()
                table = levels[length].setdefault(ctx, {})
                table[nxt] = table.get(nxt, 0) + 1

    vocab = set(kept) | {EOS, UNK, PLACEHOLDER}
    vocab.update(t for t in input_tokens if t not in NON_EMITTABLE)
    return NgramGenerator(order, levels, kept, tuple(sorted(vocab)), lam, k)


def sidecar_generator(endpoint: str, timeout: float = 30.0):
    from .sidecar_client import SidecarGenerator

    return SidecarGenerator(endpoint, timeout=timeout)
