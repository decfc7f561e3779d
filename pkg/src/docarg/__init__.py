"""Document-level event argument extraction with a document memory and
harvested argument-pair constraints.

The pipeline: mine improbable/probable role pairs from a labelled corpus
(`constraints.harvest`), then for each event in a document build a
generator input from the most similar memory entry plus the event
template and trigger-centred context (`generation.build_input`), decode
greedily while steering token probabilities away from constraint
violations (`decoding`), parse the decoded sequence back into role
assignments (`templates.parse_decoded`), and append the result to the
document memory for later events.  `evaluation` scores predictions at
exact / head / coref tightness under identification and classification.
"""

from .config import RunConfig, load_run_config
from .constraints import (
    ArgPair,
    ConstraintSet,
    apply_curation,
    harvest,
    is_improbable,
    load_constraints,
    probable_partner,
    save_constraints,
)
from .corpus import (
    CorefCluster,
    Document,
    EventMention,
    GoldArgument,
    Span,
    dataset_stats,
    load_documents,
    splice_adversarial,
)
from .decoding import (
    AdjustConfig,
    DocumentResult,
    ExtractOptions,
    adjust,
    extract_document,
    extract_event,
)
from .errors import DocargError, ExtractionError, ParseError, ValidationError
from .evaluation import (
    MatchConfig,
    Prediction,
    bootstrap_significance,
    build_gold_view,
    distance_distribution,
    error_breakdown,
    score,
)
from .generation import (
    GeneratorInput,
    NgramGenerator,
    TableGenerator,
    TokenDistribution,
    build_input,
    decode_greedy,
    train_ngram,
)
from .memory import DocumentMemory, EventRecord, gold_record
from .ontology import EventTemplate, Ontology, RoleSpec, load_ontology, parse_template
from .retrieval import HashedTfidfEmbedder, retrieve, score_memory
from .templates import fill_template, parse_decoded

__version__ = "0.1.0"

__all__ = [
    "AdjustConfig",
    "ArgPair",
    "ConstraintSet",
    "CorefCluster",
    "DocargError",
    "Document",
    "DocumentMemory",
    "DocumentResult",
    "EventMention",
    "EventRecord",
    "EventTemplate",
    "ExtractOptions",
    "ExtractionError",
    "GeneratorInput",
    "GoldArgument",
    "HashedTfidfEmbedder",
    "MatchConfig",
    "NgramGenerator",
    "Ontology",
    "ParseError",
    "Prediction",
    "RoleSpec",
    "RunConfig",
    "Span",
    "TableGenerator",
    "TokenDistribution",
    "ValidationError",
    "adjust",
    "apply_curation",
    "bootstrap_significance",
    "build_gold_view",
    "build_input",
    "dataset_stats",
    "decode_greedy",
    "distance_distribution",
    "error_breakdown",
    "extract_document",
    "extract_event",
    "fill_template",
    "gold_record",
    "harvest",
    "is_improbable",
    "load_constraints",
    "load_documents",
    "load_ontology",
    "load_run_config",
    "parse_decoded",
    "parse_template",
    "probable_partner",
    "retrieve",
    "save_constraints",
    "score",
    "score_memory",
    "splice_adversarial",
    "train_ngram",
]
