"""Command-line interface.

Subcommands: harvest, extract, eval, stats, adversarial, compare.  Exit
codes: 0 success, 1 completed with per-event extraction failures, 2 bad
configuration or unreadable input.  All commands are deterministic given
the same config and seed.
"""

from __future__ import annotations

import argparse
import json
import pickle
import sys
from concurrent.futures import ProcessPoolExecutor

from . import constraints as con
from . import corpus, evaluation
from .config import RunConfig, load_run_config, sidecar_endpoint
from .decoding import extract_document, prediction_json
from .errors import DocargError
from .generation import load_ngram, load_table
from .ontology import load_ontology
from .retrieval import HashedTfidfEmbedder


def build_generator(spec: str):
    kind, _, rest = spec.partition(":")
    if kind == "table":
        return load_table(rest)
    if kind == "ngram":
        return load_ngram(rest)
    if kind == "sidecar":
        from .generation import sidecar_generator

        return sidecar_generator(sidecar_endpoint(rest))
    raise DocargError(f"unknown generator spec {spec!r}")


def build_embedder(spec: str, docs):
    kind, _, rest = spec.partition(":")
    if kind == "hash":
        dim = int(rest) if rest else 256
        return HashedTfidfEmbedder(dim).fit(doc.tokens for doc in docs)
    if kind == "sidecar":
        from .sidecar_client import SidecarEmbedder

        return SidecarEmbedder(sidecar_endpoint(rest))
    raise DocargError(f"unknown embedder spec {spec!r}")


def _require(cfg: RunConfig, *names):
    for name in names:
        if getattr(cfg, name) is None:
            raise DocargError(f"missing required setting {name!r}")


def _load_constraints(cfg: RunConfig) -> con.ConstraintSet:
    if cfg.constraints is None:
        return con.ConstraintSet()
    cs = con.load_constraints(cfg.constraints)
    if cfg.curation:
        cs = con.apply_curation(cs, con.load_curation(cfg.curation))
    return cs


# ---------------------------------------------------------------------------
# extract (with optional worker pool)

_WSTATE: dict = {}


def _worker_init(blob: bytes):
    global _WSTATE
    state = pickle.loads(blob)
    if state["generator"] is None:
        state["generator"] = build_generator(state["generator_spec"])
    if state["embedder"] is None:
        from .sidecar_client import SidecarEmbedder

        state["embedder"] = SidecarEmbedder(sidecar_endpoint(state["embedder_spec"]))
    _WSTATE = state


def _worker_run(doc):
    s = _WSTATE
    res = extract_document(
        doc, s["ontology"], s["generator"], s["cs"], s["acfg"],
        s["embedder"], s["options"], keep_inputs=s["keep_inputs"],
    )
    return (
        doc.doc_id,
        res.records,
        [str(e) for e in res.errors],
        [(eid, list(gi.rendered)) for eid, gi in res.inputs],
    )


def _run_extraction(cfg: RunConfig, docs, ontology):
    cs = _load_constraints(cfg)
    gen_kind = cfg.generator.partition(":")[0]
    emb_kind = cfg.embedder.partition(":")[0]
    state = {
        "ontology": ontology,
        "cs": cs,
        "acfg": cfg.adjust_config(),
        "options": cfg.extract_options(),
        "keep_inputs": cfg.dump_inputs is not None,
        "generator": None if gen_kind == "sidecar" else build_generator(cfg.generator),
        "generator_spec": cfg.generator,
        "embedder": None if emb_kind == "sidecar" else build_embedder(cfg.embedder, docs),
        "embedder_spec": cfg.embedder,
    }
    if cfg.workers <= 1:
        _worker_init(pickle.dumps(state))
        return [_worker_run(doc) for doc in docs]
    blob = pickle.dumps({**state, "generator": None, "embedder": None}
                        if gen_kind == "sidecar" or emb_kind == "sidecar"
                        else state)
    with ProcessPoolExecutor(
        max_workers=cfg.workers, initializer=_worker_init, initargs=(blob,)
    ) as pool:
        return list(pool.map(_worker_run, docs))


def _write_predictions(path, docs, results):
    events = {
        (doc.doc_id, ev.event_id): (doc, ev) for doc in docs for ev in doc.events
    }
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id, records, _errors, _inputs in results:
            for rec in records:
                doc, ev = events[(doc_id, rec.event_id)]
                fh.write(json.dumps(prediction_json(doc, ev, rec),
                                    ensure_ascii=False) + "\n")


def _write_inputs(path, results):
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id, _records, _errors, inputs in results:
            for event_id, rendered in inputs:
                fh.write(json.dumps(
                    {"doc_id": doc_id, "event_id": event_id, "rendered": rendered},
                    ensure_ascii=False) + "\n")


def cmd_extract(cfg: RunConfig) -> int:
    _require(cfg, "ontology", "documents", "out")
    ontology = load_ontology(cfg.ontology)
    docs = corpus.load_documents(cfg.documents)
    results = _run_extraction(cfg, docs, ontology)
    _write_predictions(cfg.out, docs, results)
    if cfg.dump_inputs:
        _write_inputs(cfg.dump_inputs, results)
    n_records = sum(len(r[1]) for r in results)
    n_errors = sum(len(r[2]) for r in results)
    print(f"extracted {n_records} events from {len(docs)} documents "
          f"({n_errors} failures) -> {cfg.out}")
    for _doc_id, _records, errors, _inputs in results:
        for msg in errors:
            print(f"error: {msg}", file=sys.stderr)
    return 1 if n_errors else 0


# ---------------------------------------------------------------------------
# harvest


def cmd_harvest(cfg: RunConfig, flip: bool = False) -> int:
    _require(cfg, "ontology", "documents", "out")
    ontology = load_ontology(cfg.ontology)
    docs = corpus.load_documents(cfg.documents)
    issues = corpus.validate_against_ontology(docs, ontology)
    if issues:
        for msg in issues[:20]:
            print(f"error: {msg}", file=sys.stderr)
        return 2
    cs = con.harvest(ontology, docs, threshold=cfg.threshold,
                     probable_above_threshold=not flip)
    print(f"harvested: {len(cs.improbable)} improbable, "
          f"{len(cs.probable)} probable")
    if cfg.curation:
        cs = con.apply_curation(cs, con.load_curation(cfg.curation))
        print(f"curated: {len(cs.improbable)} improbable, "
              f"{len(cs.probable)} probable")
    con.save_constraints(cs, cfg.out)
    return 0


# ---------------------------------------------------------------------------
# eval / compare / stats / adversarial


def _load_predictions(path) -> list[evaluation.Prediction]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return evaluation.predictions_from_json(records)


def _score_grid(preds, view: evaluation.GoldView) -> dict:
    grid: dict = {}
    for mode in ("identification", "classification"):
        grid[mode] = {}
        for criterion in ("exact", "head", "coref"):
            cfg = evaluation.MatchConfig(mode, criterion)
            report = evaluation.score(
                preds, view.golds, view.clusters, cfg, view.doc_info
            )
            grid[mode][criterion] = report.to_dict()
    return grid


def _print_grid(grid: dict):
    print(f"{'mode':<16}{'criterion':<10}{'P':>8}{'R':>8}{'F1':>8}")
    for mode, per_crit in grid.items():
        for criterion, cell in per_crit.items():
            print(f"{mode:<16}{criterion:<10}"
                  f"{100 * cell['precision']:>8.2f}"
                  f"{100 * cell['recall']:>8.2f}"
                  f"{100 * cell['f1']:>8.2f}")


def _eval_report(preds, docs, criterion: str) -> dict:
    view = evaluation.build_gold_view(docs)
    grid = _score_grid(preds, view)
    breakdown = evaluation.error_breakdown(
        preds, view.golds, view.clusters, criterion
    )
    distances = evaluation.distance_distribution(
        view.golds, breakdown.missing_keys
    )
    return {
        "scores": grid,
        "error_breakdown": {
            "criterion": criterion,
            "missing": breakdown.missing,
            "spurious": breakdown.spurious,
            "misclassified": breakdown.misclassified,
        },
        "distances": {
            "bucket_width": 25,
            "hist_all": {str(k): v for k, v in distances.hist_all.items()},
            "hist_missing": {str(k): v for k, v in distances.hist_missing.items()},
            "mean_all": distances.mean_all,
            "mean_missing": distances.mean_missing,
        },
    }


def cmd_eval(cfg: RunConfig) -> int:
    _require(cfg, "documents", "predictions")
    docs = corpus.load_documents(cfg.documents)
    preds = _load_predictions(cfg.predictions)
    report = _eval_report(preds, docs, cfg.criterion)
    _print_grid(report["scores"])
    eb = report["error_breakdown"]
    print(f"errors ({eb['criterion']}): {eb['missing']} missing, "
          f"{eb['spurious']} spurious, {eb['misclassified']} misclassified")
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    return 0


def cmd_compare(cfg: RunConfig, path_a: str, path_b: str) -> int:
    _require(cfg, "documents")
    docs = corpus.load_documents(cfg.documents)
    view = evaluation.build_gold_view(docs)
    preds_a = _load_predictions(path_a)
    preds_b = _load_predictions(path_b)
    mcfg = evaluation.MatchConfig(cfg.mode, cfg.criterion)
    f1_a = evaluation.score(preds_a, view.golds, view.clusters, mcfg).f1
    f1_b = evaluation.score(preds_b, view.golds, view.clusters, mcfg).f1
    p = evaluation.bootstrap_significance(
        preds_a, preds_b, view.golds, view.clusters, mcfg,
        n=cfg.bootstrap_n, seed=cfg.seed,
    )
    print(f"F1 a={100 * f1_a:.2f} b={100 * f1_b:.2f} "
          f"({cfg.mode}/{cfg.criterion}), p(b >= a) = {p:.4f} "
          f"over {cfg.bootstrap_n} resamples")
    return 0


def cmd_stats(paths) -> int:
    print(f"{'split':<16}{'docs':>7}{'sents':>8}{'avg events':>12}{'avg tokens':>12}")
    for path in paths:
        docs = corpus.load_documents(path)
        s = corpus.dataset_stats(docs)
        name = str(path).rsplit("/", 1)[-1].rsplit(".", 1)[0]
        if s.avg_events is None:
            print(f"{name:<16}{s.doc_count:>7}{s.sentence_count:>8}"
                  f"{'n/a':>12}{'n/a':>12}")
        else:
            print(f"{name:<16}{s.doc_count:>7}{s.sentence_count:>8}"
                  f"{s.avg_events:>12.2f}{s.avg_tokens:>12.2f}")
    return 0


def cmd_adversarial(cfg: RunConfig, insertions_path: str) -> int:
    _require(cfg, "ontology", "documents", "out")
    ontology = load_ontology(cfg.ontology)
    docs = corpus.load_documents(cfg.documents)
    by_doc: dict[str, list] = {}
    for ins in corpus.load_insertions(insertions_path):
        by_doc.setdefault(ins.doc_id, []).append(ins)
    spliced = []
    for doc in docs:
        for ins in by_doc.get(doc.doc_id, ()):
            doc = corpus.splice_adversarial(doc, ins)
        spliced.append(doc)
    results = _run_extraction(cfg, spliced, ontology)
    _write_predictions(cfg.out, spliced, results)
    preds = _load_predictions(cfg.out)
    report = _eval_report(preds, spliced, cfg.criterion)
    _print_grid(report["scores"])
    if cfg.predictions:  # reused as the report path for this command
        with open(cfg.predictions, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    n_errors = sum(len(r[2]) for r in results)
    return 1 if n_errors else 0


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--ontology")
    p.add_argument("--documents")
    p.add_argument("--seed", type=int)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="docarg",
        description="Document-level event argument extraction with memory "
                    "and argument-pair constraints",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("harvest", help="mine argument-pair constraints")
    _add_common(p)
    p.add_argument("--out", help="constraint file to write")
    p.add_argument("--threshold", type=float)
    p.add_argument("--curation", help="curation overlay to apply")
    p.add_argument("--flip-orientation", action="store_true",
                   help="label above-threshold pairs improbable instead")

    p = sub.add_parser("extract", help="extract arguments for every event")
    _add_common(p)
    p.add_argument("--constraints")
    p.add_argument("--curation")
    p.add_argument("--generator", help="table:PATH | ngram:PATH | sidecar:ENDPOINT")
    p.add_argument("--embedder", help="hash:DIM | sidecar:ENDPOINT")
    p.add_argument("--out", help="predictions file to write")
    p.add_argument("--ablation", choices=["none", "no_retrieval", "random_memory"])
    p.add_argument("--unconstrained", action="store_true",
                   help="disable probability adjustment")
    p.add_argument("--penalty", type=float)
    p.add_argument("--boost", type=float)
    p.add_argument("--promotion-min-count", type=int)
    p.add_argument("--no-penalize", action="store_true")
    p.add_argument("--no-promote", action="store_true")
    p.add_argument("--max-input-length", type=int)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--dump-inputs", help="also write rendered generator inputs")

    p = sub.add_parser("eval", help="score a predictions file against gold")
    _add_common(p)
    p.add_argument("--predictions")
    p.add_argument("--criterion", choices=["exact", "head", "coref"])
    p.add_argument("--out", help="report JSON to write")

    p = sub.add_parser("stats", help="corpus statistics per documents file")
    p.add_argument("files", nargs="+")

    p = sub.add_parser("adversarial",
                       help="splice distractor sentences, extract, and score")
    _add_common(p)
    p.add_argument("--insertions", required=True)
    p.add_argument("--constraints")
    p.add_argument("--curation")
    p.add_argument("--generator")
    p.add_argument("--embedder")
    p.add_argument("--out", help="predictions file to write")
    p.add_argument("--report", help="report JSON to write")
    p.add_argument("--ablation", choices=["none", "no_retrieval", "random_memory"])
    p.add_argument("--unconstrained", action="store_true")
    p.add_argument("--max-input-length", type=int)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--workers", type=int)

    p = sub.add_parser("compare", help="paired bootstrap between two systems")
    _add_common(p)
    p.add_argument("--predictions-a", required=True)
    p.add_argument("--predictions-b", required=True)
    p.add_argument("--mode", choices=["identification", "classification"])
    p.add_argument("--criterion", choices=["exact", "head", "coref"])
    p.add_argument("--bootstrap-n", type=int)
    return parser


_CONFIG_KEYS = (
    "ontology", "documents", "constraints", "curation", "out", "generator",
    "embedder", "threshold", "penalty", "boost", "promotion_min_count",
    "ablation", "max_input_length", "max_steps", "seed", "workers",
    "dump_inputs", "criterion", "mode", "bootstrap_n", "predictions",
)


def _config_from(args: argparse.Namespace) -> RunConfig:
    overrides: dict = {}
    for key in _CONFIG_KEYS:
        if hasattr(args, key):
            overrides[key] = getattr(args, key)
    if getattr(args, "unconstrained", False):
        overrides["constrained"] = False
    if getattr(args, "no_penalize", False):
        overrides["penalize"] = False
    if getattr(args, "no_promote", False):
        overrides["promote"] = False
    return load_run_config(getattr(args, "config", None), overrides)


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command == "stats":
            return cmd_stats(args.files)
        cfg = _config_from(args)
        if args.command == "harvest":
            return cmd_harvest(cfg, flip=args.flip_orientation)
        if args.command == "extract":
            return cmd_extract(cfg)
        if args.command == "eval":
            return cmd_eval(cfg)
        if args.command == "adversarial":
            cfg.predictions = args.report
            return cmd_adversarial(cfg, args.insertions)
        if args.command == "compare":
            return cmd_compare(cfg, args.predictions_a, args.predictions_b)
        raise DocargError(f"unknown command {args.command!r}")
    except (DocargError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
