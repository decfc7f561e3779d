#!/usr/bin/env python3
"""Convert a WikiEvents release split to the line-delimited document format.

Input: the split's annotation file (one JSON object per line with
``doc_id``, ``tokens``, ``sentences``, ``entity_mentions``,
``event_mentions``) and optionally the matching coreference file (one
object per line with ``doc_key`` and ``clusters`` of entity-mention
ids).  Field mapping:

  tokens            -> tokens (document-level word offsets throughout)
  sentences         -> sentence_bounds (cumulative sentence lengths)
  event_mentions    -> events: id/event_type/trigger start,end and one
                       argument per role filler, its span looked up in
                       entity_mentions by entity_id
  coref clusters    -> clusters: mention spans of every member entity;
                       argument entity ids are rewritten to the cluster's
                       first member so cluster membership is a plain id
                       equality at scoring time

Arguments whose entity id has no mention entry are dropped (counted in
the summary).  Unparseable sentence structures fall back to one bound
spanning the document.
"""

import argparse
import json
import sys


def sentence_bounds(raw_sentences, n_tokens):
    counts = []
    try:
        for sent in raw_sentences:
            part = sent[0] if isinstance(sent, (list, tuple)) and len(sent) == 2 else sent
            counts.append(len(part))
    except TypeError:
        counts = []
    if not counts or sum(counts) != n_tokens:
        return [[0, n_tokens]] if n_tokens else []
    bounds, pos = [], 0
    for c in counts:
        bounds.append([pos, pos + c])
        pos += c
    return bounds


def load_coref(path):
    canonical, members = {}, {}
    if not path:
        return canonical, members
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            doc_clusters = []
            for cluster in rec.get("clusters", ()):
                if not cluster:
                    continue
                head = cluster[0]
                for member in cluster:
                    canonical[(rec["doc_key"], member)] = head
                doc_clusters.append((head, list(cluster)))
            members[rec["doc_key"]] = doc_clusters
    return canonical, members


def convert_doc(rec, canonical, members):
    doc_id = rec["doc_id"]
    mention_span = {
        m["id"]: [m["start"], m["end"]] for m in rec.get("entity_mentions", ())
    }
    dropped = 0
    events = []
    for ev in rec.get("event_mentions", ()):
        args = []
        for arg in ev.get("arguments", ()):
            span = mention_span.get(arg["entity_id"])
            if span is None:
                dropped += 1
                continue
            entity = canonical.get((doc_id, arg["entity_id"]), arg["entity_id"])
            args.append({"role": arg["role"], "span": span, "entity_id": entity})
        events.append({
            "event_id": ev["id"],
            "event_type": ev["event_type"],
            "trigger": [ev["trigger"]["start"], ev["trigger"]["end"]],
            "arguments": args,
        })
    clusters = []
    for i, (head, ids) in enumerate(members.get(doc_id, ())):
        spans = [mention_span[m] for m in ids if m in mention_span]
        if spans:
            clusters.append({
                "cluster_id": f"{doc_id}-c{i}",
                "entity_id": head,
                "mentions": spans,
            })
    out = {
        "doc_id": doc_id,
        "tokens": rec["tokens"],
        "sentence_bounds": sentence_bounds(rec.get("sentences", ()), len(rec["tokens"])),
        "events": events,
    }
    if clusters:
        out["clusters"] = clusters
    return out, dropped


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--split", required=True, help="WikiEvents annotation jsonl")
    ap.add_argument("--coref", help="matching coreference jsonl")
    ap.add_argument("--out", required=True)
    args = ap.parse_args()

    canonical, members = load_coref(args.coref)
    n_docs = dropped = 0
    with open(args.split, encoding="utf-8") as src, \
            open(args.out, "w", encoding="utf-8") as dst:
        for line in src:
            line = line.strip()
            if not line:
                continue
            doc, d = convert_doc(json.loads(line), canonical, members)
            dst.write(json.dumps(doc, ensure_ascii=False) + "\n")
            n_docs += 1
            dropped += d
    print(f"converted {n_docs} documents -> {args.out} "
          f"({dropped} arguments without entity mentions dropped)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
