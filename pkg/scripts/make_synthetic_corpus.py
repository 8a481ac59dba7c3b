#!/usr/bin/env python3
"""Generate the bundled synthetic 500-article corpus (tests/data/synthetic_500.jsonl).

Fully deterministic: a fixed seed drives every choice, so re-running this
script reproduces the file byte for byte. The corpus has four loose topic
communities, citation links biased toward same-topic earlier articles, a few
unknown-year records, a few unresolvable references, and one duplicate row —
enough texture to exercise every pipeline stage.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

SEED = 20240401
N_ARTICLES = 500
OUT = Path(__file__).resolve().parent.parent / "tests" / "data" / "synthetic_500.jsonl"

TOPICS = {
    "spectral": {
        "years": (1975, 2005),
        "words": [
            "spectral clustering", "graph laplacian", "eigenvalue bounds", "sparse graphs",
            "random walks", "partition quality", "spectral gap", "normalized cuts",
        ],
    },
    "folding": {
        "years": (1982, 2012),
        "words": [
            "protein folding", "energy landscape", "molecular dynamics", "contact maps",
            "secondary structure", "folding kinetics", "residue interaction", "conformational search",
        ],
    },
    "rl": {
        "years": (1992, 2019),
        "words": [
            "reinforcement learning", "policy gradient", "value iteration", "reward shaping",
            "exploration strategies", "temporal difference", "markov decision", "actor critic",
        ],
    },
    "epidemics": {
        "years": (1998, 2019),
        "words": [
            "network epidemics", "contact tracing", "outbreak dynamics", "infection threshold",
            "vaccination strategies", "epidemic spreading", "mobility networks", "compartment models",
        ],
    },
}

FILLER = ["methods", "analysis", "models", "evaluation", "survey", "framework", "estimation"]


def main() -> None:
    rng = random.Random(SEED)
    topic_names = list(TOPICS)
    articles = []
    for i in range(N_ARTICLES):
        topic = topic_names[i % len(topic_names)]
        lo, hi = TOPICS[topic]["years"]
        # Years trend upward with index so references can point backward.
        frac = i / (N_ARTICLES - 1)
        year = lo + int(frac * (hi - lo)) + rng.randint(-2, 2)
        year = max(lo, min(hi, year))
        words = TOPICS[topic]["words"]
        title = " ".join(
            [rng.choice(words), rng.choice(FILLER), "of", rng.choice(words)]
        )
        articles.append({"id": f"P{i:03d}", "topic": topic, "year": year, "title": title})

    articles.sort(key=lambda a: (a["year"], a["id"]))
    by_topic: dict[str, list[int]] = {t: [] for t in topic_names}
    for idx, art in enumerate(articles):
        by_topic[art["topic"]].append(idx)

    records = []
    for idx, art in enumerate(articles):
        candidates_same = [j for j in by_topic[art["topic"]] if j < idx]
        candidates_any = list(range(idx))
        n_refs = rng.randint(3, 12) if idx > 5 else rng.randint(0, min(3, idx))
        refs: list[str] = []
        seen = set()
        for _ in range(n_refs):
            pool = candidates_same if (candidates_same and rng.random() < 0.75) else candidates_any
            if not pool:
                continue
            j = rng.choice(pool)
            rid = articles[j]["id"]
            if rid not in seen:
                seen.add(rid)
                refs.append(rid)
        if rng.random() < 0.05:
            refs.append(f"EXT{rng.randint(0, 99):02d}")  # unresolvable on purpose
        record = {
            "id": art["id"],
            "title": art["title"],
            "year": art["year"],
            "reference_ids": refs,
            "source_tag": "synthetic",
        }
        if rng.random() < 0.6:
            record["global_citation_count"] = rng.randint(0, 60)
        if rng.random() < 0.08:
            record["abstract"] = (
                f"A study of {art['title']} with emphasis on "
                f"{rng.choice(TOPICS[art['topic']]['words'])}."
            )
        records.append(record)

    # A few unknown-year records (explicit null year).
    for k, idx in enumerate(rng.sample(range(len(records)), 3)):
        records[idx]["year"] = None

    # One duplicate row with a truncated reference list; the merge must keep the richer one.
    duplicate = dict(records[42])
    duplicate["reference_ids"] = duplicate["reference_ids"][:1]
    records.append(duplicate)

    OUT.parent.mkdir(parents=True, exist_ok=True)
    with open(OUT, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    print(f"wrote {len(records)} rows -> {OUT}")


if __name__ == "__main__":
    main()
