"""Cluster labels and concept trees from citing-article text.

Candidate phrases are contiguous runs of non-stopword tokens (length 1-4)
from lowercased, punctuation-stripped text. A cluster's label is the phrase
most strongly associated with the cluster's citing articles, scored by the
log-likelihood ratio against all citing articles; concept trees organize
phrases by token containment with document-frequency support.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from importlib import resources

from .cocitation import CoCitationNetwork
from .sources import CitationSnapshot

MAX_PHRASE_TOKENS = 4

_TOKEN_RE = re.compile(r"[a-z0-9]+(?:[-'][a-z0-9]+)*")


def load_stopwords() -> frozenset[str]:
    text = resources.files("citecascade.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(
        line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")
    )


_STOPWORDS = load_stopwords()


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def extract_phrases(text: str, max_tokens: int = MAX_PHRASE_TOKENS) -> set[str]:
    """All contiguous sub-phrases of the text's stopword-free runs."""
    phrases: set[str] = set()
    run: list[str] = []
    for token in tokenize(text) + ["."]:  # sentinel flushes the last run
        if token in _STOPWORDS or token == ".":
            for start in range(len(run)):
                for end in range(start + 1, min(start + max_tokens, len(run)) + 1):
                    phrases.add(" ".join(run[start:end]))
            run = []
        else:
            run.append(token)
    return phrases


def phrase_document_frequencies(texts: list[str]) -> dict[str, int]:
    """How many texts contain each phrase (each text counts once)."""
    df: dict[str, int] = {}
    for text in texts:
        for phrase in extract_phrases(text):
            df[phrase] = df.get(phrase, 0) + 1
    return df


def log_likelihood_ratio(k11: int, k12: int, k21: int, k22: int) -> float:
    """Dunning's G-squared for a 2x2 contingency table (0*ln(0) = 0)."""

    def term(k: float, expected: float) -> float:
        if k == 0 or expected == 0:
            return 0.0
        return k * math.log(k / expected)

    total = k11 + k12 + k21 + k22
    if total == 0:
        return 0.0
    row1, row2 = k11 + k12, k21 + k22
    col1, col2 = k11 + k21, k12 + k22
    e11 = row1 * col1 / total
    e12 = row1 * col2 / total
    e21 = row2 * col1 / total
    e22 = row2 * col2 / total
    return 2.0 * (term(k11, e11) + term(k12, e12) + term(k21, e21) + term(k22, e22))


def _citers_of(members: set[str], snapshot: CitationSnapshot) -> set[str]:
    citers: set[str] = set()
    for member in members:
        if member in snapshot:
            citers.update(snapshot.get_citers(member))
    return citers


def label_cluster(
    cluster_members: set[str],
    network: CoCitationNetwork,
    snapshot: CitationSnapshot,
    index: int,
    background_citers: set[str] | None = None,
) -> str:
    """Best-associated phrase from titles of articles citing the cluster.

    Scoring: log-likelihood ratio of the phrase's document frequency in the
    cluster's citers versus all citers (of the whole network unless a
    background is supplied); only overrepresented phrases qualify. Ties break
    by frequency, then alphabetically. Falls back to the most frequent title
    bigram, then to "unlabeled-<index>".
    """
    cluster_citers = _citers_of(cluster_members, snapshot)
    if not cluster_citers:
        return f"unlabeled-{index}"
    if background_citers is None:
        background_citers = _citers_of(set(network.nodes), snapshot)
    other_citers = background_citers - cluster_citers

    cluster_titles = [snapshot.record(c).title for c in sorted(cluster_citers)]
    other_titles = [snapshot.record(c).title for c in sorted(other_citers)]
    df_cluster = phrase_document_frequencies(cluster_titles)
    df_other = phrase_document_frequencies(other_titles)
    n_cluster, n_other = len(cluster_titles), len(other_titles)

    best: tuple[float, int, str] | None = None
    for phrase, k11 in df_cluster.items():
        k12 = df_other.get(phrase, 0)
        k21 = n_cluster - k11
        k22 = n_other - k12
        observed_rate = k11 / n_cluster
        overall_rate = (k11 + k12) / (n_cluster + n_other)
        if observed_rate <= overall_rate:
            continue
        score = log_likelihood_ratio(k11, k12, k21, k22)
        if score <= 0:
            continue
        key = (-score, -k11, phrase)
        if best is None or key < best:
            best = key
    if best is not None:
        return best[2]

    bigrams = {p: n for p, n in df_cluster.items() if len(p.split()) == 2}
    if bigrams:
        return sorted(bigrams.items(), key=lambda item: (-item[1], item[0]))[0][0]
    return f"unlabeled-{index}"


def label_all_clusters(
    partition, network: CoCitationNetwork, snapshot: CitationSnapshot,
    background_members: set[str] | None = None,
) -> None:
    """Fill partition.labels for every cluster (in place)."""
    background = _citers_of(
        background_members if background_members is not None else set(network.nodes), snapshot
    )
    for index, members in enumerate(partition.clusters()):
        partition.labels[index] = label_cluster(
            members, network, snapshot, index, background_citers=background
        )


# -- concept trees ---------------------------------------------------------------


@dataclass
class ConceptNode:
    phrase: str
    support: int
    children: list["ConceptNode"] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "phrase": self.phrase,
            "support": self.support,
            "children": [c.to_json_dict() for c in self.children],
        }


@dataclass
class ConceptTree:
    """Forest of phrases ordered by containment, under a virtual root."""

    roots: list[ConceptNode] = field(default_factory=list)

    def is_empty(self) -> bool:
        return not self.roots

    def to_json_dict(self) -> dict:
        return {"roots": [r.to_json_dict() for r in self.roots]}

    def to_text(self) -> str:
        lines: list[str] = []

        def walk(node: ConceptNode, depth: int) -> None:
            lines.append("  " * depth + f"{node.phrase} ({node.support})")
            for child in node.children:
                walk(child, depth + 1)

        for root in self.roots:
            walk(root, 0)
        return "\n".join(lines) + ("\n" if lines else "")


def build_concept_tree(
    cluster_members: set[str],
    snapshot: CitationSnapshot,
    min_support: int = 1,
) -> ConceptTree:
    """Containment hierarchy of phrases from citing articles' titles+abstracts.

    A phrase's parent is the most frequent shorter phrase whose tokens are a
    subset of its own and whose support is at least as large (so support never
    grows down a branch). Support ties prefer the longest such phrase (the
    closest ancestor), then alphabetical order.
    """
    citers = _citers_of(cluster_members, snapshot)
    texts = []
    for citer in sorted(citers):
        record = snapshot.record(citer)
        text = record.title
        if record.abstract:
            text += ". " + record.abstract
        if text.strip():
            texts.append(text)
    if not texts:
        return ConceptTree()

    support = {p: n for p, n in phrase_document_frequencies(texts).items() if n >= min_support}
    if not support:
        return ConceptTree()

    nodes = {phrase: ConceptNode(phrase, count) for phrase, count in support.items()}
    roots: list[ConceptNode] = []
    for phrase in sorted(support):
        tokens = set(phrase.split())
        length = len(phrase.split())
        candidates = [
            q
            for q in support
            if len(q.split()) < length
            and set(q.split()) <= tokens
            and support[q] >= support[phrase]
        ]
        if candidates:
            parent = sorted(candidates, key=lambda q: (-support[q], -len(q.split()), q))[0]
            nodes[parent].children.append(nodes[phrase])
        else:
            roots.append(nodes[phrase])

    def order(children: list[ConceptNode]) -> list[ConceptNode]:
        return sorted(children, key=lambda n: (-n.support, n.phrase))

    for node in nodes.values():
        node.children = order(node.children)
    return ConceptTree(roots=order(roots))
