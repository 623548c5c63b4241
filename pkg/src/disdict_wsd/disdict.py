"""Feature-word dictionary mined from WordNet.

Candidate words harvested for every synset are scored against the synset with a
frequency-damped association ratio::

    r(s, w) = p(s, w) / (p(s) * p(w) ** tau)

where all three probabilities share one global normalizer (the total number of
harvested (synset, word) counts).  The ``n_f`` best-scoring words of each synset
are kept and their scores rescaled to sum to one.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Tuple

from .errors import IoFailure, MalformedLine, ZeroMarginal
from .wordnet_kb import KnowledgeGraph, SynsetId, harvest_candidates, iter_synsets


@dataclass
class AssociationCounts:
    joint: Dict[Tuple[SynsetId, str], int] = field(default_factory=dict)
    synset_marginal: Dict[SynsetId, int] = field(default_factory=dict)
    word_marginal: Dict[str, int] = field(default_factory=dict)
    total: int = 0

    @classmethod
    def from_joint(cls, joint: Mapping[Tuple[SynsetId, str], int]) -> "AssociationCounts":
        syn_m: Counter = Counter()
        word_m: Counter = Counter()
        for (s, w), c in joint.items():
            if c < 0:
                raise ValueError(f"negative count for {(s, w)}")
            syn_m[s] += c
            word_m[w] += c
        return cls(dict(joint), dict(syn_m), dict(word_m), sum(syn_m.values()))

    def words_by_synset(self) -> Dict[SynsetId, List[str]]:
        index = defaultdict(list)
        for s, w in self.joint:
            index[s].append(w)
        return index


@dataclass(frozen=True)
class DisDictEntry:
    synset: SynsetId
    feature_word: str
    confidence: float


@dataclass
class DisDict:
    entries: Dict[SynsetId, List[DisDictEntry]]
    n_f: int

    def feature_vocab(self) -> set:
        return {e.feature_word for lst in self.entries.values() for e in lst}

    def by_name(self, name: str) -> List[DisDictEntry]:
        for sid, lst in self.entries.items():
            if sid.name == name:
                return lst
        raise KeyError(name)

    def __len__(self):
        return sum(len(v) for v in self.entries.values())


def build_counts(graph: KnowledgeGraph) -> AssociationCounts:
    joint = {}
    for sid in iter_synsets(graph):
        for word, c in harvest_candidates(graph, sid).items():
            joint[(sid, word)] = c
    return AssociationCounts.from_joint(joint)


def association_score(counts: AssociationCounts, synset: SynsetId, word: str, tau: float) -> float:
    if tau < 0:
        raise ValueError("tau must be non-negative")
    syn_total = counts.synset_marginal.get(synset, 0)
    if syn_total == 0:
        raise ZeroMarginal(getattr(synset, "name", synset))
    joint = counts.joint.get((synset, word), 0)
    if joint == 0:
        return 0.0
    total = counts.total
    p_joint = joint / total
    p_syn = syn_total / total
    p_word = counts.word_marginal[word] / total
    return p_joint / (p_syn * p_word ** tau)


def select_features(scored: Mapping[str, float], n_f: int) -> List[Tuple[str, float]]:
    """Top ``n_f`` (word, score) pairs, ties by word, scores renormalized to sum to 1."""
    ranked = sorted(((w, r) for w, r in scored.items() if r > 0), key=lambda x: (-x[1], x[0]))[:n_f]
    z = sum(r for _, r in ranked)
    return [(w, r / z) for w, r in ranked]


def build_disdict(graph: KnowledgeGraph, n_f: int = 10, tau: float = 0.66,
                  counts: AssociationCounts = None) -> DisDict:
    if n_f < 1:
        raise ValueError("n_f must be >= 1")
    if counts is None:
        counts = build_counts(graph)
    words_of = counts.words_by_synset()
    entries = {}
    for sid in iter_synsets(graph):
        words = words_of.get(sid)
        if not words:
            entries[sid] = []
            continue
        scored = {w: association_score(counts, sid, w, tau) for w in words}
        entries[sid] = [DisDictEntry(sid, w, c) for w, c in select_features(scored, n_f)]
    return DisDict(entries, n_f)


def _render_confidence(c: float) -> str:
    return f"{c:.9f}".rstrip("0").rstrip(".")


def format_entry(entry: DisDictEntry) -> str:
    return f"{entry.synset.name}\t{entry.feature_word}\t{_render_confidence(entry.confidence)}"


def save_disdict(d: DisDict, path) -> None:
    """Write one ``synset<TAB>word<TAB>confidence`` line per entry, grouped by synset name."""
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# disdict n_f={d.n_f}\n")
            for sid in sorted(d.entries):
                for entry in d.entries[sid]:
                    fh.write(format_entry(entry) + "\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def load_disdict(path, graph: KnowledgeGraph = None) -> DisDict:
    """Read a DisDict file.

    With a ``graph`` the synset names are resolved to the graph's ids (and every
    graph synset gets an entry list); otherwise name-only ids are created.
    """
    entries: Dict[SynsetId, List[DisDictEntry]] = {}
    n_f = 0
    if graph is not None:
        entries = {sid: [] for sid in graph.synsets}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                if "n_f=" in line:
                    n_f = int(line.split("n_f=", 1)[1].split()[0])
                continue
            parts = line.split("\t")
            if len(parts) != 3 or not parts[1]:
                raise MalformedLine(path, lineno, "expected synset<TAB>word<TAB>confidence")
            try:
                conf = float(parts[2])
            except ValueError:
                raise MalformedLine(path, lineno, f"bad confidence {parts[2]!r}") from None
            if not conf > 0 or conf > 1 + 1e-9:
                raise MalformedLine(path, lineno, f"confidence {conf} outside (0, 1]")
            if graph is not None:
                if parts[0] not in graph.by_name:
                    raise MalformedLine(path, lineno, f"unknown synset {parts[0]!r}")
                sid = graph.by_name[parts[0]]
            else:
                sid = SynsetId.from_name(parts[0])
            entries.setdefault(sid, []).append(DisDictEntry(sid, parts[1], conf))
    if not n_f:
        n_f = max((len(v) for v in entries.values()), default=1) or 1
    return DisDict(entries, n_f)


def disdict_stats(d: DisDict) -> Dict[str, float]:
    sizes = [len(v) for v in d.entries.values()]
    covered = sum(1 for s in sizes if s)
    return {
        "synsets": len(sizes),
        "covered_synsets": covered,
        "entries": sum(sizes),
        "feature_vocab": len(d.feature_vocab()),
        "mean_entries_per_covered": (sum(sizes) / covered) if covered else 0.0,
    }


__all__ = [
    "AssociationCounts", "DisDict", "DisDictEntry", "association_score", "build_counts",
    "build_disdict", "disdict_stats", "format_entry", "load_disdict", "save_disdict",
    "select_features",
]
