"""Sense-labeled data generation from POS-tagged raw text.

Pipeline: corpus unigram counts -> estimated synset frequencies (rank-biased,
``f(w) * p ** rank`` summed over the words a synset can realize) -> per
(synset, feature word) quotas proportional to DisDict confidences -> occurrences
of feature words in the corpus become labeled contexts for their synsets.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .disdict import DisDict
from .errors import EmptyModel, IoFailure, MalformedToken
from .wordnet_kb import KnowledgeGraph, Pos, SynsetId, normalize_lemma

MANUAL = "MANUAL"
DISDICT = "DISDICT"

CORPUS_TAGS = {"NOUN": Pos.NOUN, "VERB": Pos.VERB, "ADJ": Pos.ADJ, "ADV": Pos.ADV, "OTHER": None}


@dataclass(frozen=True)
class TaggedToken:
    surface: str
    pos: Optional[Pos] = None  # None stands for OTHER

    def __post_init__(self):
        if not self.surface:
            raise MalformedToken("empty surface")

    @property
    def tag(self) -> str:
        return self.pos.tag if self.pos else "OTHER"

    def __str__(self):
        return f"{self.surface}_{self.tag}"


Sentence = List[TaggedToken]


@dataclass
class CorpusStats:
    word_freq: Counter = field(default_factory=Counter)
    token_total: int = 0

    def add(self, sentence: Sequence[TaggedToken]) -> None:
        for tok in sentence:
            self.word_freq[(tok.surface, tok.pos)] += 1
        self.token_total += len(sentence)

    def merge(self, other: "CorpusStats") -> "CorpusStats":
        return CorpusStats(self.word_freq + other.word_freq, self.token_total + other.token_total)


@dataclass(frozen=True)
class LabeledInstance:
    left: Tuple[str, ...]
    right: Tuple[str, ...]
    label: SynsetId
    provenance: str
    matched_word: str

    def to_json(self) -> str:
        return json.dumps({
            "left": list(self.left),
            "right": list(self.right),
            "label": self.label.name,
            "provenance": self.provenance,
            "matched_word": self.matched_word,
        }, ensure_ascii=False)


@dataclass(frozen=True)
class UnsupervisedPair:
    target: str
    left: Tuple[str, ...]
    right: Tuple[str, ...]


@dataclass
class Quota:
    per_pair: Dict[Tuple[SynsetId, str], int]
    per_synset: Dict[SynsetId, int]


@dataclass(frozen=True)
class QuotaRow:
    synset: SynsetId
    feature_word: str
    requested: int
    emitted: int


# --------------------------------------------------------------------------
# Corpus reading
# --------------------------------------------------------------------------

def parse_token(raw: str, graph: Optional[KnowledgeGraph] = None) -> TaggedToken:
    surface, sep, tag = raw.rpartition("_")
    if sep and tag in CORPUS_TAGS:
        surface = surface.lower()
        if not surface:
            raise MalformedToken(f"empty surface in {raw!r}")
        return TaggedToken(surface, CORPUS_TAGS[tag])
    surface = raw.lower()
    pos = graph.most_frequent_pos(surface) if graph is not None else None
    return TaggedToken(surface, pos)


def parse_sentence(line: str, graph: Optional[KnowledgeGraph] = None) -> Sentence:
    return [parse_token(t, graph) for t in line.split()]


def iter_corpus(path, graph: Optional[KnowledgeGraph] = None) -> Iterator[Sentence]:
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            try:
                sent = parse_sentence(line, graph)
            except MalformedToken as exc:
                raise MalformedToken(f"{path}:{lineno}: {exc}") from None
            if sent:
                yield sent


def load_corpus(path, graph: Optional[KnowledgeGraph] = None) -> Tuple[List[Sentence], CorpusStats]:
    """Read a ``surface_POS`` corpus; untagged tokens get their most frequent WordNet POS."""
    stats = CorpusStats()
    sentences = []
    for sent in iter_corpus(path, graph):
        stats.add(sent)
        sentences.append(sent)
    return sentences, stats


def corpus_stats(sentences: Iterable[Sentence]) -> CorpusStats:
    stats = CorpusStats()
    for sent in sentences:
        stats.add(sent)
    return stats


# --------------------------------------------------------------------------
# Frequencies and quotas
# --------------------------------------------------------------------------

def largest_remainder(weights: Mapping, total: int) -> Dict:
    """Integer apportionment of ``total`` proportional to ``weights`` (exact sum).

    Leftover units go to the largest fractional parts; ties by key order.
    """
    z = math.fsum(weights.values())
    if total == 0 or z == 0:
        return {k: 0 for k in weights}
    shares = {k: total * w / z for k, w in weights.items()}
    alloc = {k: int(math.floor(v)) for k, v in shares.items()}
    left = total - sum(alloc.values())
    order = sorted(shares, key=lambda k: (-(shares[k] - alloc[k]), _sort_key(k)))
    for k in order[:left]:
        alloc[k] += 1
    return alloc


def _sort_key(k):
    if isinstance(k, tuple):
        return tuple(_sort_key(x) for x in k)
    return getattr(k, "name", k)


def lemma_frequencies(stats: CorpusStats, graph: KnowledgeGraph) -> Counter:
    """Corpus counts folded onto (lemma, POS) pairs present in the WordNet index."""
    out: Counter = Counter()
    for (surface, pos), c in stats.word_freq.items():
        if pos is None:
            continue
        base = graph.base_form(surface, pos)
        if base is not None:
            out[(base, pos.index_pos)] += c
    return out


def raw_synset_scores(graph: KnowledgeGraph, lemma_freq: Mapping[Tuple[str, Pos], int],
                      p: float) -> Dict[SynsetId, float]:
    raw: Dict[SynsetId, float] = defaultdict(float)
    for (lemma, pos) in sorted(lemma_freq, key=lambda k: (k[0], k[1].value)):
        f = lemma_freq[(lemma, pos)]
        for rank, sid in enumerate(graph.sense_index.get((normalize_lemma(lemma), pos.index_pos), ()), 1):
            raw[sid] += f * p ** rank
    return dict(raw)


def synset_frequency_model(disdict: Optional[DisDict], graph: KnowledgeGraph, stats: CorpusStats,
                           p: float = 0.3, budget: int = 0) -> Dict[SynsetId, int]:
    """Estimated instance count per synset, scaled to sum exactly to ``budget``."""
    if not 0 < p <= 1:
        raise ValueError("p must be in (0, 1]")
    if budget < 0:
        raise ValueError("budget must be >= 0")
    raw = raw_synset_scores(graph, lemma_frequencies(stats, graph), p)
    if disdict is not None:
        raw = {s: v for s, v in raw.items() if s in disdict.entries}
    if budget == 0:
        return {s: 0 for s in raw}
    if not raw or math.fsum(raw.values()) == 0:
        raise EmptyModel("no corpus word maps to a known synset")
    return largest_remainder(raw, budget)


def allocate_quota(f_map: Mapping[SynsetId, int], disdict: DisDict) -> Quota:
    per_pair = {}
    for sid in sorted(f_map):
        entries = disdict.entries.get(sid, [])
        if not entries:
            continue
        split = largest_remainder({e.feature_word: e.confidence for e in entries}, f_map[sid])
        for word, n in split.items():
            per_pair[(sid, word)] = n
    return Quota(per_pair, dict(f_map))


# --------------------------------------------------------------------------
# Matching and generation
# --------------------------------------------------------------------------

def match_forms(sentence: Sequence[TaggedToken], graph: Optional[KnowledgeGraph]) -> List[str]:
    """Per-token forms used for feature-word matching (base form when WordNet knows one)."""
    if graph is None:
        return [t.surface for t in sentence]
    out = []
    for tok in sentence:
        base = graph.base_form(tok.surface, tok.pos) if tok.pos is not None else None
        out.append(base or tok.surface)
    return out


class PhraseMatcher:
    """Greedy longest-match lookup of (possibly multiword) phrases over token forms."""

    def __init__(self, phrases: Iterable[str]):
        self.table = {}
        for phrase in phrases:
            key = tuple(phrase.split())
            if key:
                self.table[key] = " ".join(key)
        self.max_len = max((len(k) for k in self.table), default=0)

    def matches(self, forms: Sequence[str], accept=None) -> Iterator[Tuple[int, int, str]]:
        i, n = 0, len(forms)
        while i < n:
            hit = None
            for length in range(min(self.max_len, n - i), 0, -1):
                phrase = self.table.get(tuple(forms[i:i + length]))
                if phrase is not None and (accept is None or accept(phrase, i, i + length)):
                    hit = (i, i + length, phrase)
                    break
            if hit:
                yield hit
                i = hit[1]
            else:
                i += 1


def _head_pos(sentence, start, end, synset_pos: Pos):
    idx = start if synset_pos is Pos.VERB else end - 1
    return sentence[idx].pos


def competitors(graph: KnowledgeGraph, sid: SynsetId) -> set:
    out = set()
    pos = sid.pos.index_pos
    for lemma in graph.synsets[sid].lemmas:
        out.update(graph.sense_index.get((normalize_lemma(lemma), pos), ()))
    out.discard(sid)
    return out


def _pair_seed(seed: int, sid: SynsetId, word: str) -> int:
    digest = hashlib.sha256(f"{seed}\t{sid.name}\t{word}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def generate_instances(corpus: Iterable[Sentence], disdict: DisDict, quota: Quota,
                       t_window: int = 20, seed: int = 0,
                       graph: Optional[KnowledgeGraph] = None
                       ) -> Tuple[List[LabeledInstance], List[QuotaRow]]:
    """Label contexts of feature-word occurrences with their synsets.

    Returns the instances (ordered by sentence, position, synset name) and one
    summary row per pair with a positive quota.  With ``graph`` given, matching
    uses WordNet base forms and occurrences whose surface is an ambiguous word
    competing with the synset are skipped.
    """
    sentences = list(corpus)
    owners: Dict[str, List[SynsetId]] = defaultdict(list)
    for sid in sorted(disdict.entries):
        for e in disdict.entries[sid]:
            if quota.per_pair.get((sid, e.feature_word), 0) > 0:
                owners[e.feature_word].append(sid)
    matcher = PhraseMatcher(owners)

    skip_cache: Dict[Tuple[SynsetId, str], bool] = {}

    def skipped(sid, word):
        key = (sid, word)
        if key not in skip_cache:
            senses = graph.sense_index.get((word, sid.pos.index_pos), ())
            skip_cache[key] = len(senses) > 1 and bool(competitors(graph, sid) & set(senses))
        return skip_cache[key]

    occurrences: Dict[Tuple[SynsetId, str], List[Tuple[int, int, int]]] = defaultdict(list)
    for si, sent in enumerate(sentences):
        forms = match_forms(sent, graph)

        def accept(phrase, start, end, sent=sent):
            return any(_head_pos(sent, start, end, s.pos) is s.pos.index_pos for s in owners[phrase])

        for start, end, phrase in matcher.matches(forms, accept):
            for sid in owners[phrase]:
                if _head_pos(sent, start, end, sid.pos) is not sid.pos.index_pos:
                    continue
                if graph is not None and skipped(sid, phrase):
                    continue
                occurrences[(sid, phrase)].append((si, start, end))

    chosen = []
    summary = []
    for (sid, word) in sorted(quota.per_pair, key=_sort_key):
        requested = quota.per_pair[(sid, word)]
        if requested <= 0:
            continue
        occ = occurrences.get((sid, word), [])
        if len(occ) > requested:
            rng = np.random.default_rng(_pair_seed(seed, sid, word))
            picks = np.sort(rng.choice(len(occ), size=requested, replace=False))
            occ = [occ[i] for i in picks]
        summary.append(QuotaRow(sid, word, requested, len(occ)))
        chosen.extend((si, start, end, sid, word) for si, start, end in occ)

    chosen.sort(key=lambda x: (x[0], x[1], x[3].name, x[4]))
    instances = []
    for si, start, end, sid, word in chosen:
        surfaces = [t.surface for t in sentences[si]]
        instances.append(LabeledInstance(
            tuple(surfaces[max(0, start - t_window):start]),
            tuple(surfaces[end:end + t_window]),
            sid, DISDICT, word))
    return instances, summary


def extract_unsupervised_pairs(corpus: Iterable[Sentence], feature_vocab: Iterable[str],
                               t_window: int = 20,
                               graph: Optional[KnowledgeGraph] = None) -> List[UnsupervisedPair]:
    """One (target, left, right) triple per occurrence of a feature word."""
    matcher = PhraseMatcher(feature_vocab)
    pairs = []
    for sent in corpus:
        forms = match_forms(sent, graph)
        surfaces = [t.surface for t in sent]
        for start, end, phrase in matcher.matches(forms):
            pairs.append(UnsupervisedPair(
                phrase,
                tuple(surfaces[max(0, start - t_window):start]),
                tuple(surfaces[end:end + t_window])))
    return pairs


# --------------------------------------------------------------------------
# Files
# --------------------------------------------------------------------------

def write_instances(path, instances: Iterable[LabeledInstance]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for inst in instances:
            fh.write(inst.to_json() + "\n")


def read_instances(path, graph: Optional[KnowledgeGraph] = None) -> List[LabeledInstance]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            label = graph.sid(rec["label"]) if graph is not None else SynsetId.from_name(rec["label"])
            out.append(LabeledInstance(tuple(rec["left"]), tuple(rec["right"]), label,
                                       rec["provenance"], rec["matched_word"]))
    return out


def write_summary(path, rows: Iterable[QuotaRow]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("synset\tfeature_word\trequested\temitted\n")
        for r in rows:
            fh.write(f"{r.synset.name}\t{r.feature_word}\t{r.requested}\t{r.emitted}\n")


def write_pairs(path, pairs: Iterable[UnsupervisedPair]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in pairs:
            fh.write(json.dumps({"target": p.target, "left": list(p.left), "right": list(p.right)},
                                ensure_ascii=False) + "\n")


def read_pairs(path) -> List[UnsupervisedPair]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                out.append(UnsupervisedPair(rec["target"], tuple(rec["left"]), tuple(rec["right"])))
    return out
