"""Precision/recall/F1 scoring, frequency buckets and the MFS baseline."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

from ..errors import UnknownPairing
from ..wordnet_kb import KnowledgeGraph, Pos, SynsetId, candidate_synsets, sense_key_for
from .datasets import EvalInstance

BUCKETS = ("0<=f<=5", "5<f<=30", "30<f<=150", "f>150")
_POS_ORDER = (Pos.NOUN, Pos.VERB, Pos.ADJ, Pos.ADV)


@dataclass
class Counts:
    attempted: int = 0
    correct: int = 0
    total: int = 0

    def add(self, attempted: bool, correct: bool) -> None:
        self.total += 1
        self.attempted += attempted
        self.correct += correct

    @property
    def precision(self) -> float:
        return self.correct / self.attempted if self.attempted else 0.0

    @property
    def recall(self) -> float:
        return self.correct / self.total if self.total else 0.0

    @property
    def f1(self) -> float:
        return f1_of(self.correct, self.attempted, self.total)


def f1_of(correct: int, attempted: int, total: int) -> float:
    # When attempted == total, P == R and the harmonic mean is returned exactly.
    if not correct:
        return 0.0
    if attempted == total:
        return correct / total
    p, r = correct / attempted, correct / total
    return 2 * p * r / (p + r)


@dataclass
class ScoreReport:
    precision: float
    recall: float
    f1: float
    counts: Counts
    per_pos: Dict[Pos, float] = field(default_factory=dict)
    pos_counts: Dict[Pos, Counts] = field(default_factory=dict)
    buckets: Dict[str, float] = field(default_factory=dict)
    bucket_counts: Dict[str, Counts] = field(default_factory=dict)


def _report(c: Counts) -> ScoreReport:
    return ScoreReport(c.precision, c.recall, c.f1, c)


def score(predictions: Mapping[str, str], instances: Sequence[EvalInstance]) -> ScoreReport:
    """A prediction is correct when its key is among the instance's gold keys.

    Instances without a prediction count against recall only.
    """
    ids = {inst.id for inst in instances}
    extra = set(predictions) - ids
    if extra:
        raise ValueError(f"predictions for unknown instance ids: {sorted(extra)[:5]}")
    overall = Counts()
    by_pos: Dict[Pos, Counts] = {}
    for inst in instances:
        key = predictions.get(inst.id)
        hit = key is not None and key in inst.gold_keys
        overall.add(key is not None, hit)
        by_pos.setdefault(inst.pos.index_pos, Counts()).add(key is not None, hit)
    rep = _report(overall)
    rep.pos_counts = {p: by_pos[p] for p in _POS_ORDER if p in by_pos}
    rep.per_pos = {p: c.f1 for p, c in rep.pos_counts.items()}
    return rep


def bucket_of(freq: int) -> str:
    if freq <= 5:
        return BUCKETS[0]
    if freq <= 30:
        return BUCKETS[1]
    if freq <= 150:
        return BUCKETS[2]
    return BUCKETS[3]


def gold_synset(graph: Optional[KnowledgeGraph], inst: EvalInstance) -> Optional[SynsetId]:
    """Synset of the first listed gold key (None if the key is unknown)."""
    return graph.synset_for_key(inst.gold_keys[0]) if graph is not None else None


def bucket_counts(train_counts: Mapping, instances: Sequence[EvalInstance],
                  predictions: Mapping[str, str], graph: Optional[KnowledgeGraph] = None
                  ) -> Dict[str, Counts]:
    """Per-bucket counts, bucketed by the training frequency of each gold synset.

    ``train_counts`` may be keyed by SynsetId or by synset name.
    """
    out = {b: Counts() for b in BUCKETS}
    for inst in instances:
        sid = gold_synset(graph, inst)
        freq = 0
        if sid is not None:
            freq = train_counts.get(sid, train_counts.get(sid.name, 0))
        key = predictions.get(inst.id)
        out[bucket_of(freq)].add(key is not None, key is not None and key in inst.gold_keys)
    return out


def bucket_report(train_counts: Mapping, instances: Sequence[EvalInstance],
                  predictions: Mapping[str, str], graph: Optional[KnowledgeGraph] = None
                  ) -> Dict[str, float]:
    """Bucket label -> F1 (empty buckets score 0)."""
    return {b: c.f1 for b, c in bucket_counts(train_counts, instances, predictions, graph).items()}


def full_report(predictions: Mapping[str, str], instances: Sequence[EvalInstance],
                train_counts: Mapping = None, graph: Optional[KnowledgeGraph] = None) -> ScoreReport:
    rep = score(predictions, instances)
    rep.bucket_counts = bucket_counts(train_counts or {}, instances, predictions, graph)
    rep.buckets = {b: c.f1 for b, c in rep.bucket_counts.items()}
    return rep


def mfs_predict(instances: Iterable[EvalInstance], graph: KnowledgeGraph) -> Dict[str, str]:
    """Sense key of the rank-1 candidate; instances without candidates are left out."""
    out = {}
    for inst in instances:
        cands = candidate_synsets(graph, inst.lemma, inst.pos)
        if cands:
            out[inst.id] = sense_key_for(graph, inst.lemma, cands[0])
    return out


def keys_for(graph: KnowledgeGraph, instances: Sequence[EvalInstance],
             synsets: Sequence[Optional[SynsetId]]) -> Dict[str, str]:
    """Turn predicted synsets into sense keys of each instance's lemma."""
    out = {}
    for inst, sid in zip(instances, synsets):
        if sid is None:
            continue
        try:
            out[inst.id] = sense_key_for(graph, inst.lemma, sid)
        except UnknownPairing:
            continue
    return out


# --------------------------------------------------------------------------
# Report files
# --------------------------------------------------------------------------

def report_rows(rep: ScoreReport) -> List[tuple]:
    rows = [("overall", "all", rep.counts)]
    rows += [("pos", p.tag, c) for p, c in rep.pos_counts.items()]
    rows += [("bucket", b, c) for b, c in rep.bucket_counts.items()]
    return rows


def write_report_tsv(path, rep: ScoreReport) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("scope\tname\tprecision\trecall\tf1\tattempted\tcorrect\ttotal\n")
        for scope, name, c in report_rows(rep):
            fh.write(f"{scope}\t{name}\t{100 * c.precision:.2f}\t{100 * c.recall:.2f}\t"
                     f"{100 * c.f1:.2f}\t{c.attempted}\t{c.correct}\t{c.total}\n")


def format_table(rep: ScoreReport, title: str = "") -> str:
    lines = [title] if title else []
    lines.append(f"{'scope':<8} {'name':<10} {'P':>6} {'R':>6} {'F1':>6} {'n':>6}")
    for scope, name, c in report_rows(rep):
        lines.append(f"{scope:<8} {name:<10} {100 * c.precision:6.2f} {100 * c.recall:6.2f} "
                     f"{100 * c.f1:6.2f} {c.total:6d}")
    return "\n".join(lines)
