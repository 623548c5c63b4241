"""Candidate-restricted prediction with optional most-frequent-sense bias and backoff."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from ..errors import NoCandidates
from ..wordnet_kb import KnowledgeGraph, Pos, SynsetId, candidate_synsets
from .model import Model
from .network import encode_forward, make_batch, softmax

MFS = "MFS"
RANDOM = "RANDOM"


@dataclass
class InferOptions:
    mfs_bias: float = 0.0
    backoff: str = MFS
    seed: int = 0

    def __post_init__(self):
        if self.backoff not in (MFS, RANDOM):
            raise ValueError(f"backoff must be {MFS} or {RANDOM}")


@dataclass
class Query:
    """One target: its token context, and the lemma/POS used to look up candidates."""

    surfaces: Sequence[str]
    target_index: int
    lemma: str
    pos: Pos
    key: str = ""


def _rng_for(options: InferOptions, query: Query) -> np.random.Generator:
    text = f"{options.seed}\t{query.key}\t{query.target_index}\t{' '.join(query.surfaces)}"
    return np.random.default_rng(int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little"))


def choose(candidates: List[SynsetId], probs: Optional[np.ndarray], options: InferOptions,
           query: Query) -> SynsetId:
    """Pick among ranked candidates given per-candidate model probabilities.

    ``probs`` is None when no candidate is in the model's synset vocabulary, in
    which case the backoff rule applies.  Candidates unknown to the model score 0.
    """
    if len(candidates) == 1:
        return candidates[0]
    if probs is None:
        if options.backoff == MFS:
            return candidates[0]
        return candidates[int(_rng_for(options, query).integers(len(candidates)))]
    scores = probs.astype(float).copy()
    scores[0] += options.mfs_bias
    return candidates[int(np.argmax(scores))]  # first max = lowest rank


def restricted_probs(model: Model, ctx: np.ndarray, candidates: List[SynsetId]) -> Optional[np.ndarray]:
    """Synset-head distribution renormalized over the candidates seen in training."""
    idx = [model.syn_index.get(c.name) for c in candidates]
    known = [i for i in idx if i is not None]
    if not known:
        return None
    logits = model.params["syn_out"][known] @ ctx
    p_known = softmax(logits)
    out = np.zeros(len(candidates))
    out[[k for k, i in enumerate(idx) if i is not None]] = p_known
    return out


def infer_many(model: Model, graph: KnowledgeGraph, queries: Sequence[Query],
               options: Optional[InferOptions] = None, batch_size: int = 256) -> List[Optional[SynsetId]]:
    """Predict every query; ``None`` where the lemma/POS has no WordNet candidates."""
    options = options or InferOptions()
    T = model.config.t_window
    cands = [candidate_synsets(graph, q.lemma, q.pos) for q in queries]
    need = [k for k, c in enumerate(cands)
            if len(c) > 1 and any(s.name in model.syn_index for s in c)]
    ctxs = {}
    for start in range(0, len(need), batch_size):
        chunk = need[start:start + batch_size]
        lefts = [list(queries[k].surfaces[max(0, queries[k].target_index - T):queries[k].target_index])
                 for k in chunk]
        rights = [list(queries[k].surfaces[queries[k].target_index + 1:queries[k].target_index + 1 + T])
                  for k in chunk]
        ctx, _ = encode_forward(model, make_batch(model, lefts, rights), train=False)
        ctxs.update(zip(chunk, ctx))
    out = []
    for k, (q, c) in enumerate(zip(queries, cands)):
        if not c:
            out.append(None)
            continue
        probs = restricted_probs(model, ctxs[k], c) if k in ctxs else None
        out.append(choose(c, probs, options, q))
    return out


def infer(model: Model, graph: KnowledgeGraph, sentence, target_index: int,
          options: Optional[InferOptions] = None, lemma: Optional[str] = None,
          pos: Optional[Pos] = None) -> SynsetId:
    """Disambiguate ``sentence[target_index]`` (a sequence of tagged tokens).

    The lemma defaults to the WordNet base form of the surface under its POS.
    """
    tok = sentence[target_index]
    pos = pos or tok.pos
    if pos is None:
        raise NoCandidates(f"{tok.surface!r} has no WordNet POS")
    if lemma is None:
        lemma = graph.base_form(tok.surface, pos) or tok.surface
    query = Query([t.surface for t in sentence], target_index, lemma, pos)
    result = infer_many(model, graph, [query], options)[0]
    if result is None:
        raise NoCandidates(f"{lemma!r}/{pos.name} not in WordNet")
    return result
