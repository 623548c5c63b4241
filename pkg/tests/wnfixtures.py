"""Seeded WordNet-format fixtures and a brute-force dictionary oracle."""

from collections import Counter

import numpy as np

from disdict_wsd.synthetic import SynsetSpec
from disdict_wsd.wordnet_kb import harvest_candidates, iter_synsets

WORDS = ["ash", "bank", "cell", "dock", "echo", "fern", "gulf", "hull", "iris", "jade",
         "kiln", "lark", "mast", "nave", "opal", "pike", "quay", "reef", "silt", "tarn"]


def random_specs(seed: int, n: int = 40, pos_mix=("n", "n", "n", "v")):
    """``n`` synsets over a 20-word lexicon, with random lemmas, glosses and hypernyms."""
    rng = np.random.default_rng(seed)
    specs = []
    for i in range(n):
        pos = str(rng.choice(pos_mix))
        k = int(rng.integers(1, 4))
        lemmas = [str(w) for w in rng.choice(WORDS, size=k, replace=False)]
        gloss = " ".join(str(w) for w in rng.choice(WORDS, size=int(rng.integers(0, 6))))
        same = [s.handle for s in specs if s.pos == pos]
        hypers = []
        if same and rng.random() < 0.6:
            hypers = [str(rng.choice(same))]
        specs.append(SynsetSpec(f"s{i}", pos, lemmas, gloss, hypers))
    return specs


def oracle_disdict(graph, n_f: int, tau: float):
    """Score every harvested candidate straight from the raw harvest multisets."""
    harvest = {sid: harvest_candidates(graph, sid) for sid in iter_synsets(graph)}
    total = sum(sum(h.values()) for h in harvest.values())
    word_total = Counter()
    for h in harvest.values():
        word_total.update(h)
    out = {}
    for sid, h in harvest.items():
        syn_total = sum(h.values())
        scores = {w: (c / total) / ((syn_total / total) * (word_total[w] / total) ** tau)
                  for w, c in h.items()}
        top = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))[:n_f]
        z = sum(v for _, v in top)
        out[sid.name] = [(w, v / z) for w, v in top]
    return out
