"""
Building the discriminative dictionary
======================================

Each synset collects candidate words from its lemmas, gloss, examples and
direct neighbours.  Words are scored against how often they turn up for every
other synset, and the best ten become the synset's feature words.

Runs on the full WordNet 3.0 database when it is available (set
DISDICT_WORDNET), otherwise on the three-synset test fixture.
"""

import os
import time
from pathlib import Path

from disdict_wsd.disdict import build_disdict, disdict_stats, format_entry
from disdict_wsd.wordnet_kb import Pos, candidate_synsets, harvest_candidates, parse_wordnet

full = Path(os.environ.get("DISDICT_WORDNET", "/root/data/wordnet-3.0"))
tiny = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "tiny_wn"
db = full if (full / "data.noun").exists() else tiny
print("WordNet directory:", db)

t0 = time.perf_counter()
graph = parse_wordnet(db)
print(f"{len(graph)} synsets parsed in {time.perf_counter() - t0:.1f}s")

# Candidates of one synset, with their counts.
word = "player" if db == full else "dog"
senses = candidate_synsets(graph, word, Pos.NOUN)
print(f"\n{word}/NOUN has {len(senses)} senses; the first is {senses[0].name}")
print("harvest:", dict(harvest_candidates(graph, senses[0]).most_common(12)))

# The dictionary over every synset.
t0 = time.perf_counter()
d = build_disdict(graph, n_f=10, tau=0.66)
print(f"\ndictionary built in {time.perf_counter() - t0:.1f}s:", disdict_stats(d))

for sid in senses[:3]:
    print(f"\n# {sid.name}: {graph.synsets[sid].gloss}")
    for entry in d.entries[sid]:
        print(format_entry(entry))

# Lowering tau gives frequent words more weight.
flat = build_disdict(graph, n_f=10, tau=0.0)
print(f"\n{senses[0].name} with tau=0:", [e.feature_word for e in flat.entries[senses[0]]])
