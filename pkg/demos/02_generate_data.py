"""
Sense-labeled data from the dictionary
======================================

A small synthetic world: ten nouns with two senses each, every sense having
two unambiguous synonyms and a handful of topical cue words.  The raw corpus
never says which sense an ambiguous word takes, but the synonyms are
dictionary feature words, so their contexts can be labeled automatically.
"""

import tempfile
from collections import Counter

from disdict_wsd.datagen import (
    allocate_quota,
    extract_unsupervised_pairs,
    generate_instances,
    load_corpus,
    synset_frequency_model,
)
from disdict_wsd.disdict import build_disdict
from disdict_wsd.synthetic import build_mini_world
from disdict_wsd.wordnet_kb import parse_wordnet

world = build_mini_world(tempfile.mkdtemp(prefix="mini-"), seed=0)
graph = parse_wordnet(world.wordnet)
d = build_disdict(graph)
sentences, stats = load_corpus(world.corpus, graph)
print(f"{len(sentences)} corpus sentences, {stats.token_total} tokens")

crane_bird = graph.sid(world.names[("crane", 1)])
print("\nfeature words of", crane_bird.name, [(e.feature_word, round(e.confidence, 3))
                                             for e in d.entries[crane_bird]])

# How many instances each synset should get.  Rank-1 senses get the larger share.
f = synset_frequency_model(d, graph, stats, p=0.3, budget=1200)
print("\nestimated counts:", {s.name: n for s, n in sorted(f.items())[:6]}, "...")
quota = allocate_quota(f, d)

instances, summary = generate_instances(sentences, d, quota, t_window=8, seed=0, graph=graph)
print(f"\n{len(instances)} labeled instances; emitted/requested =",
      sum(r.emitted for r in summary), "/", sum(r.requested for r in summary))
print("instances per label:", Counter(i.label.name for i in instances).most_common(4))

for inst in instances[:3]:
    print(f"  {' '.join(inst.left)} [{inst.matched_word} -> {inst.label.name}] {' '.join(inst.right)}")

# Unlabeled pairs teach the encoder to predict feature words from context.
pairs = extract_unsupervised_pairs(sentences, d.feature_vocab(), t_window=8, graph=graph)
print(f"\n{len(pairs)} unsupervised pairs, e.g. target={pairs[0].target!r}")
