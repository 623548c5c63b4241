"""
Checking the backward pass
==========================

The encoder and both softmax heads are written by hand in numpy, so the
gradients are compared against central finite differences on a model small
enough to check every coordinate.
"""

import numpy as np

from disdict_wsd.datagen import DISDICT, LabeledInstance, UnsupervisedPair
from disdict_wsd.neural import ModelConfig, UniformSampler, build_vocab, init_model, relative_errors
from disdict_wsd.wordnet_kb import SynsetId

words = [f"w{i}" for i in range(30)]
config = ModelConfig(embed_dim=5, hidden=4, layers=2, t_window=4, dropout=0.0, fc_dim=6, ctx_dim=5,
                     vocab=build_vocab([words]), synset_vocab=[f"s{i}.n.01" for i in range(6)])
model = init_model(config, seed=0, std=0.5)
print(model.n_params(), "parameters")

rng = np.random.default_rng(0)
labeled = [LabeledInstance(tuple(rng.choice(words, 3)), tuple(rng.choice(words, 2)),
                           SynsetId.from_name(f"s{rng.integers(6)}.n.01"), DISDICT, "") for _ in range(4)]
pairs = [UnsupervisedPair(str(rng.choice(words)), tuple(rng.choice(words, 2)), tuple(rng.choice(words, 3)))
         for _ in range(4)]

errors = relative_errors(model, labeled, unsup_batch=pairs, alpha=5.0)
for name, err in errors.items():
    print(f"{name:<14} {err:.2e}")

# Same check with a sampled negative set (frozen to one draw).
sampled = relative_errors(model, labeled, unsup_batch=pairs, alpha=5.0,
                          sampler=UniformSampler(8, rng=np.random.default_rng(1)))
print("\nsampled softmax, worst tensor:", f"{max(sampled.values()):.2e}")

# A deliberately wrong gradient is caught.
def perturb(g):
    g["b2"] *= 1.05

print("b2 scaled by 1.05:", f"{relative_errors(model, labeled, pairs, 5.0, perturb=perturb)['b2']:.2e}")
