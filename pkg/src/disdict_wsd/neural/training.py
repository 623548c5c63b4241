"""Joint supervised / unsupervised objective and the mini-batch SGD loop."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import Divergence
from .model import Model
from .network import (
    SYNSET,
    WORD,
    ContextBatch,
    RowGrad,
    UniformSampler,
    encode_forward,
    head_loss,
    make_batch,
    merge_grads,
    trim_batch,
    scale_grads,
)

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    lr: float = 0.1
    alpha: float = 5.0
    batch: int = 80
    mix_ratio: Tuple[float, float] = (1.0, 0.3)
    epochs: int = 10
    seed: int = 0
    steps_per_epoch: Optional[int] = None

    def __post_init__(self):
        self.mix_ratio = tuple(float(x) for x in self.mix_ratio)
        if self.lr <= 0:
            raise ValueError("lr must be > 0")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")
        if len(self.mix_ratio) != 2 or min(self.mix_ratio) < 0 or sum(self.mix_ratio) == 0:
            raise ValueError("mix_ratio must be two non-negative weights, not both zero")


@dataclass
class EncodedSet:
    """Contexts and integer targets ready for batching."""

    contexts: ContextBatch
    targets: np.ndarray

    def __len__(self):
        return len(self.targets)

    def take(self, idx) -> "EncodedSet":
        idx = np.asarray(idx)
        return EncodedSet(self.contexts.take(idx), self.targets[idx])


def encode_labeled(model: Model, instances: Sequence) -> EncodedSet:
    """Encode labeled instances; those whose synset is outside the model's synset vocabulary are dropped."""
    keep = [inst for inst in instances if inst.label.name in model.syn_index]
    batch = make_batch(model, [i.left for i in keep], [i.right for i in keep])
    targets = np.array([model.syn_index[i.label.name] for i in keep], dtype=np.int64)
    return EncodedSet(batch, targets)


def encode_pairs(model: Model, pairs: Sequence) -> EncodedSet:
    keep = [p for p in pairs if p.target in model.word_index]
    batch = make_batch(model, [p.left for p in keep], [p.right for p in keep])
    targets = np.array([model.word_index[p.target] for p in keep], dtype=np.int64)
    return EncodedSet(batch, targets)


def _as_encoded(model, data, encoder):
    if data is None:
        return None
    if isinstance(data, EncodedSet):
        return data
    return encoder(model, list(data))


def joint_loss(model: Model, supervised_batch, unsupervised_batch, alpha: float,
               sampler=None, train: bool = False, rng=None):
    """``J = J_a + alpha * J_u`` with each term a mean sampled-softmax NLL.

    Either batch may be empty/None, in which case its term is skipped.
    Returns ``(loss, grads, {"J_a": ..., "J_u": ...})``.
    """
    if sampler is None:
        sampler = UniformSampler(model.config.neg_samples, rng=np.random.default_rng(0))
    sup = _as_encoded(model, supervised_batch, encode_labeled)
    uns = _as_encoded(model, unsupervised_batch, encode_pairs)
    loss, grads, parts = 0.0, {}, {"J_a": 0.0, "J_u": 0.0}
    if sup is not None and len(sup):
        j_a, g_a = head_loss(model, sup.contexts, sup.targets, SYNSET, sampler, train, rng)
        parts["J_a"] = j_a
        loss += j_a
        grads = g_a
    if alpha > 0 and uns is not None and len(uns):
        j_u, g_u = head_loss(model, uns.contexts, uns.targets, WORD, sampler, train, rng)
        parts["J_u"] = j_u
        loss += alpha * j_u
        grads = merge_grads(grads, scale_grads(g_u, alpha))
    return loss, grads, parts


def sgd_update(model: Model, grads: Dict, lr: float) -> None:
    for name, g in grads.items():
        if name == "emb" and model.config.freeze_embeddings:
            continue
        p = model.params[name]
        if isinstance(g, RowGrad):
            p[g.ids] -= lr * g.rows
        else:
            p -= lr * g


def draw_sources(rng: np.random.Generator, n: int, mix_ratio, have_manual=True,
                 have_generated=True) -> np.ndarray:
    """Boolean per slot: True = draw from generated data."""
    w_manual = mix_ratio[0] if have_manual else 0.0
    w_gen = mix_ratio[1] if have_generated else 0.0
    if w_manual + w_gen == 0:
        raise ValueError("no labeled source available under this mix ratio")
    return rng.random(n) < (w_gen / (w_manual + w_gen))


@dataclass
class TrainLog:
    epoch_loss: List[float]
    epoch_ja: List[float]
    epoch_ju: List[float]
    steps: int = 0

    def lines(self) -> List[str]:
        return [f"{i + 1}\t{l!r}\t{a!r}\t{u!r}"
                for i, (l, a, u) in enumerate(zip(self.epoch_loss, self.epoch_ja, self.epoch_ju))]

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("epoch\tloss\tJ_a\tJ_u\n")
            for line in self.lines():
                fh.write(line + "\n")


def train(model: Model, manual_data, generated_data, unsup_data, tc: TrainConfig,
          sampler=None, callback=None):
    """Mini-batch gradient descent on the joint objective.

    Every step fills ``tc.batch`` supervised slots, each drawn (with replacement)
    from the manual or generated pool with odds ``mix_ratio``, and pairs them with
    an equally sized unsupervised batch.  An epoch is ``ceil(#labeled / batch)``
    steps unless ``steps_per_epoch`` is set.  Returns ``(model, TrainLog)``.
    """
    rng = np.random.default_rng(tc.seed)
    if sampler is None:
        sampler = UniformSampler(model.config.neg_samples, rng=np.random.default_rng(tc.seed + 1))
    manual = _as_encoded(model, manual_data or [], encode_labeled)
    generated = _as_encoded(model, generated_data or [], encode_labeled)
    unsup = _as_encoded(model, unsup_data or [], encode_pairs)
    n_man, n_gen = len(manual), len(generated)
    if n_man + n_gen == 0:
        raise ValueError("at least one labeled source must be non-empty")
    have_man = n_man > 0 and tc.mix_ratio[0] > 0
    have_gen = n_gen > 0 and tc.mix_ratio[1] > 0
    if not (have_man or have_gen):
        have_man, have_gen = n_man > 0, n_gen > 0
    steps = tc.steps_per_epoch or math.ceil((n_man + n_gen) / tc.batch)
    log_ = TrainLog([], [], [])
    step = 0
    for epoch in range(tc.epochs):
        tot = ja = ju = 0.0
        for _ in range(steps):
            from_gen = draw_sources(rng, tc.batch, tc.mix_ratio, have_man, have_gen)
            k_gen = int(from_gen.sum())
            parts = []
            if tc.batch - k_gen:
                parts.append(("m", rng.integers(n_man, size=tc.batch - k_gen)))
            if k_gen:
                parts.append(("g", rng.integers(n_gen, size=k_gen)))
            sup = _concat([(manual if s == "m" else generated).take(ix) for s, ix in parts])
            uns = None
            if len(unsup) and tc.alpha > 0:
                uns = unsup.take(rng.integers(len(unsup), size=tc.batch))
            loss, grads, jp = joint_loss(model, sup, uns, tc.alpha, sampler, train=True, rng=rng)
            if not np.isfinite(loss):
                raise Divergence(step, loss)
            sgd_update(model, grads, tc.lr)
            tot += loss
            ja += jp["J_a"]
            ju += jp["J_u"]
            step += 1
        log_.epoch_loss.append(tot / steps)
        log_.epoch_ja.append(ja / steps)
        log_.epoch_ju.append(ju / steps)
        log.info("epoch %d loss %.6f", epoch + 1, tot / steps)
        if callback is not None and callback(epoch, model, log_) is False:
            break
    log_.steps = step
    return model, log_


def _concat(sets: List[EncodedSet]) -> EncodedSet:
    if len(sets) == 1:
        return sets[0]
    def cat(attr):
        arrs = [getattr(s.contexts, attr) for s in sets]
        width = max(a.shape[1] for a in arrs)
        out = []
        for a in arrs:
            pad = width - a.shape[1]
            if pad:  # zeros are PAD ids / masked-out steps
                a = np.concatenate([np.zeros((a.shape[0], pad), dtype=a.dtype), a], axis=1)
            out.append(a)
        return np.concatenate(out)

    ctx = ContextBatch(cat("left_ids"), cat("left_mask"), cat("right_ids"), cat("right_mask"))
    return EncodedSet(trim_batch(ctx), np.concatenate([s.targets for s in sets]))


def predict_synsets(model: Model, data, batch_size: int = 512) -> np.ndarray:
    """Argmax synset index (over the whole synset vocabulary) per encoded instance."""
    enc = _as_encoded(model, data, encode_labeled)
    out = np.empty(len(enc), dtype=np.int64)
    for start in range(0, len(enc), batch_size):
        idx = np.arange(start, min(start + batch_size, len(enc)))
        part = enc.take(idx)
        ctx, _ = encode_forward(model, part.contexts, train=False)
        out[idx] = np.argmax(ctx @ model.params["syn_out"].T, axis=1)
    return out


def training_accuracy(model: Model, data) -> float:
    enc = _as_encoded(model, data, encode_labeled)
    if not len(enc):
        return 0.0
    return float(np.mean(predict_synsets(model, enc) == enc.targets))


__all__ = [
    "EncodedSet", "TrainConfig", "TrainLog", "draw_sources", "encode_labeled", "encode_pairs",
    "joint_loss", "predict_synsets", "sgd_update", "train", "training_accuracy",
]
