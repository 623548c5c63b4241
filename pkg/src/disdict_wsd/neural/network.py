"""Forward/backward pass of the context encoder and the two softmax heads."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .lstm import lstm_backward, lstm_forward
from .model import PAD_ID, Model

SYNSET = "SYNSET"
WORD = "WORD"
HEAD_TABLE = {SYNSET: "syn_out", WORD: "word_out"}


@dataclass
class ContextBatch:
    """Left contexts left-padded in reading order; right contexts reversed
    (farthest first) and left-padded, so both sequences end next to the target."""

    left_ids: np.ndarray
    left_mask: np.ndarray
    right_ids: np.ndarray
    right_mask: np.ndarray

    def __len__(self):
        return self.left_ids.shape[0]

    def take(self, idx) -> "ContextBatch":
        return trim_batch(ContextBatch(self.left_ids[idx], self.left_mask[idx],
                                  self.right_ids[idx], self.right_mask[idx]))


def _pad_left(seqs: List[List[int]], width: int):
    ids = np.full((len(seqs), width), PAD_ID, dtype=np.int64)
    mask = np.zeros((len(seqs), width))
    for r, seq in enumerate(seqs):
        if seq:
            ids[r, width - len(seq):] = seq
            mask[r, width - len(seq):] = 1.0
    return ids, mask


def trim_batch(batch: ContextBatch) -> ContextBatch:
    """Drop leading all-padding columns (keep at least one)."""
    def cut(ids, mask):
        used = mask.any(axis=0)
        start = int(np.argmax(used)) if used.any() else mask.shape[1] - 1
        start = min(start, mask.shape[1] - 1)
        return ids[:, start:], mask[:, start:]
    li, lm = cut(batch.left_ids, batch.left_mask)
    ri, rm = cut(batch.right_ids, batch.right_mask)
    return ContextBatch(li, lm, ri, rm)


def make_batch(model: Model, lefts: Sequence[Sequence[str]], rights: Sequence[Sequence[str]]) -> ContextBatch:
    T = model.config.t_window
    left = [model.word_ids(list(l)[-T:]) if T else [] for l in lefts]
    right = [model.word_ids(list(r)[:T][::-1]) for r in rights]
    li, lm = _pad_left(left, max(T, 1))
    ri, rm = _pad_left(right, max(T, 1))
    return trim_batch(ContextBatch(li, lm, ri, rm))


def _stack_forward(model, direction, ids, mask):
    p = model.params
    x = p["emb"][ids]
    caches = []
    for name in model.lstm_names(direction):
        x, cache = lstm_forward(x, mask, p[name + "_W"], p[name + "_b"])
        caches.append(cache)
    return x[:, -1], caches, x.shape


def _stack_backward(model, direction, dh_final, caches, out_shape, grads):
    B, L, H = out_shape
    dhs = np.zeros((B, L, H))
    dhs[:, -1] = dh_final
    for name, cache in zip(reversed(model.lstm_names(direction)), reversed(caches)):
        dx, dW, db = lstm_backward(dhs, cache)
        grads[name + "_W"] = grads.get(name + "_W", 0) + dW
        grads[name + "_b"] = grads.get(name + "_b", 0) + db
        dhs = dx
    return dhs


def encode_forward(model: Model, batch: ContextBatch, train: bool = False,
                   rng: Optional[np.random.Generator] = None):
    """Context vectors (B, d_ctx) and the cache needed by :func:`encode_backward`."""
    p = model.params
    h_l, cache_l, shape_l = _stack_forward(model, "fwd", batch.left_ids, batch.left_mask)
    h_r, cache_r, shape_r = _stack_forward(model, "bwd", batch.right_ids, batch.right_mask)
    hcat = np.concatenate([h_l, h_r], axis=1)
    rate = model.config.dropout if train else 0.0
    m1 = m2 = None
    if rate > 0:
        rng = rng if rng is not None else np.random.default_rng()
        m1 = (rng.random(hcat.shape) >= rate) / (1.0 - rate)
        hcat = hcat * m1
    a1 = hcat @ p["W1"].T + p["b1"]
    r1 = np.maximum(a1, 0.0)
    if rate > 0:
        m2 = (rng.random(r1.shape) >= rate) / (1.0 - rate)
        r1 = r1 * m2
    a2 = r1 @ p["W2"].T + p["b2"]
    ctx = np.maximum(a2, 0.0)
    cache = (batch, cache_l, shape_l, cache_r, shape_r, hcat, m1, a1, r1, m2, a2)
    return ctx, cache


def encode_backward(model: Model, cache, dctx: np.ndarray, grads: Dict) -> None:
    """Accumulate parameter gradients of the encoder into ``grads``."""
    p = model.params
    batch, cache_l, shape_l, cache_r, shape_r, hcat, m1, a1, r1, m2, a2 = cache
    da2 = dctx * (a2 > 0)
    _acc(grads, "W2", da2.T @ r1)
    _acc(grads, "b2", da2.sum(axis=0))
    dr1 = da2 @ p["W2"]
    if m2 is not None:
        dr1 = dr1 * m2
    da1 = dr1 * (a1 > 0)
    _acc(grads, "W1", da1.T @ hcat)
    _acc(grads, "b1", da1.sum(axis=0))
    dhcat = da1 @ p["W1"]
    if m1 is not None:
        dhcat = dhcat * m1
    H = model.config.hidden
    dx_l = _stack_backward(model, "fwd", dhcat[:, :H], cache_l, shape_l, grads)
    dx_r = _stack_backward(model, "bwd", dhcat[:, H:], cache_r, shape_r, grads)
    ids = np.concatenate([batch.left_ids.ravel(), batch.right_ids.ravel()])
    rows = np.concatenate([dx_l.reshape(-1, dx_l.shape[-1]), dx_r.reshape(-1, dx_r.shape[-1])])
    add_rows(grads, "emb", ids, rows)


def _acc(grads, name, value):
    if name in grads:
        grads[name] = grads[name] + value
    else:
        grads[name] = value


class RowGrad:
    """Sparse gradient of an embedding-like table: unique row ids and their summed rows."""

    __slots__ = ("ids", "rows")

    def __init__(self, ids, rows):
        uniq, inv = np.unique(ids, return_inverse=True)
        summed = np.zeros((len(uniq), rows.shape[1]))
        np.add.at(summed, inv, rows)
        self.ids, self.rows = uniq, summed

    def merge(self, other: "RowGrad") -> "RowGrad":
        return RowGrad(np.concatenate([self.ids, other.ids]), np.concatenate([self.rows, other.rows]))

    def dense(self, shape) -> np.ndarray:
        out = np.zeros(shape)
        out[self.ids] = self.rows
        return out

    def scaled(self, k: float) -> "RowGrad":
        g = RowGrad.__new__(RowGrad)
        g.ids, g.rows = self.ids, self.rows * k
        return g


def add_rows(grads, name, ids, rows):
    g = RowGrad(ids, rows)
    grads[name] = grads[name].merge(g) if name in grads else g


def scale_grads(grads: Dict, k: float) -> Dict:
    return {n: (g.scaled(k) if isinstance(g, RowGrad) else g * k) for n, g in grads.items()}


def merge_grads(a: Dict, b: Dict) -> Dict:
    out = dict(a)
    for n, g in b.items():
        if n not in out:
            out[n] = g
        elif isinstance(g, RowGrad):
            out[n] = out[n].merge(g)
        else:
            out[n] = out[n] + g
    return out


def dense_grads(model: Model, grads: Dict) -> Dict[str, np.ndarray]:
    out = {}
    for name, value in model.params.items():
        g = grads.get(name)
        if g is None:
            out[name] = np.zeros_like(value)
        elif isinstance(g, RowGrad):
            out[name] = g.dense(value.shape)
        else:
            out[name] = np.asarray(g, dtype=float)
    return out


# --------------------------------------------------------------------------
# Output heads
# --------------------------------------------------------------------------

def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    z = logits - logits.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def head_distribution(model: Model, ctx: np.ndarray, head: str = SYNSET) -> np.ndarray:
    """Full softmax over the synset (or word) output table; works on (d,) or (B, d)."""
    table = model.params[HEAD_TABLE[head]]
    return softmax(ctx @ table.T)


def full_softmax_loss(ctx: np.ndarray, table: np.ndarray, targets: np.ndarray) -> float:
    logits = ctx @ table.T
    m = logits.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(logits - m).sum(axis=1))
    return float(np.mean(lse - logits[np.arange(len(targets)), targets]))


class UniformSampler:
    """Negative classes drawn uniformly without replacement, shared across a batch.

    ``exact=True`` (or ``k >= n_classes``) returns every class with expected count
    1, which turns the sampled loss into the full softmax loss.
    """

    def __init__(self, k: int, rng: Optional[np.random.Generator] = None, exact: bool = False):
        self.k = k
        self.exact = exact
        self.rng = rng if rng is not None else np.random.default_rng(0)

    def sample(self, n_classes: int) -> Tuple[np.ndarray, np.ndarray, float]:
        """Returns (candidate ids, log expected count of each, log expected count of any true class)."""
        if self.exact or self.k >= n_classes:
            return np.arange(n_classes), np.zeros(n_classes), 0.0
        cand = np.sort(self.rng.choice(n_classes, size=self.k, replace=False))
        log_q = np.log(self.k / n_classes)
        return cand, np.full(self.k, log_q), log_q


class FixedSampler:
    """Replays one candidate draw; used to keep the loss a fixed function for finite differences."""

    def __init__(self, inner):
        self.inner = inner
        self._draws = {}

    def sample(self, n_classes):
        if n_classes not in self._draws:
            self._draws[n_classes] = self.inner.sample(n_classes)
        return self._draws[n_classes]


def sampled_softmax_loss(ctx, table, targets, cand, log_q_cand, log_q_true):
    """Mean sampled-softmax NLL.

    Logits are corrected by the log expected count of each class; a sampled
    candidate equal to a row's true class is masked out for that row.
    Returns ``(loss, dctx, (row ids, row grads))``.
    """
    B = len(targets)
    true_w = table[targets]
    cand_w = table[cand]
    true_logit = np.einsum("bd,bd->b", ctx, true_w) - log_q_true
    cand_logit = ctx @ cand_w.T - log_q_cand[None, :]
    cand_logit[cand[None, :] == targets[:, None]] = -np.inf
    logits = np.concatenate([true_logit[:, None], cand_logit], axis=1)
    m = logits.max(axis=1, keepdims=True)
    e = np.exp(logits - m)
    z = e.sum(axis=1, keepdims=True)
    loss = float(np.mean(np.log(z[:, 0]) + m[:, 0] - true_logit))
    d = e / z
    d[:, 0] -= 1.0
    d /= B
    dctx = d[:, :1] * true_w + d[:, 1:] @ cand_w
    row_ids = np.concatenate([targets, cand])
    row_grads = np.concatenate([d[:, :1] * ctx, d[:, 1:].T @ ctx])
    return loss, dctx, (row_ids, row_grads)


def head_loss(model: Model, batch: ContextBatch, targets: np.ndarray, head: str,
              sampler, train: bool, rng=None):
    """Encoder + one head: returns (loss, grads)."""
    table_name = HEAD_TABLE[head]
    table = model.params[table_name]
    ctx, cache = encode_forward(model, batch, train=train, rng=rng)
    cand, log_q_cand, log_q_true = sampler.sample(table.shape[0])
    loss, dctx, (ids, rows) = sampled_softmax_loss(ctx, table, targets, cand, log_q_cand, log_q_true)
    grads: Dict = {}
    add_rows(grads, table_name, ids, rows)
    encode_backward(model, cache, dctx, grads)
    return loss, grads
