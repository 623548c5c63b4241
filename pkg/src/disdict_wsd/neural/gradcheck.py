"""Finite-difference check of the hand-written backward pass."""

from typing import Callable, Dict, Optional

import numpy as np

from .network import FixedSampler, UniformSampler, dense_grads
from .training import encode_labeled, encode_pairs, joint_loss


def relative_errors(model, tiny_batch, unsup_batch=None, alpha: float = 1.0, eps: float = 1e-5,
                    sampler=None, perturb: Optional[Callable[[Dict[str, np.ndarray]], None]] = None,
                    max_coords: Optional[int] = None, seed: int = 0) -> Dict[str, float]:
    """Per-parameter ``|g_analytic - g_numeric| / (|g_analytic| + |g_numeric|)`` (vector norms).

    Runs in eval mode (no dropout).  ``sampler`` defaults to the exact (all
    classes) mode; any sampler is frozen to a single draw so the loss is a fixed
    function.  ``perturb`` may edit the analytic gradients in place before the
    comparison (negative control).  ``max_coords`` caps the checked coordinates
    per tensor (a seeded random subset).
    """
    for name, p in model.params.items():
        if p.dtype != np.float64:
            raise TypeError(f"parameter {name} is {p.dtype}, gradient check needs float64")
    if tiny_batch is not None:
        tiny_batch = encode_labeled(model, tiny_batch) if isinstance(tiny_batch, list) else tiny_batch
    if unsup_batch is not None:
        unsup_batch = encode_pairs(model, unsup_batch) if isinstance(unsup_batch, list) else unsup_batch
    sampler = FixedSampler(sampler if sampler is not None else UniformSampler(0, exact=True))

    def loss_fn():
        return joint_loss(model, tiny_batch, unsup_batch, alpha, sampler, train=False)[0]

    _, grads, _ = joint_loss(model, tiny_batch, unsup_batch, alpha, sampler, train=False)
    analytic = dense_grads(model, grads)
    if perturb is not None:
        perturb(analytic)

    rng = np.random.default_rng(seed)
    errors = {}
    for name in sorted(model.params):
        p = model.params[name]
        flat = p.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = np.sort(rng.choice(flat.size, size=max_coords, replace=False))
        num = np.zeros(len(coords))
        for k, i in enumerate(coords):
            orig = flat[i]
            flat[i] = orig + eps
            up = loss_fn()
            flat[i] = orig - eps
            down = loss_fn()
            flat[i] = orig
            num[k] = (up - down) / (2 * eps)
        ana = analytic[name].reshape(-1)[coords]
        denom = np.linalg.norm(ana) + np.linalg.norm(num)
        errors[name] = 0.0 if denom == 0 else float(np.linalg.norm(ana - num) / denom)
    return errors


def gradient_check(model, tiny_batch, **kwargs) -> float:
    """Max relative error over all parameter tensors (see :func:`relative_errors`)."""
    return max(relative_errors(model, tiny_batch, **kwargs).values())
